#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "kgads/binary_io.hpp"
#include "kgads/csv.hpp"
#include "kgads/error.hpp"
#include "kgads/report.hpp"
#include "kgads/verify.hpp"

using namespace kgads;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const SpectralModel> model() {
    static const auto s = [] {
        SpectralOptions o;
        o.N = 200;
        o.n_modes = 10;
        return build_spectral(make_toy_model(ModelKind::ads2_strip, 1.0, 1.0), o);
    }();
    return s;
}

}  // namespace

TEST(BinaryIo, ModelRoundTripIsExact) {
    std::stringstream buf;
    binary::write_model(buf, *model());
    const auto back = binary::read_model(buf);
    ASSERT_EQ(back->N(), model()->N());
    EXPECT_EQ(back->x(), model()->x());
    EXPECT_EQ(back->weights(), model()->weights());
    EXPECT_EQ(back->sector(0).omega2, model()->sector(0).omega2);
    EXPECT_EQ(back->sector(0).phi, model()->sector(0).phi);
    EXPECT_EQ(back->model().nu(), 1.0);
    EXPECT_EQ(back->m2_floor(), model()->m2_floor());
}

TEST(BinaryIo, CustomModelReloadsItsCoefficients) {
    const auto m = make_custom_model(2, 0.7, 1.0, std::nullopt,
                                     CoefficientFunction::from_closure([](double x) { return 1.0 + 0.5 * x; }),
                                     CoefficientFunction::constant(1.0));
    SpectralOptions o;
    o.N = 128;
    o.n_modes = 8;
    const auto s = build_spectral(m, o);
    std::stringstream buf;
    binary::write_model(buf, *s);
    const auto back = binary::read_model(buf);
    EXPECT_EQ(back->model().kind(), ModelKind::custom);
    EXPECT_NEAR(back->model().beta()(0.3), 1.15, 1e-6);
    EXPECT_EQ(back->sector(0).omega2, s->sector(0).omega2);
}

TEST(BinaryIo, KernelRoundTrip) {
    const auto k = make_propagator(model(), KernelKind::lambda_plus, TimeGrid{0.0, 0.02, 64}, Weighting::physical);
    std::stringstream buf;
    binary::write_kernel(buf, k);
    const auto back = binary::read_kernel(buf);
    EXPECT_EQ(back.kind(), KernelKind::lambda_plus);
    EXPECT_EQ(back.weighting(), Weighting::physical);
    EXPECT_EQ(back.grid(), k.grid());
    ASSERT_EQ(back.terms().size(), k.terms().size());
    EXPECT_EQ(back.value(0, 0.3, 10, 0.1, 40), k.value(0, 0.3, 10, 0.1, 40));
}

TEST(BinaryIo, RejectsCorruptInput) {
    std::stringstream good;
    binary::write_model(good, *model());
    const std::string bytes = good.str();

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream a(bad_magic);
    EXPECT_THROW(binary::read_model(a), PreconditionError);

    std::stringstream b(bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(binary::read_model(b), PreconditionError);

    std::string bad_version = bytes;
    bad_version[8] = 9;
    std::stringstream c(bad_version);
    EXPECT_THROW(binary::read_model(c), PreconditionError);

    std::stringstream d(bytes);
    EXPECT_THROW(binary::read_kernel(d), PreconditionError);

    EXPECT_THROW(binary::load_model("/nonexistent/model.bin"), PreconditionError);
}

TEST(BinaryIo, FileRoundTrip) {
    const fs::path p = fs::temp_directory_path() / "kgads_test_model.bin";
    binary::save_model(p, *model());
    const auto back = binary::load_model(p);
    EXPECT_EQ(back->sector(0).omega2, model()->sector(0).omega2);
    fs::remove(p);
}

TEST(Csv, QuotingAndNumbers) {
    EXPECT_EQ(csv::quote("plain"), "plain");
    EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
    EXPECT_EQ(csv::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv::quote("two\nlines"), "\"two\nlines\"");
    EXPECT_EQ(csv::format_double(0.1), "0.1");
    EXPECT_EQ(std::stod(csv::format_double(M_PI)), M_PI);
    std::ostringstream out;
    csv::Writer w(out);
    w.header({"a", "b"});
    w.field(1.5).field(std::string_view("x,y"));
    w.end_row();
    EXPECT_EQ(out.str(), "a,b\r\n1.5,\"x,y\"\r\n");
}

TEST(Csv, ReadNumericSkipsHeader) {
    const fs::path p = fs::temp_directory_path() / "kgads_test_table.csv";
    {
        std::ofstream f(p);
        f << "x,value\n0,1\n0.5,2.5\n";
    }
    const auto rows = csv::read_numeric(p);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][1], 2.5);
    fs::remove(p);
}

TEST(Report, PassLogicAndJson) {
    Report r;
    r.add("a", "identity", 1e-13, 1e-12);
    r.add("b", "identity", 2.0, 1.9, Comparison::at_least);
    r.add("c", "identity", std::numeric_limits<double>::quiet_NaN(), 1.0);
    r.add_flag("d", "identity", false);
    EXPECT_TRUE(r.records()[0].pass);
    EXPECT_TRUE(r.records()[1].pass);
    EXPECT_FALSE(r.records()[2].pass);
    EXPECT_FALSE(r.all_pass());
    EXPECT_EQ(r.failures(), (std::vector<std::string>{"c", "d"}));
    const auto j = nlohmann::json::parse(r.to_json());
    EXPECT_EQ(j["passed"], 2);
    EXPECT_EQ(j["failed"], 2);
    EXPECT_EQ(j["checks"][2]["value"], "nan");
    EXPECT_EQ(j["checks"][1]["comparison"], ">=");
    EXPECT_EQ(r.to_json(), r.to_json());
}

TEST(RunConfig, ParsesAndValidates) {
    const auto c = run_config_from_json_text(
        R"({"model": {"kind": "ads2_strip", "nu": 2.5}, "numerics": {"N": 800, "n_modes": 30}, "seed": 4})");
    EXPECT_EQ(c.N, 800);
    EXPECT_EQ(c.n_modes, 30);
    EXPECT_EQ(c.seed, 4u);
    EXPECT_EQ(c.model.nu(), 2.5);
    EXPECT_THROW(run_config_from_json_text(R"({"model": {"kind": "ads2_strip", "nu": 1}, "mystery": 1})"),
                 PreconditionError);
    EXPECT_THROW(run_config_from_json_text(R"({"tolerances": {"scan": -1}})"), PreconditionError);
    EXPECT_THROW(run_config_from_json_text(R"({"numerics": {"N": 32}})"), PreconditionError);
    EXPECT_THROW(run_config_from_json_text("[1, 2"), PreconditionError);
}
