#include "kgads/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgads/csv.hpp"
#include "kgads/error.hpp"

namespace kgads {

namespace {

CoefficientFunction load_table(const nlohmann::json& j, const char* key,
                               const std::filesystem::path& base_dir) {
    if (!j.contains(key)) return CoefficientFunction::constant(1.0);
    const auto& v = j.at(key);
    if (v.is_number()) return CoefficientFunction::constant(v.get<double>());
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    const auto rows = csv::read_numeric(p);
    std::vector<double> xs, vals;
    for (const auto& r : rows) {
        if (r.size() < 2) throw PreconditionError(std::string(key) + ": rows need (x, value)");
        xs.push_back(r[0]);
        vals.push_back(r[1]);
    }
    return CoefficientFunction::from_table(std::move(xs), std::move(vals));
}

}  // namespace

MetricModel model_from_json_text(const std::string& text, const std::filesystem::path& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("model config parse error: ") + e.what());
    }
    try {
        const std::string kind_name = j.value("kind", std::string("ads2_strip"));
        const ModelKind kind = model_kind_from_string(kind_name);
        require(j.contains("nu"), "model config: missing key 'nu'");
        const double nu = j.at("nu").get<double>();
        const double L = j.value("L", 1.0);
        std::optional<double> ell;
        if (j.contains("ell") && !j.at("ell").is_null()) ell = j.at("ell").get<double>();
        if (kind != ModelKind::custom) {
            if (j.contains("n")) {
                const int n = j.at("n").get<int>();
                const int expected = kind == ModelKind::ads2_strip ? 2 : 3;
                require(n == expected, "model config: n inconsistent with kind " + kind_name);
            }
            return make_toy_model(kind, nu, L, ell);
        }
        require(j.contains("n"), "model config: custom models need 'n'");
        const int n = j.at("n").get<int>();
        return make_custom_model(n, nu, L, ell, load_table(j, "beta_table", base_dir),
                                 load_table(j, "k_table", base_dir));
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("model config: ") + e.what());
    }
}

MetricModel load_model_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open model config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_text(ss.str(), path.parent_path());
}

}  // namespace kgads
