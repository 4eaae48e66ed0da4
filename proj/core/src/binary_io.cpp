#include "kgads/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "kgads/error.hpp"
#include "kgads/sem.hpp"

namespace kgads::binary {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void u32(std::uint32_t v) { raw(to_little(v)); }
    void i32(std::int32_t v) { raw(to_little(v)); }
    void f64(double v) { raw(to_little(std::bit_cast<std::uint64_t>(v))); }
    void vec(const Eigen::VectorXd& v) {
        i32(static_cast<std::int32_t>(v.size()));
        for (int i = 0; i < v.size(); ++i) f64(v(i));
    }
    void doubles(const std::vector<double>& v) {
        i32(static_cast<std::int32_t>(v.size()));
        for (double d : v) f64(d);
    }

private:
    template <typename T>
    void raw(T v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
        if (!out_) throw PreconditionError("binary write failed");
    }
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}
    std::uint32_t u32() { return to_little(raw<std::uint32_t>()); }
    std::int32_t i32() { return to_little(raw<std::int32_t>()); }
    double f64() { return std::bit_cast<double>(to_little(raw<std::uint64_t>())); }
    std::int32_t count(std::int32_t limit = 1 << 28) {
        const std::int32_t n = i32();
        if (n < 0 || n > limit) throw PreconditionError("corrupt binary file (bad length field)");
        return n;
    }
    Eigen::VectorXd vec() {
        const int n = count();
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = f64();
        return v;
    }
    std::vector<double> doubles() {
        const int n = count();
        std::vector<double> v(n);
        for (auto& d : v) d = f64();
        return v;
    }

private:
    template <typename T>
    T raw() {
        T v;
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw PreconditionError("truncated binary file");
        return v;
    }
    std::istream& in_;
};

void write_envelope(Writer& w, std::ostream& out, Payload p) {
    out.write(kMagic, sizeof(kMagic));
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(p));
}

void read_envelope(Reader& r, std::istream& in, Payload expected) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw PreconditionError("not a kgads binary file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw PreconditionError("unsupported kgads binary version " + std::to_string(version));
    const std::uint32_t kind = r.u32();
    if (kind != static_cast<std::uint32_t>(expected))
        throw PreconditionError("binary file holds payload kind " + std::to_string(kind) + ", expected " +
                                std::to_string(static_cast<std::uint32_t>(expected)));
}

void write_model_payload(Writer& w, const SpectralModel& s) {
    const MetricModel& m = s.model();
    w.i32(m.n());
    w.f64(m.nu());
    w.f64(m.L());
    w.i32(s.N());
    w.i32(s.n_modes());
    w.i32(static_cast<std::int32_t>(m.kind()));
    w.i32(m.ell() ? 1 : 0);
    w.f64(m.ell().value_or(0.0));
    w.i32(m.beta().is_constant() && m.k_metric().is_constant() ? 1 : 0);
    w.doubles(m.sample_x());
    w.doubles(m.beta_samples());
    w.doubles(m.k_samples());
    const sem::Mesh& mesh = s.mesh();
    w.i32(mesh.elements);
    w.i32(mesh.degree);
    w.f64(mesh.grading);
    w.f64(s.tol_eig());
    w.vec(s.x());
    w.vec(s.weights());
    w.i32(static_cast<std::int32_t>(s.sectors().size()));
    for (const auto& sec : s.sectors()) {
        w.i32(sec.m);
        w.f64(sec.transverse_eigenvalue);
        w.vec(sec.omega2);
        w.i32(static_cast<std::int32_t>(sec.phi.cols()));
        for (int c = 0; c < sec.phi.cols(); ++c)
            for (int r = 0; r < sec.phi.rows(); ++r) w.f64(sec.phi(r, c));
    }
}

std::shared_ptr<const SpectralModel> read_model_payload(Reader& r) {
    const int n = r.i32();
    const double nu = r.f64();
    const double L = r.f64();
    const int N = r.count();
    const int n_modes = r.count();
    const auto kind = static_cast<ModelKind>(r.i32());
    const bool has_ell = r.i32() != 0;
    const double ell_v = r.f64();
    const bool constant = r.i32() != 0;
    std::vector<double> xs = r.doubles();
    std::vector<double> bs = r.doubles();
    std::vector<double> ks = r.doubles();
    std::optional<double> ell;
    if (has_ell) ell = ell_v;
    MetricModel model = [&] {
        if (kind == ModelKind::ads2_strip || kind == ModelKind::ads3_cylinder) return make_toy_model(kind, nu, L, ell);
        require(kind == ModelKind::custom, "corrupt binary file (unknown model kind)");
        if (constant)
            return make_custom_model(n, nu, L, ell, CoefficientFunction::constant(bs.front()),
                                     CoefficientFunction::constant(ks.front()));
        return make_custom_model(n, nu, L, ell, CoefficientFunction::from_table(xs, bs),
                                 CoefficientFunction::from_table(xs, ks));
    }();
    const int elements = r.count();
    const int degree = r.count(64);
    const double grading = r.f64();
    const double tol = r.f64();
    sem::Mesh mesh = sem::make_mesh(elements, degree, L, grading);
    const Eigen::VectorXd x = r.vec();
    const Eigen::VectorXd wts = r.vec();
    require(x.size() == N && wts.size() == N && mesh.dof() == N, "corrupt binary file (grid size mismatch)");
    const int S = r.count(4096);
    std::vector<TransverseSector> sectors(S);
    for (auto& sec : sectors) {
        sec.m = r.i32();
        sec.transverse_eigenvalue = r.f64();
        sec.omega2 = r.vec();
        const int cols = r.count();
        require(cols == sec.omega2.size() && cols == n_modes, "corrupt binary file (mode count mismatch)");
        sec.phi.resize(N, cols);
        for (int c = 0; c < cols; ++c)
            for (int i = 0; i < N; ++i) sec.phi(i, c) = r.f64();
    }
    auto s = std::make_shared<const SpectralModel>(std::move(model), std::move(mesh), std::move(sectors), tol);
    require((s->x() - x).cwiseAbs().maxCoeff() <= 1e-12 * L, "corrupt binary file (grid does not match its mesh)");
    return s;
}

}  // namespace

void write_model(std::ostream& out, const SpectralModel& s) {
    Writer w(out);
    write_envelope(w, out, Payload::spectral_model);
    write_model_payload(w, s);
}

std::shared_ptr<const SpectralModel> read_model(std::istream& in) {
    Reader r(in);
    read_envelope(r, in, Payload::spectral_model);
    return read_model_payload(r);
}

void write_kernel(std::ostream& out, const BiKernel& k) {
    Writer w(out);
    write_envelope(w, out, Payload::kernel);
    write_model_payload(w, k.spectral());
    w.f64(k.grid().t0);
    w.f64(k.grid().dt);
    w.i32(k.grid().T);
    w.i32(static_cast<std::int32_t>(k.kind()));
    w.i32(static_cast<std::int32_t>(k.weighting()));
    w.i32(static_cast<std::int32_t>(k.terms().size()));
    for (const auto& t : k.terms()) {
        w.i32(t.m);
        w.i32(t.mode);
        w.f64(t.amplitude.real());
        w.f64(t.amplitude.imag());
        w.i32(t.sign_t);
        w.i32(t.sign_s);
        w.i32(static_cast<std::int32_t>(t.support));
    }
}

BiKernel read_kernel(std::istream& in) {
    Reader r(in);
    read_envelope(r, in, Payload::kernel);
    auto s = read_model_payload(r);
    TimeGrid g;
    g.t0 = r.f64();
    g.dt = r.f64();
    g.T = r.count();
    const int kind = r.i32();
    const int weighting = r.i32();
    require(kind >= 0 && kind <= static_cast<int>(KernelKind::combination) && (weighting == 0 || weighting == 1),
            "corrupt binary file (bad kernel tags)");
    const int n = r.count();
    std::vector<ModeTerm> terms(n);
    for (auto& t : terms) {
        t.m = r.i32();
        t.mode = r.i32();
        const double re = r.f64();
        const double im = r.f64();
        t.amplitude = {re, im};
        t.sign_t = r.i32();
        t.sign_s = r.i32();
        const int sup = r.i32();
        require(sup >= 0 && sup <= 2, "corrupt binary file (bad support tag)");
        t.support = static_cast<Support>(sup);
    }
    return BiKernel(std::move(s), g, static_cast<KernelKind>(kind), static_cast<Weighting>(weighting), std::move(terms));
}

void save_model(const std::filesystem::path& path, const SpectralModel& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    write_model(out, s);
}

std::shared_ptr<const SpectralModel> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open " + path.string());
    return read_model(in);
}

void save_kernel(const std::filesystem::path& path, const BiKernel& k) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write " + path.string());
    write_kernel(out, k);
}

BiKernel load_kernel(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open " + path.string());
    return read_kernel(in);
}

}  // namespace kgads::binary
