#include "kgads/sem.hpp"

#include <cmath>
#include <numbers>

#include "kgads/error.hpp"

namespace kgads::sem {

namespace {

// Legendre P_p and its derivative at x.
void legendre(int p, double x, double& value, double& deriv) {
    double pm1 = 1.0;
    double pk = x;
    if (p == 0) {
        value = 1.0;
        deriv = 0.0;
        return;
    }
    for (int k = 1; k < p; ++k) {
        const double pk1 = ((2.0 * k + 1.0) * x * pk - k * pm1) / (k + 1.0);
        pm1 = pk;
        pk = pk1;
    }
    value = pk;
    deriv = p * (pm1 - x * pk) / (1.0 - x * x);
}

}  // namespace

GllRule gll_rule(int p) {
    require(p >= 1, "GLL degree must be >= 1");
    GllRule r;
    r.degree = p;
    r.nodes.resize(p + 1);
    r.weights.resize(p + 1);
    r.nodes(0) = -1.0;
    r.nodes(p) = 1.0;
    // interior nodes are the roots of P_p'; Newton on q(x) = (1 - x^2) P_p'(x)
    for (int j = 1; j < p; ++j) {
        double x = -std::cos(std::numbers::pi * j / p);
        for (int it = 0; it < 100; ++it) {
            double v, d;
            legendre(p, x, v, d);
            // (1 - x^2) P'' = 2x P' - p(p+1) P
            const double d2 = (2.0 * x * d - p * (p + 1.0) * v) / (1.0 - x * x);
            const double dx = d / d2;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes(j) = x;
    }
    Eigen::VectorXd pv(p + 1);
    for (int j = 0; j <= p; ++j) {
        double v, d;
        if (j == 0) {
            v = (p % 2 == 0) ? 1.0 : -1.0;
        } else if (j == p) {
            v = 1.0;
        } else {
            legendre(p, r.nodes(j), v, d);
        }
        pv(j) = v;
        r.weights(j) = 2.0 / (p * (p + 1.0) * v * v);
    }
    r.diff = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (int i = 0; i <= p; ++i) {
        for (int j = 0; j <= p; ++j) {
            if (i != j) r.diff(i, j) = pv(i) / (pv(j) * (r.nodes(i) - r.nodes(j)));
        }
    }
    r.diff(0, 0) = -p * (p + 1.0) / 4.0;
    r.diff(p, p) = p * (p + 1.0) / 4.0;
    return r;
}

int Mesh::global_index(int e, int j) const {
    const int g = e * degree + j - 1;
    if (g < 0 || g >= dof()) return -1;
    return g;
}

double Mesh::node_x(int e, int j) const {
    const double a = vertices[e];
    const double b = vertices[e + 1];
    return a + 0.5 * (b - a) * (rule.nodes(j) + 1.0);
}

Mesh make_mesh(int elements, int degree, double L, double grading) {
    require(elements >= 1, "mesh needs at least one element");
    require(grading >= 1.0, "grading exponent must be >= 1");
    Mesh m;
    m.elements = elements;
    m.degree = degree;
    m.grading = grading;
    m.L = L;
    m.rule = gll_rule(degree);
    m.vertices.resize(elements + 1);
    for (int e = 0; e <= elements; ++e)
        m.vertices[e] = L * std::pow(static_cast<double>(e) / elements, grading);
    m.vertices[elements] = L;
    return m;
}

int elements_for_dof(int dof, int degree) { return (dof + 1 + degree - 1) / degree; }

Eigen::VectorXd node_coordinates(const Mesh& mesh) {
    Eigen::VectorXd x(mesh.dof());
    for (int e = 0; e < mesh.elements; ++e)
        for (int j = 0; j <= mesh.degree; ++j) {
            const int g = mesh.global_index(e, j);
            if (g >= 0) x(g) = mesh.node_x(e, j);
        }
    return x;
}

Eigen::VectorXd lumped_mass(const Mesh& mesh) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(mesh.dof());
    for (int e = 0; e < mesh.elements; ++e) {
        const double half = 0.5 * mesh.element_length(e);
        for (int j = 0; j <= mesh.degree; ++j) {
            const int g = mesh.global_index(e, j);
            if (g >= 0) w(g) += half * mesh.rule.weights(j);
        }
    }
    return w;
}

Eigen::VectorXd derivative(const Mesh& mesh, const Eigen::VectorXd& u) {
    require(u.size() == mesh.dof(), "derivative: vector size does not match mesh");
    const int p = mesh.degree;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.dof());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(mesh.dof());
    Eigen::VectorXd local(p + 1);
    for (int e = 0; e < mesh.elements; ++e) {
        for (int j = 0; j <= p; ++j) {
            const int g = mesh.global_index(e, j);
            local(j) = g >= 0 ? u(g) : 0.0;
        }
        const Eigen::VectorXd d = mesh.rule.diff * local * (2.0 / mesh.element_length(e));
        for (int j = 0; j <= p; ++j) {
            const int g = mesh.global_index(e, j);
            if (g < 0) continue;
            out(g) += d(j);
            count(g) += 1.0;
        }
    }
    return out.cwiseQuotient(count);
}

}  // namespace kgads::sem
