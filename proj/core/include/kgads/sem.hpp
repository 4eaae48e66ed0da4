#pragma once

#include <vector>

#include <Eigen/Dense>

namespace kgads::sem {

/// Gauss-Lobatto-Legendre rule of polynomial degree p on [-1, 1]:
/// p + 1 nodes, weights, and the nodal differentiation matrix.
struct GllRule {
    int degree = 0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    Eigen::MatrixXd diff;
};

GllRule gll_rule(int degree);

/// Spectral-element mesh of (0, L) with vertices graded as L (e/E)^gamma.
/// The Dirichlet end nodes x = 0 and x = L are not degrees of freedom.
struct Mesh {
    int elements = 0;
    int degree = 0;
    double grading = 2.0;
    double L = 1.0;
    std::vector<double> vertices;
    GllRule rule;

    int dof() const { return elements * degree - 1; }
    /// Global dof index of local node j in element e, or -1 for an end node.
    int global_index(int e, int j) const;
    double element_length(int e) const { return vertices[e + 1] - vertices[e]; }
    double node_x(int e, int j) const;
};

Mesh make_mesh(int elements, int degree, double L, double grading);

/// Smallest element count giving at least `dof` interior nodes.
int elements_for_dof(int dof, int degree);

/// Node coordinates and lumped (GLL) quadrature weights of the interior dofs.
Eigen::VectorXd node_coordinates(const Mesh& mesh);
Eigen::VectorXd lumped_mass(const Mesh& mesh);

/// Nodal derivative of a dof vector (zero Dirichlet values at both ends);
/// element-local derivatives are averaged at shared vertices.
Eigen::VectorXd derivative(const Mesh& mesh, const Eigen::VectorXd& u);

}  // namespace kgads::sem
