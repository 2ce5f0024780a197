#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablab/coeff.hpp"
#include "stablab/mesh.hpp"

namespace stablab {

using SpMat = Eigen::SparseMatrix<double>;
using ScalarFn = std::function<double(double)>;

// Nodal P1 field, optionally carrying recovered derivatives: per-node
// gradient (N x 2) and symmetric Hessian (N x 3, packed xx, xy, yy).
struct Field {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd values;
  std::optional<Eigen::Matrix<double, Eigen::Dynamic, 2>> gradient;
  std::optional<Eigen::Matrix<double, Eigen::Dynamic, 3>> hessian;

  bool has_derivatives() const {
    return gradient.has_value() && hessian.has_value();
  }
  Eigen::Vector2d grad_at(int i) const { return gradient->row(i).transpose(); }
  Eigen::Matrix2d hess_at(int i) const {
    Eigen::Matrix2d H;
    H << (*hessian)(i, 0), (*hessian)(i, 1), (*hessian)(i, 1), (*hessian)(i, 2);
    return H;
  }
};

Field make_field(const Mesh& mesh, double value = 0.0);
Field make_field(const Mesh& mesh,
                 const std::function<double(const Eigen::Vector2d&)>& fn);

// div(a(|grad u|) grad u) + f(u) = 0 in the domain,
// a(|grad u|) du/dnu + h(u) = 0 on the boundary (h == 0: Neumann).
struct NonlinearProblem {
  CoefficientFamily family;
  ScalarFn f = [](double) { return 0.0; };
  ScalarFn f_prime = [](double) { return 0.0; };
  ScalarFn h = [](double) { return 0.0; };
  ScalarFn h_prime = [](double) { return 0.0; };
  bool h_is_zero = true;  // true: pure Neumann problem
};

NonlinearProblem neumann_problem(CoefficientFamily family, ScalarFn f,
                                 ScalarFn f_prime);
NonlinearProblem robin_problem(CoefficientFamily family, ScalarFn f,
                               ScalarFn f_prime, ScalarFn h, ScalarFn h_prime);

// Raised when a family without a zero-gradient limit meets a (numerically)
// vanishing element gradient; carries the offending triangle indices.
struct DegenerateGradientError : std::runtime_error {
  DegenerateGradientError(const std::string& msg, std::vector<int> tris)
      : std::runtime_error(msg), triangles(std::move(tris)) {}
  std::vector<int> triangles;
};

// Residual of the P1 Galerkin form: for each hat function phi_i,
//   R_i = Int a(|grad u|) <grad u, grad phi_i>  -  Int f(u) phi_i
//       + Bnd h(u) phi_i.
// One-point (element gradient) quadrature on the quasilinear term, 3-point
// edge-midpoint rule on f, Simpson on boundary edges for h.
Eigen::VectorXd assemble_residual(const NonlinearProblem& problem,
                                  const Field& u);

// Jacobian of the residual: J = Int <A(grad u) grad phi_j, grad phi_i>
// - Int f'(u) phi_i phi_j + Bnd h'(u) phi_i phi_j. Symmetric by construction.
SpMat assemble_jacobian(const NonlinearProblem& problem, const Field& u);

SpMat mass_matrix(const Mesh& mesh);           // consistent P1 mass
Eigen::VectorXd lumped_mass(const Mesh& mesh); // row-sum lumping (T/3 shares)
SpMat stiffness_matrix(const Mesh& mesh);      // Laplacian stiffness
SpMat boundary_mass_matrix(const Mesh& mesh);  // Bnd phi_i phi_j

// Constant P1 gradient of a nodal vector on one triangle.
Eigen::Vector2d element_gradient(const Mesh& mesh,
                                 const Eigen::VectorXd& values, int t);

// Recovered nodal derivatives from a least-squares quadratic fit over the
// two-ring node patch: gradient exact to O(h^2), Hessian to O(h), both up to
// the boundary (one-sided patches); exact for quadratic fields.
Field recover_derivatives(Field u);

// First-order recovery: area-weighted average of element gradients over each
// node's patch. O(h^2) at interior nodes of symmetric patches, O(h) at the
// boundary. Used where an independent route to a gradient is wanted.
Eigen::Matrix<double, Eigen::Dynamic, 2> averaged_gradient(
    const Mesh& mesh, const Eigen::VectorXd& values);

}  // namespace stablab
