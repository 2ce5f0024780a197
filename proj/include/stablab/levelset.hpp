#pragma once

#include <Eigen/Core>

#include <vector>

#include "stablab/fem.hpp"

namespace stablab {

// Per-node level-set geometry of a scalar field: |grad u|, its spatial
// gradient, the tangential (along the level curve) derivative of |grad u|,
// and the level-curve curvature k1. Nodes with |grad u| <= eps_grad form the
// degenerate set: they are masked and every geometric entry is zero there.
//
// grad_of_grad_norm is computed by averaging element gradients of the nodal
// |grad u| field, a route independent of the recovered Hessian; the identity
// residual below cross-checks the two.
struct LevelSetData {
  Eigen::VectorXd grad_norm;
  Eigen::Matrix<double, Eigen::Dynamic, 2> grad_of_grad_norm;
  Eigen::VectorXd tangential_grad_norm;
  Eigen::VectorXd curvature_k1;
  std::vector<bool> mask;  // true = degenerate node
};

// Requires recovered derivatives on u.
LevelSetData levelset_quantities(const Field& u, double eps_grad = 1e-10);

// Nodal residual of the Sternberg-Zumbrun decomposition
//   |H|_F^2 = |grad|grad u||^2 + |grad_T|grad u||^2 + |grad u|^2 k1^2,
// zero on masked nodes. For smooth fields the max residual decays like O(h).
Eigen::VectorXd curvature_identity_residual(const Field& u,
                                            double eps_grad = 1e-10);

// Term-by-term evaluation of the geometric Poincare inequality
//   interior_lhs + boundary_term <= rhs,
// where for a solution u and test function phi
//   interior_lhs  = Int [lambda1 |grad_T|grad u||^2 + a |grad u|^2 k1^2] phi^2
//   boundary_term = Bnd [f(u) d_nu u - a <grad u, d_nu grad u>
//                        - h(u) Lap u - h'(u) |grad u|^2] phi^2
//   rhs           = Int |grad u|^2 <A(grad u) grad phi, grad phi>.
// slack = rhs - interior_lhs - boundary_term; nonnegative up to recovery
// error when u is stable. hessian_form_lhs re-evaluates the interior
// integrand in Hessian form, tr(H A H) - <A grad|grad u|, grad|grad u|>,
// and matches interior_lhs to O(h).
struct PoincareBreakdown {
  double interior_lhs = 0.0;
  double boundary_term = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double hessian_form_lhs = 0.0;
};

PoincareBreakdown poincare_breakdown(const NonlinearProblem& problem,
                                     const Field& u, const Field& phi,
                                     double eps_grad = 1e-10);

// Boundary-frame evaluation of normal-derivative quantities, one entry per
// boundary node (loops concatenated in loop order). Along each closed loop,
// dG/ds = H tau exactly, so tangential finite differences of the recovered
// gradient yield (H tau . nu) and (H tau . tau); the remaining normal-normal
// second derivative u_tt is eliminated through the interior equation
//   a (tr H) + a'/|g| <g, H g> = -f(u),
// the same substitution that produces the boundary expansion for solutions.
// No Hessian recovery at the boundary is involved. Nodes with
// |grad u| <= eps_grad are flagged degenerate; their u_tt, laplacian and
// grad_dot_dnu_grad entries are zero.
struct BoundaryExpansion {
  std::vector<int> nodes;      // mesh node ids, loop by loop
  Eigen::VectorXd weight;      // trapezoidal arc weights
  Eigen::VectorXd kappa;       // boundary curvature at the node
  Eigen::VectorXd u_s;         // d/ds of the boundary trace
  Eigen::VectorXd u_ss;        // d2/ds2 of the boundary trace
  Eigen::VectorXd u_t;         // inward normal derivative, -g . nu
  Eigen::VectorXd u_tt;        // second derivative along the normal line
  Eigen::VectorXd laplacian;   // tr H = (H tau . tau) + u_tt
  Eigen::VectorXd grad_dot_dnu_grad;  // <grad u, H nu>
  std::vector<char> degenerate;
};

BoundaryExpansion boundary_expansion(const NonlinearProblem& problem,
                                     const Field& u, double eps_grad = 1e-10);

}  // namespace stablab
