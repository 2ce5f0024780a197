#pragma once

#include <Eigen/Core>

#include <vector>

#include "stablab/fem.hpp"
#include "stablab/solver.hpp"
#include "stablab/stability.hpp"

namespace stablab {

// Boundary sign check for convex Neumann problems: on a convex domain any
// solution with d_nu u = 0 satisfies a(|grad u|) <grad u, d_nu grad u> <= 0
// pointwise on the boundary, so max_value should stay <= O(h).
struct ConvexBoundarySign {
  std::vector<int> nodes;   // boundary node indices, loop order
  Eigen::VectorXd values;   // a(|grad u|) <grad u, H nu> per node
  double max_value = 0.0;
};

ConvexBoundarySign convex_boundary_sign(const NonlinearProblem& problem,
                                        const Field& u,
                                        double eps_grad = 1e-10);

// Boundary trace of u in normal coordinates (s, t): s the arc length, t the
// inward normal distance. u_s, u_ss come from periodic finite differences
// along each loop; u_t = -<grad u, nu>. The residual columns check
//   u_t = alpha u                                   (residual_robin)
//   |grad u|^2 = u_s^2 + u_t^2                      (residual_metric)
//   <grad u, d_nu grad u> = -(alpha + kappa) u_s^2 - kappa alpha^2 u^2
//                           + alpha u u_ss + alpha f(u) u   (residual_expansion)
// and all three decay like O(h) on converged Robin solutions.
struct BoundaryFrameData {
  std::vector<int> nodes;  // boundary node indices, loop order
  Eigen::VectorXd u_s;
  Eigen::VectorXd u_ss;
  Eigen::VectorXd u_t;
  Eigen::VectorXd residual_robin;
  Eigen::VectorXd residual_metric;
  Eigen::VectorXd residual_expansion;
};

BoundaryFrameData boundary_frame(const Field& u, double alpha,
                                 const ScalarFn& f);

// Instability certificate for the Robin Laplacian (a == 1, h(u) = alpha u,
// n = 2): if the boundary integral of alpha f(u) u - kappa alpha^2 u^2
// + alpha^3 u^2 is negative while alpha + kappa >= 0 everywhere on the
// boundary, the solution is unstable. The integrand is the cleared form of
// alpha^2 u^2 (f(u)/(alpha u) - kappa + alpha), safe where u vanishes.
struct RobinCertificate {
  double alpha = 0.0;
  double boundary_integral = 0.0;
  double min_alpha_plus_kappa = 0.0;
  bool fires = false;
};

RobinCertificate robin_certificate(const Field& u, double alpha,
                                   const ScalarFn& f);

// Rigidity experiment: solve from each seed, classify, and flag any stable
// nonconstant solution on a strictly convex domain as a violation (on convex
// domains stable solutions must be constant; nonconvex domains are recorded
// but never flagged, since the hypothesis fails there).
struct RigidityRow {
  int seed_id = 0;
  bool converged = false;
  double nonconstancy = 0.0;  // ||u - mean(u)||_inf
  double lambda_min = 0.0;
  bool violation = false;
  Classification classification = Classification::Marginal;  // converged only
  Field solution;       // final iterate, converged or not
  Field eigenfunction;  // lowest mode of the stability form (converged only)
};

struct RigidityReport {
  bool convex = false;          // min boundary curvature > 0
  double min_curvature = 0.0;
  double delta_const = 0.0;     // nonconstancy threshold used
  std::vector<RigidityRow> rows;
  bool any_violation = false;
};

struct RigidityOptions {
  // Default separates Newton round-off from genuine nonconstancy at the
  // scale of the bistable roots (spread 2).
  double delta_const = 2e-4;
  NewtonOptions newton;
  double stability_tolerance = -1.0;  // forwarded to classify()
};

RigidityReport rigidity_experiment(const NonlinearProblem& problem,
                                   const Mesh& mesh,
                                   const std::vector<Field>& seeds,
                                   const RigidityOptions& opts = {});

}  // namespace stablab
