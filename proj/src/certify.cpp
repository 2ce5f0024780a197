#include "stablab/certify.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "stablab/coeff.hpp"
#include "stablab/levelset.hpp"
#include "stablab/mesh.hpp"

namespace stablab {

namespace {

double sq(double x) { return x * x; }

void require_closed(const BoundaryLoop& loop) {
  if (loop.nodes.size() < 3) {
    throw std::runtime_error(
        "boundary loop with fewer than 3 nodes is not a closed curve");
  }
}

}  // namespace

ConvexBoundarySign convex_boundary_sign(const NonlinearProblem& problem,
                                        const Field& u, double eps_grad) {
  if (!problem.h_is_zero) {
    throw std::invalid_argument(
        "convex_boundary_sign: the boundary-sign lemma assumes a Neumann "
        "problem (h == 0)");
  }
  if (u.mesh == nullptr || !u.has_derivatives()) {
    throw std::invalid_argument(
        "convex_boundary_sign: field needs recovered derivatives");
  }
  const Mesh& mesh = *u.mesh;
  if (min_boundary_curvature(mesh) < -1e-12) {
    throw std::invalid_argument(
        "convex_boundary_sign: domain is not convex (negative boundary "
        "curvature)");
  }

  const BoundaryExpansion be = boundary_expansion(problem, u, eps_grad);

  ConvexBoundarySign out;
  out.nodes = be.nodes;
  out.values.resize(be.nodes.size());
  out.max_value = -std::numeric_limits<double>::infinity();

  for (std::size_t j = 0; j < be.nodes.size(); ++j) {
    const double gn = u.grad_at(be.nodes[j]).norm();
    // At critical points the bracket vanishes with grad u; take the zero
    // limit instead of evaluating a possibly singular a(t).
    double value = 0.0;
    if (!be.degenerate[j]) {
      value = eval_a(problem.family, gn) * be.grad_dot_dnu_grad[j];
    }
    out.values[j] = value;
    out.max_value = std::max(out.max_value, value);
  }
  if (be.nodes.empty()) out.max_value = 0.0;
  return out;
}

BoundaryFrameData boundary_frame(const Field& u, double alpha,
                                 const ScalarFn& f) {
  if (u.mesh == nullptr || !u.has_derivatives()) {
    throw std::invalid_argument(
        "boundary_frame: field needs recovered derivatives");
  }
  // The frame study targets the semilinear case, so the expansion runs with
  // the unweighted gradient flux.
  const NonlinearProblem frame_problem =
      neumann_problem(laplacian_family(), f, [](double) { return 0.0; });
  const BoundaryExpansion be = boundary_expansion(frame_problem, u);

  BoundaryFrameData out;
  out.nodes = be.nodes;
  out.u_s = be.u_s;
  out.u_ss = be.u_ss;
  out.u_t = be.u_t;
  const int total = static_cast<int>(be.nodes.size());
  out.residual_robin.resize(total);
  out.residual_metric.resize(total);
  out.residual_expansion.resize(total);

  for (int row = 0; row < total; ++row) {
    const double uc = u.values[be.nodes[row]];
    const double us = be.u_s[row];
    const double ut = be.u_t[row];
    const double kappa = be.kappa[row];
    out.residual_robin[row] = ut - alpha * uc;
    out.residual_metric[row] =
        u.grad_at(be.nodes[row]).squaredNorm() - us * us - ut * ut;
    out.residual_expansion[row] = be.grad_dot_dnu_grad[row] +
                                  (alpha + kappa) * us * us +
                                  kappa * alpha * alpha * uc * uc -
                                  alpha * uc * be.u_ss[row] -
                                  alpha * f(uc) * uc;
  }
  return out;
}

RobinCertificate robin_certificate(const Field& u, double alpha,
                                   const ScalarFn& f) {
  if (u.mesh == nullptr) {
    throw std::invalid_argument("robin_certificate: field has no mesh");
  }
  const Mesh& mesh = *u.mesh;

  RobinCertificate cert;
  cert.alpha = alpha;
  cert.min_alpha_plus_kappa = std::numeric_limits<double>::infinity();

  for (const BoundaryLoop& loop : mesh.loops) {
    require_closed(loop);
    const int m = static_cast<int>(loop.nodes.size());
    for (int j = 0; j < m; ++j) {
      const Eigen::Vector2d& p = mesh.nodes[loop.nodes[j]];
      const Eigen::Vector2d& prev = mesh.nodes[loop.nodes[(j + m - 1) % m]];
      const Eigen::Vector2d& next = mesh.nodes[loop.nodes[(j + 1) % m]];
      const double weight = 0.5 * ((p - prev).norm() + (next - p).norm());

      const double uc = u.values[loop.nodes[j]];
      const double kappa = loop.curvature[j];
      cert.boundary_integral +=
          weight * (alpha * f(uc) * uc - kappa * sq(alpha * uc) +
                    std::pow(alpha, 3) * uc * uc);
      cert.min_alpha_plus_kappa =
          std::min(cert.min_alpha_plus_kappa, alpha + kappa);
    }
  }
  cert.fires =
      cert.boundary_integral < 0.0 && cert.min_alpha_plus_kappa >= 0.0;
  return cert;
}

RigidityReport rigidity_experiment(const NonlinearProblem& problem,
                                   const Mesh& mesh,
                                   const std::vector<Field>& seeds,
                                   const RigidityOptions& opts) {
  if (!problem.h_is_zero) {
    throw std::invalid_argument(
        "rigidity_experiment: rigidity holds for Neumann problems (h == 0)");
  }
  RigidityReport report;
  report.min_curvature = min_boundary_curvature(mesh);
  report.convex = report.min_curvature > 0.0;
  report.delta_const = opts.delta_const;

  // Rows are independent (each owns its solve and classification); they are
  // evaluated in seed order so reports are deterministic.
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    if (seeds[s].mesh != &mesh) {
      throw std::invalid_argument(
          "rigidity_experiment: seed lives on a different mesh");
    }
    RigidityRow row;
    row.seed_id = static_cast<int>(s);

    auto [solution, solve_report] = solve(problem, seeds[s], opts.newton);
    row.converged = solve_report.converged;
    const double mean = solution.values.mean();
    row.nonconstancy = (solution.values.array() - mean).abs().maxCoeff();
    row.solution = std::move(solution);
    if (row.converged) {
      const StabilityReport stab =
          classify(problem, row.solution, opts.stability_tolerance);
      row.lambda_min = stab.lambda_min;
      row.classification = stab.classification;
      row.eigenfunction = stab.eigenfunction;
      // The theorem's contrapositive: on a strictly convex domain a stable
      // solution must be constant.
      row.violation = report.convex && row.nonconstancy > opts.delta_const &&
                      stab.classification == Classification::Stable;
    } else {
      row.lambda_min = std::numeric_limits<double>::quiet_NaN();
    }
    report.any_violation = report.any_violation || row.violation;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace stablab
