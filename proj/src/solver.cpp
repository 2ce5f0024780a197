#include "stablab/solver.hpp"

#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>

#include "stablab/stability.hpp"

namespace stablab {

namespace {

Eigen::VectorXd solve_linear_system(const SpMat& J, const Eigen::VectorXd& rhs,
                                    int newton_iter) {
  Eigen::SimplicialLDLT<SpMat> ldlt(J);
  if (ldlt.info() == Eigen::Success) {
    Eigen::VectorXd x = ldlt.solve(rhs);
    if (x.allFinite() && (J * x - rhs).norm() <=
                             1e-8 * (rhs.norm() + J.norm() * x.norm() + 1e-300))
      return x;
  }
  // Indefinite or pivot breakdown: fall back to MINRES.
  Eigen::MINRES<SpMat, Eigen::Lower | Eigen::Upper,
                Eigen::DiagonalPreconditioner<double>>
      minres(J);
  minres.setTolerance(1e-12);
  minres.setMaxIterations(8 * J.rows());
  const Eigen::VectorXd x = minres.solve(rhs);
  if (minres.info() != Eigen::Success || !x.allFinite())
    throw LinearSolveError(
        "Newton iteration " + std::to_string(newton_iter) +
        ": Jacobian solve failed (LDLT pivot breakdown, MINRES residual " +
        std::to_string(minres.error()) + ")");
  return x;
}

std::pair<Field, SolveReport> newton(const NonlinearProblem& problem, Field u,
                                     const NewtonOptions& opts,
                                     SolveReport report) {
  Eigen::VectorXd r = assemble_residual(problem, u);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  report.residual_history.push_back(rnorm);

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (rnorm <= opts.residual_tolerance) {
      report.converged = true;
      break;
    }
    const SpMat J = assemble_jacobian(problem, u);
    const Eigen::VectorXd delta = solve_linear_system(J, -r, it);

    double step = 1.0;
    bool accepted = false;
    Field trial = u;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      trial.values = u.values + step * delta;
      const Eigen::VectorXd r_trial = assemble_residual(problem, trial);
      const double rt = r_trial.lpNorm<Eigen::Infinity>();
      if (rt < rnorm) {
        u.values = trial.values;
        r = r_trial;
        rnorm = rt;
        accepted = true;
        report.step_lengths.push_back(step);
        report.residual_history.push_back(rnorm);
        ++report.iterations;
        break;
      }
      step *= opts.damping_factor;
    }
    if (!accepted) {
      report.converged = false;  // stalled: no descent within the budget
      report.final_residual = rnorm;
      return {std::move(u), std::move(report)};
    }
    if (rnorm <= opts.residual_tolerance) {
      report.converged = true;
      break;
    }
  }
  report.converged = rnorm <= opts.residual_tolerance;
  report.final_residual = rnorm;
  return {std::move(u), std::move(report)};
}

}  // namespace

std::pair<Field, SolveReport> solve(const NonlinearProblem& problem,
                                    Field initial, const NewtonOptions& opts) {
  if (!initial.mesh)
    throw std::invalid_argument("solve: initial field has no mesh");

  const auto p_it = problem.family.parameters.find("p");
  const bool homotopy = opts.continuation_steps > 1 &&
                        problem.family.name == "p-laplacian" &&
                        p_it != problem.family.parameters.end() &&
                        p_it->second != 2.0;
  if (!homotopy) return newton(problem, std::move(initial), opts, {});

  // Walk p from the Laplacian toward the target, reusing each stage's
  // solution as the next seed. Intermediate stages get a loose tolerance.
  const double p_target = p_it->second;
  Field u = std::move(initial);
  SolveReport report;
  for (int s = 1; s <= opts.continuation_steps; ++s) {
    const double p_s =
        2.0 + (p_target - 2.0) * double(s) / opts.continuation_steps;
    NonlinearProblem stage = problem;
    stage.family = p_laplacian_family(p_s);
    stage.family.grad_floor = problem.family.grad_floor;
    NewtonOptions stage_opts = opts;
    if (s < opts.continuation_steps)
      stage_opts.residual_tolerance =
          std::max(opts.residual_tolerance, 1e-6);
    SolveReport stage_report;
    std::tie(u, stage_report) = newton(stage, std::move(u), stage_opts, {});
    report.iterations += stage_report.iterations;
    report.residual_history.insert(report.residual_history.end(),
                                   stage_report.residual_history.begin(),
                                   stage_report.residual_history.end());
    report.step_lengths.insert(report.step_lengths.end(),
                               stage_report.step_lengths.begin(),
                               stage_report.step_lengths.end());
    report.converged = stage_report.converged;
    report.final_residual = stage_report.final_residual;
    if (!stage_report.converged) break;  // report the stalled stage honestly
  }
  return {std::move(u), std::move(report)};
}

std::pair<Field, double> solve_linear_robin(const Mesh& mesh, double alpha,
                                            double lambda) {
  const SpMat K = stiffness_matrix(mesh);
  const SpMat B = boundary_mass_matrix(mesh);
  const SpMat M = mass_matrix(mesh);
  SpMat L = K + alpha * B;
  L.makeCompressed();
  const EigenPair pair = eigenpair_nearest(L, M, lambda);
  Field u;
  u.mesh = &mesh;
  u.values = pair.vector;
  return {std::move(u), std::abs(pair.value - lambda)};
}

}  // namespace stablab
