#pragma once

#include <stdexcept>
#include <utility>

#include "stablab/fem.hpp"

namespace stablab {

struct NewtonOptions {
  int max_iterations = 50;
  double residual_tolerance = 1e-10;  // max norm of the residual
  double damping_factor = 0.5;
  int max_halvings = 30;
  int continuation_steps = 1;  // > 1: parameter homotopy for p != 2
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;  // accepted Newton steps (all stages)
  double final_residual = 0.0;
  std::vector<double> residual_history;  // max norms, nonincreasing
  std::vector<double> step_lengths;      // accepted damping factors
};

struct LinearSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Damped Newton on the P1 Galerkin residual. Steps are accepted only when
// they decrease the residual max norm; at most max_halvings halvings per
// step, then the solve reports converged = false (no exception). For the
// p-Laplacian with continuation_steps > 1, intermediate solves walk p from 2
// to its target value, reusing each stage's solution as the next seed.
std::pair<Field, SolveReport> solve(const NonlinearProblem& problem,
                                    Field initial,
                                    const NewtonOptions& opts = {});

// Solves the linear Robin-eigenvalue defect problem for (alpha, lambda):
// returns the eigenfunction of K + alpha*B nearest lambda in the mass inner
// product, together with the defect |mu - lambda| of the closest discrete
// eigenvalue mu. A defect ~0 means (alpha, lambda) is (numerically) a
// discrete eigenpair.
std::pair<Field, double> solve_linear_robin(const Mesh& mesh, double alpha,
                                            double lambda);

}  // namespace stablab
