#pragma once

#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "stablab/fem.hpp"

namespace stablab {

// Smallest eigenvalue of the linearized energy: the quadratic form
//   Q(phi, phi) = Int <A(grad u) grad phi, grad phi> - Int f'(u) phi^2
//               + Bnd h'(u) phi^2
// against the mass matrix. Q coincides with the residual Jacobian at u.
SpMat assemble_stability_form(const NonlinearProblem& problem, const Field& u);

enum class Classification { Stable, Marginal, Unstable };
std::string to_string(Classification c);

struct EigenOptions {
  double tolerance = 1e-10;  // normwise backward error target
  int max_iterations = 400;  // subspace iterations across all refactors
  int block_extra = 2;       // subspace size = k + block_extra
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // M-normalized, largest entry positive
  double residual = 0.0;   // normwise backward error
};

struct EigenSolveStats {
  int iterations = 0;
  int factorizations = 0;
};

// Raised when the iteration cannot reach the residual target; carries the
// best iterate so callers can inspect how close it got.
struct EigensolveError : std::runtime_error {
  EigensolveError(const std::string& msg, EigenPair best)
      : std::runtime_error(msg), best_pair(std::move(best)) {}
  EigenPair best_pair;
};

// k smallest eigenpairs of the symmetric pencil (Q, M), M positive definite.
// Inertia bisection (LDLT pivot counts) brackets the lower end of the
// spectrum; shift-invert subspace iteration with Rayleigh-Ritz extraction
// refines, refactoring closer as the Ritz values settle.
std::vector<EigenPair> smallest_eigenpairs(const SpMat& Q, const SpMat& M,
                                           int k, const EigenOptions& opts = {},
                                           EigenSolveStats* stats = nullptr);

EigenPair smallest_eigenpair(const SpMat& Q, const SpMat& M,
                             const EigenOptions& opts = {},
                             EigenSolveStats* stats = nullptr);

// Eigenpair nearest a given shift (fixed-shift inverse iteration on a small
// block). Used for linear-problem defects.
EigenPair eigenpair_nearest(const SpMat& Q, const SpMat& M, double sigma,
                            const EigenOptions& opts = {});

struct StabilityReport {
  double lambda_min = 0.0;
  Field eigenfunction;
  Classification classification = Classification::Marginal;
  double tolerance = 0.0;     // classification tolerance actually used
  double eig_residual = 0.0;  // backward error of the eigenpair
  int eig_iterations = 0;
};

// Classifies a solution: unstable iff lambda_min < -tolerance, marginal iff
// |lambda_min| <= tolerance, stable iff lambda_min > tolerance. A negative
// `tolerance` argument selects the default 1e-6 * max |Q_ii|.
StabilityReport classify(const NonlinearProblem& problem, const Field& u,
                         double tolerance = -1.0);

}  // namespace stablab
