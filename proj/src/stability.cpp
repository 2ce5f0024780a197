#include "stablab/stability.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablab {

SpMat assemble_stability_form(const NonlinearProblem& problem,
                              const Field& u) {
  return assemble_jacobian(problem, u);
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Stable:
      return "stable";
    case Classification::Marginal:
      return "marginal";
    case Classification::Unstable:
      return "unstable";
  }
  return "unknown";
}

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Shared LDLT machinery for the pencil (Q, M): a single symbolic analysis
// over the union pattern, refactorized per shift; vectorD sign counts give
// the inertia (number of eigenvalues below the shift).
struct ShiftedFactor {
  const SpMat& Q;
  const SpMat& M;
  SpMat shifted;  // Q - sigma*M, union pattern
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analyzed = false;
  int factorizations = 0;

  ShiftedFactor(const SpMat& q, const SpMat& m) : Q(q), M(m) {}

  // Returns the inertia below sigma, or -1 if the factorization broke down /
  // the shift is numerically an eigenvalue.
  int factor(double sigma) {
    shifted = Q - sigma * M;
    shifted.makeCompressed();
    if (!analyzed) {
      ldlt.analyzePattern(shifted);
      analyzed = true;
    }
    ldlt.factorize(shifted);
    ++factorizations;
    if (ldlt.info() != Eigen::Success) return -1;
    const Vec d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    int below = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (std::abs(d[i]) <= 1e-14 * dmax) return -1;  // singular shift
      if (d[i] < 0.0) ++below;
    }
    return below;
  }
};

double normwise_backward_error(const SpMat& Q, const SpMat& M, double q_norm,
                               double m_norm, double lambda, const Vec& x) {
  const double xn = x.norm();
  if (!(xn > 0.0)) return std::numeric_limits<double>::max();
  return (Q * x - lambda * (M * x)).norm() /
         ((q_norm + std::abs(lambda) * m_norm) * xn);
}

// M-orthonormalize the columns of X (modified Gram-Schmidt, one repeat).
void m_orthonormalize(const SpMat& M, Mat& X) {
  for (int j = 0; j < X.cols(); ++j) {
    for (int rep = 0; rep < 2; ++rep)
      for (int i = 0; i < j; ++i) {
        const double proj = X.col(i).dot(M * X.col(j));
        X.col(j) -= proj * X.col(i);
      }
    const double nrm = std::sqrt(X.col(j).dot(M * X.col(j)));
    if (nrm > 0.0) X.col(j) /= nrm;
  }
}

void canonical_sign(Vec& x) {
  int imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x[imax] < 0.0) x = -x;
}

// Dense fallback for small pencils.
std::vector<EigenPair> dense_eigenpairs(const SpMat& Q, const SpMat& M, int k,
                                        bool nearest, double sigma) {
  const Mat Qd(Q), Md(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Qd, Md);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigensolver: dense fallback failed");
  const double q_norm = Mat(Q).norm(), m_norm = Mat(M).norm();
  std::vector<int> order(es.eigenvalues().size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  if (nearest)
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(es.eigenvalues()[a] - sigma) <
             std::abs(es.eigenvalues()[b] - sigma);
    });
  std::vector<EigenPair> out;
  for (int j = 0; j < k && j < static_cast<int>(order.size()); ++j) {
    EigenPair p;
    p.value = es.eigenvalues()[order[j]];
    p.vector = es.eigenvectors().col(order[j]);
    canonical_sign(p.vector);
    p.residual = normwise_backward_error(Q, M, q_norm, m_norm, p.value,
                                         p.vector);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<EigenPair> smallest_eigenpairs(const SpMat& Q, const SpMat& M,
                                           int k, const EigenOptions& opts,
                                           EigenSolveStats* stats) {
  const int n = static_cast<int>(Q.rows());
  if (Q.rows() != Q.cols() || M.rows() != M.cols() || Q.rows() != M.rows())
    throw std::invalid_argument("eigensolver: dimension mismatch");
  if (k < 1 || k > n) throw std::invalid_argument("eigensolver: bad k");
  if (n <= 96) return dense_eigenpairs(Q, M, k, false, 0.0);

  const double q_norm = Q.norm(), m_norm = M.norm();

  // Pencil spectral bound: |lambda| <= 4 max_i rowsum|Q|_i / m_i, from the
  // P1 bound M >= M_lumped / 4.
  Vec abs_rowsum = Vec::Zero(n), m_lump = Vec::Zero(n);
  for (int c = 0; c < Q.outerSize(); ++c)
    for (SpMat::InnerIterator it(Q, c); it; ++it)
      abs_rowsum[it.row()] += std::abs(it.value());
  for (int c = 0; c < M.outerSize(); ++c)
    for (SpMat::InnerIterator it(M, c); it; ++it) m_lump[it.row()] += it.value();
  double bound = 1e-30;
  for (int i = 0; i < n; ++i)
    bound = std::max(bound, 4.0 * abs_rowsum[i] / std::max(m_lump[i], 1e-300));

  ShiftedFactor fac(Q, M);

  // Bracket the bottom of the spectrum by inertia bisection.
  double lo = -1.000001 * bound - 1e-12;
  double hi = bound * 1.000001 + 1e-12;
  {
    const int nu_lo = fac.factor(lo);
    if (nu_lo != 0) throw std::runtime_error("eigensolver: bound violated");
  }
  for (int step = 0; step < 18; ++step) {
    const double mid = 0.5 * (lo + hi);
    int nu = fac.factor(mid);
    if (nu < 0) {  // singular shift: nudge
      nu = fac.factor(mid + (hi - lo) * 1e-7);
    }
    if (nu <= 0)
      lo = mid;
    else
      hi = mid;
  }

  const int b = std::min(n, k + std::max(1, opts.block_extra));
  Mat X(n, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < n; ++i)
      X(i, j) = j == 0 ? 1.0 : std::cos((j * 3.883222077450933 * i) / n + j);
  m_orthonormalize(M, X);

  double sigma = lo;
  if (fac.factor(sigma) != 0 || fac.ldlt.info() != Eigen::Success) {
    sigma = lo - 1e-6 * (std::abs(lo) + 1.0);
    if (fac.factor(sigma) != 0)
      throw std::runtime_error("eigensolver: could not place the shift");
  }

  EigenPair best;
  best.residual = std::numeric_limits<double>::max();
  Vec ritz_values = Vec::Zero(b);
  Mat ritz_vectors;
  int it_count = 0;
  int since_refactor = 0;

  auto rayleigh_ritz = [&]() {
    const Mat QX = Q * X;
    const Mat MX = M * X;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> small(
        X.transpose() * QX, X.transpose() * MX);
    ritz_vectors = X * small.eigenvectors();
    ritz_values = small.eigenvalues();
  };

  std::vector<EigenPair> out;
  while (it_count < opts.max_iterations) {
    ++it_count;
    ++since_refactor;
    // One block shift-invert step, then extract Ritz pairs.
    Mat Y(n, b);
    for (int j = 0; j < b; ++j) Y.col(j) = fac.ldlt.solve(M * X.col(j));
    if (!Y.allFinite()) throw std::runtime_error("eigensolver: solve blow-up");
    X = Y;
    m_orthonormalize(M, X);
    rayleigh_ritz();

    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      const double r = normwise_backward_error(Q, M, q_norm, m_norm,
                                               ritz_values[j],
                                               ritz_vectors.col(j));
      worst = std::max(worst, r);
    }
    {
      const double r0 = normwise_backward_error(Q, M, q_norm, m_norm,
                                                ritz_values[0],
                                                ritz_vectors.col(0));
      if (r0 < best.residual) {
        best.residual = r0;
        best.value = ritz_values[0];
        best.vector = ritz_vectors.col(0);
      }
    }
    if (worst <= opts.tolerance) break;

    // Move the shift below the current smallest Ritz value once estimates
    // settle; keeps the inverse-iteration rate bounded away from 1.
    if (since_refactor >= 6) {
      const double spread =
          std::max(ritz_values[b - 1] - ritz_values[0],
                   1e-6 * (std::abs(ritz_values[0]) + 1.0));
      double cand = ritz_values[0] - 0.25 * spread;
      if (cand > sigma) {
        int nu = fac.factor(cand);
        int guard = 0;
        while (nu != 0 && guard++ < 8) {
          cand = sigma + 0.5 * (cand - sigma);
          nu = fac.factor(cand);
        }
        if (nu == 0)
          sigma = cand;
        else
          fac.factor(sigma);  // restore a valid factorization
      }
      since_refactor = 0;
    }

    X = ritz_vectors;  // continue from the Ritz basis
  }

  if (stats) {
    stats->iterations = it_count;
    stats->factorizations = fac.factorizations;
  }

  for (int j = 0; j < k; ++j) {
    EigenPair p;
    p.value = ritz_values[j];
    p.vector = ritz_vectors.col(j);
    canonical_sign(p.vector);
    p.residual =
        normwise_backward_error(Q, M, q_norm, m_norm, p.value, p.vector);
    out.push_back(std::move(p));
  }
  double worst_out = 0.0;
  for (const auto& p : out) worst_out = std::max(worst_out, p.residual);
  if (out.empty() || worst_out > 1e-8) {
    canonical_sign(best.vector);
    throw EigensolveError("eigensolver: stagnated at backward error " +
                              std::to_string(worst_out),
                          best);
  }
  return out;
}

EigenPair smallest_eigenpair(const SpMat& Q, const SpMat& M,
                             const EigenOptions& opts, EigenSolveStats* stats) {
  return smallest_eigenpairs(Q, M, 1, opts, stats).front();
}

EigenPair eigenpair_nearest(const SpMat& Q, const SpMat& M, double sigma,
                            const EigenOptions& opts) {
  const int n = static_cast<int>(Q.rows());
  if (n <= 96) return dense_eigenpairs(Q, M, 1, true, sigma).front();

  const double q_norm = Q.norm(), m_norm = M.norm();
  ShiftedFactor fac(Q, M);
  const double scale = (q_norm + m_norm + 1.0);
  double shift = sigma;
  int tries = 0;
  while (fac.factor(shift) < 0) {
    shift = sigma + (tries + 1) * 1e-9 * scale;
    if (++tries > 6)
      throw std::runtime_error("eigensolver: shift factorization failed");
  }

  const int b = std::min(n, 3);
  Mat X(n, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < n; ++i)
      X(i, j) = j == 0 ? 1.0 : std::cos((j * 2.718281828 * i) / n + j);
  m_orthonormalize(M, X);

  EigenPair best;
  best.residual = std::numeric_limits<double>::max();
  for (int it = 0; it < opts.max_iterations; ++it) {
    Mat Y(n, b);
    for (int j = 0; j < b; ++j) Y.col(j) = fac.ldlt.solve(M * X.col(j));
    if (!Y.allFinite()) throw std::runtime_error("eigensolver: solve blow-up");
    X = Y;
    m_orthonormalize(M, X);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> small(
        Mat(X.transpose() * (Q * X)), Mat(X.transpose() * (M * X)));
    int jbest = 0;
    double dist = std::numeric_limits<double>::max();
    for (int j = 0; j < b; ++j) {
      const double d = std::abs(small.eigenvalues()[j] - sigma);
      if (d < dist) {
        dist = d;
        jbest = j;
      }
    }
    Vec x = X * small.eigenvectors().col(jbest);
    const double lam = small.eigenvalues()[jbest];
    const double r = normwise_backward_error(Q, M, q_norm, m_norm, lam, x);
    if (r < best.residual) {
      best.residual = r;
      best.value = lam;
      best.vector = x;
    }
    if (r <= opts.tolerance) break;
    X = X * small.eigenvectors();
  }
  canonical_sign(best.vector);
  if (best.residual > 1e-8)
    throw EigensolveError("eigensolver: nearest-shift iteration stagnated",
                          best);
  return best;
}

StabilityReport classify(const NonlinearProblem& problem, const Field& u,
                         double tolerance) {
  const SpMat Q = assemble_stability_form(problem, u);
  const SpMat M = mass_matrix(*u.mesh);
  if (tolerance < 0.0) {
    double scale = 0.0;
    for (int i = 0; i < Q.rows(); ++i) scale = std::max(scale, std::abs(Q.coeff(i, i)));
    tolerance = 1e-6 * scale;
  }
  EigenSolveStats stats;
  const EigenPair pair = smallest_eigenpair(Q, M, {}, &stats);

  StabilityReport report;
  report.lambda_min = pair.value;
  report.eigenfunction.mesh = u.mesh;
  report.eigenfunction.values = pair.vector;
  report.tolerance = tolerance;
  report.eig_residual = pair.residual;
  report.eig_iterations = stats.iterations;
  if (pair.value < -tolerance)
    report.classification = Classification::Unstable;
  else if (pair.value > tolerance)
    report.classification = Classification::Stable;
  else
    report.classification = Classification::Marginal;
  return report;
}

}  // namespace stablab
