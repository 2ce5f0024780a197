#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stablab {

// Scalar coefficient family a(t) of the quasilinear operator
// div(a(|grad u|) grad u), with its derivative and the data needed to
// evaluate safely where the gradient vanishes.
//
// Structural conditions, checked on demand: a(t) > 0 and
// lambda1(t) = a(t) + a'(t) t > 0 for t > 0. The matrix
// A(xi) = a'(|xi|)/|xi| xi xi^T + a(|xi|) I has eigenvalues lambda1(|xi|)
// (eigenvector xi) and a(|xi|) (orthogonal complement).
struct CoefficientFamily {
  std::string name;
  std::function<double(double)> a;        // t > 0
  std::function<double(double)> a_prime;  // t > 0
  std::optional<double> zero_limit;       // limit of a at 0+ when it exists
  bool regular_at_zero = false;           // t -> t*a(t) extends C1 across 0
  std::map<std::string, double> parameters;
  double grad_floor = 1e-10;  // |grad u| below this counts as zero downstream
};

// a == 1.
CoefficientFamily laplacian_family();

// a(t) = t^(p-2), p in (1, inf). p < 2: singular at 0 (evaluation at zero
// gradient is an error); p == 2: Laplacian; p > 2: degenerate, zero_limit 0.
CoefficientFamily p_laplacian_family(double p);

// a(t) = 1/sqrt(1 + t^2).
CoefficientFamily mean_curvature_family();

// Family interpolated from (t, a, aprime) samples: cubic Hermite pieces using
// the supplied slopes, limited so monotone data stays monotone. Outside the
// sampled range evaluation clamps to the end samples; the range is recorded in
// parameters["t_min"] / parameters["t_max"]. If the samples start at t = 0 the
// family is marked regular there with zero_limit a(0).
CoefficientFamily tabulated_family(std::string name, std::vector<double> t,
                                   std::vector<double> a,
                                   std::vector<double> aprime);

// Text file with one "t a aprime" triple per line ('#' comments allowed),
// t strictly increasing. Errors carry the offending line number.
CoefficientFamily load_tabulated_family(const std::string& path);

// a(t) for t > 0, or t == 0 when the family is regular there.
double eval_a(const CoefficientFamily& family, double t);

// lambda1(t) = a(t) + a'(t) t, t > 0.
double eval_lambda1(const CoefficientFamily& family, double t);

// A(xi); |xi| <= grad_floor is treated as a vanishing gradient and yields
// zero_limit * I for regular families, an error otherwise.
Eigen::Matrix2d matrix_A(const CoefficientFamily& family,
                         const Eigen::Vector2d& xi);

struct StructuralViolation {
  double t;
  double a_value;
  double lambda1_value;
  bool cond1_ok;  // a(t) > 0
  bool cond2_ok;  // lambda1(t) > 0
};

struct StructuralReport {
  std::vector<StructuralViolation> violations;
  bool pass() const { return violations.empty(); }
};

// Evaluates both structural conditions on a grid of t > 0 values.
StructuralReport check_structural(const CoefficientFamily& family,
                                  const std::vector<double>& t_grid);

}  // namespace stablab
