#include "stablab/coeff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace stablab {

namespace {

// Cubic Hermite table with clamped extension beyond the sampled range.
struct HermiteTable {
  std::vector<double> t, y, m;

  int interval(double x) const {
    // Largest i with t[i] <= x, clamped to [0, n-2].
    auto it = std::upper_bound(t.begin(), t.end(), x);
    int i = static_cast<int>(it - t.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(t.size()) - 2);
  }

  double eval(double x) const {
    if (x <= t.front()) return y.front();
    if (x >= t.back()) return y.back();
    const int i = interval(x);
    const double dt = t[i + 1] - t[i];
    const double s = (x - t[i]) / dt;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * y[i] + h10 * dt * m[i] + h01 * y[i + 1] + h11 * dt * m[i + 1];
  }

  double eval_deriv(double x) const {
    if (x <= t.front() || x >= t.back()) return 0.0;
    const int i = interval(x);
    const double dt = t[i + 1] - t[i];
    const double s = (x - t[i]) / dt;
    const double g00 = 6 * s * (s - 1);
    const double g10 = (1 - s) * (1 - 3 * s);
    const double g01 = -g00;
    const double g11 = s * (3 * s - 2);
    return (g00 * y[i] + g01 * y[i + 1]) / dt + g10 * m[i] + g11 * m[i + 1];
  }
};

// Fritsch–Carlson style limiting: slopes zeroed at local extrema of the data,
// magnitudes capped at 3x the adjacent secants. Leaves smooth monotone data
// (and its supplied slopes) untouched at reasonable resolutions.
void limit_slopes(const std::vector<double>& t, const std::vector<double>& y,
                  std::vector<double>& m) {
  const int n = static_cast<int>(t.size());
  std::vector<double> d(n - 1);
  for (int i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
  for (int i = 0; i < n; ++i) {
    const double dl = d[std::max(i - 1, 0)];
    const double dr = d[std::min(i, n - 2)];
    if (dl * dr < 0.0) {
      m[i] = 0.0;
      continue;
    }
    const double bound = 3.0 * std::min(std::abs(dl), std::abs(dr));
    if (m[i] * (dl + dr) < 0.0)
      m[i] = 0.0;
    else
      m[i] = std::clamp(m[i], -bound, bound);
  }
}

}  // namespace

CoefficientFamily laplacian_family() {
  CoefficientFamily fam;
  fam.name = "laplacian";
  fam.a = [](double) { return 1.0; };
  fam.a_prime = [](double) { return 0.0; };
  fam.zero_limit = 1.0;
  fam.regular_at_zero = true;
  return fam;
}

CoefficientFamily p_laplacian_family(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument("p-laplacian family requires p > 1, got p = " +
                                std::to_string(p));
  CoefficientFamily fam;
  fam.name = "p-laplacian";
  fam.parameters["p"] = p;
  fam.a = [p](double t) { return std::pow(t, p - 2.0); };
  fam.a_prime = [p](double t) { return (p - 2.0) * std::pow(t, p - 3.0); };
  if (p == 2.0) {
    fam.zero_limit = 1.0;
    fam.regular_at_zero = true;
  } else if (p > 2.0) {
    fam.zero_limit = 0.0;
    fam.regular_at_zero = true;
  }  // p < 2: singular at 0, no zero_limit
  return fam;
}

CoefficientFamily mean_curvature_family() {
  CoefficientFamily fam;
  fam.name = "mean-curvature";
  fam.a = [](double t) { return 1.0 / std::sqrt(1.0 + t * t); };
  fam.a_prime = [](double t) { return -t * std::pow(1.0 + t * t, -1.5); };
  fam.zero_limit = 1.0;
  fam.regular_at_zero = true;
  return fam;
}

CoefficientFamily tabulated_family(std::string name, std::vector<double> t,
                                   std::vector<double> a,
                                   std::vector<double> aprime) {
  if (t.size() < 2 || t.size() != a.size() || t.size() != aprime.size())
    throw std::invalid_argument(
        "tabulated family needs >= 2 samples with matching t/a/aprime sizes");
  for (size_t i = 0; i + 1 < t.size(); ++i)
    if (!(t[i] < t[i + 1]))
      throw std::invalid_argument(
          "tabulated family: t samples must be strictly increasing (sample " +
          std::to_string(i + 1) + ")");
  if (t.front() < 0.0)
    throw std::invalid_argument("tabulated family: t samples must be >= 0");

  auto table = std::make_shared<HermiteTable>();
  table->t = std::move(t);
  table->y = std::move(a);
  table->m = std::move(aprime);
  limit_slopes(table->t, table->y, table->m);

  CoefficientFamily fam;
  fam.name = std::move(name);
  fam.parameters["t_min"] = table->t.front();
  fam.parameters["t_max"] = table->t.back();
  fam.a = [table](double x) { return table->eval(x); };
  fam.a_prime = [table](double x) { return table->eval_deriv(x); };
  if (table->t.front() <= 1e-14) {
    fam.regular_at_zero = true;
    fam.zero_limit = table->y.front();
  }
  return fam;
}

CoefficientFamily load_tabulated_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coefficient table: " + path);
  std::vector<double> t, a, ap;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double ti, ai, api;
    if (!(ls >> ti)) continue;  // blank or comment-only line
    if (!(ls >> ai >> api))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 't a aprime'");
    std::string rest;
    if (ls >> rest)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": trailing tokens after 't a aprime'");
    t.push_back(ti);
    a.push_back(ai);
    ap.push_back(api);
  }
  try {
    return tabulated_family(path, std::move(t), std::move(a), std::move(ap));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

double eval_a(const CoefficientFamily& family, double t) {
  if (t < 0.0 || !std::isfinite(t))
    throw std::domain_error("eval_a: invalid gradient magnitude t = " +
                            std::to_string(t));
  if (t == 0.0) {
    if (!family.regular_at_zero || !family.zero_limit)
      throw std::domain_error("family '" + family.name +
                              "' is singular at zero gradient");
    return *family.zero_limit;
  }
  return family.a(t);
}

double eval_lambda1(const CoefficientFamily& family, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::domain_error("eval_lambda1 requires t > 0, got t = " +
                            std::to_string(t));
  return family.a(t) + family.a_prime(t) * t;
}

Eigen::Matrix2d matrix_A(const CoefficientFamily& family,
                         const Eigen::Vector2d& xi) {
  const double n = xi.norm();
  if (n <= family.grad_floor) {
    if (!family.regular_at_zero || !family.zero_limit)
      throw std::domain_error("matrix_A: family '" + family.name +
                              "' is singular at zero gradient");
    return *family.zero_limit * Eigen::Matrix2d::Identity();
  }
  return (family.a_prime(n) / n) * (xi * xi.transpose()) +
         family.a(n) * Eigen::Matrix2d::Identity();
}

StructuralReport check_structural(const CoefficientFamily& family,
                                  const std::vector<double>& t_grid) {
  StructuralReport report;
  for (double t : t_grid) {
    if (!(t > 0.0))
      throw std::invalid_argument("check_structural: grid values must be > 0");
    const double at = family.a(t);
    const double l1 = at + family.a_prime(t) * t;
    if (!(at > 0.0) || !(l1 > 0.0))
      report.violations.push_back({t, at, l1, at > 0.0, l1 > 0.0});
  }
  return report;
}

}  // namespace stablab
