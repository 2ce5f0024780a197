#include "stablab/curve.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stablab {

namespace {

constexpr int kFineSubdiv = 1024;  // chordal table resolution per piece
constexpr double kPi = std::numbers::pi;

struct PieceTable {
  std::vector<double> s;  // cumulative chord length at t = j / kFineSubdiv
  double length() const { return s.back(); }

  // Parameter at arc length x (linear interpolation within fine intervals).
  double param_at(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= s.back()) return 1.0;
    auto it = std::upper_bound(s.begin(), s.end(), x);
    const int j = static_cast<int>(it - s.begin()) - 1;
    const double seg = s[j + 1] - s[j];
    const double frac = seg > 0.0 ? (x - s[j]) / seg : 0.0;
    return (j + frac) / kFineSubdiv;
  }
};

PieceTable build_table(const CurveFn& fn) {
  PieceTable tab;
  tab.s.resize(kFineSubdiv + 1);
  tab.s[0] = 0.0;
  Eigen::Vector2d prev = fn(0.0).p;
  for (int j = 1; j <= kFineSubdiv; ++j) {
    const Eigen::Vector2d cur = fn(double(j) / kFineSubdiv).p;
    tab.s[j] = tab.s[j - 1] + (cur - prev).norm();
    prev = cur;
  }
  return tab;
}

double jet_curvature(const CurveJet& jet) {
  const double speed = jet.d1.norm();
  return (jet.d1.x() * jet.d2.y() - jet.d1.y() * jet.d2.x()) /
         (speed * speed * speed);
}

Eigen::Vector2d jet_normal(const CurveJet& jet) {
  const Eigen::Vector2d tang = jet.d1.normalized();
  return {tang.y(), -tang.x()};  // outward when the domain is on the left
}

double max_abs_curvature(const CurveFn& fn) {
  double m = 0.0;
  for (int j = 0; j <= 64; ++j)
    m = std::max(m, std::abs(jet_curvature(fn(j / 64.0))));
  return m;
}

}  // namespace

double BoundaryCurve::length() const {
  double total = 0.0;
  for (const auto& fn : pieces_) total += build_table(fn).length();
  return total;
}

BoundaryCurve::Samples BoundaryCurve::sample(double h, int min_per_piece) const {
  if (pieces_.empty()) throw std::logic_error("BoundaryCurve: no pieces");
  if (!(h > 0.0)) throw std::invalid_argument("BoundaryCurve: h must be > 0");

  Samples out;
  const int np = piece_count();
  // One-sided curvature limits at each junction; junction node stored once.
  std::vector<double> kappa_in(np);  // curvature approaching junction j from piece j-1
  for (int p = 0; p < np; ++p)
    kappa_in[(p + 1) % np] = jet_curvature(pieces_[p](1.0));

  double s_accum = 0.0;
  std::vector<double> junction_weight_prev(np, 0.0);  // last chord of piece p
  std::vector<int> junction_index(np, -1);

  for (int p = 0; p < np; ++p) {
    const auto& fn = pieces_[p];
    const PieceTable tab = build_table(fn);
    const double maxk = max_abs_curvature(fn);
    double spacing = h;
    if (maxk > 1e-12) spacing = std::min(spacing, 0.5 / maxk);
    const int n = std::max(min_per_piece,
                           static_cast<int>(std::ceil(tab.length() / spacing)));
    for (int j = 0; j < n; ++j) {
      const double target = tab.length() * j / n;
      const CurveJet jet = fn(tab.param_at(target));
      if (j == 0) junction_index[p] = static_cast<int>(out.point.size());
      out.point.push_back(jet.p);
      out.normal.push_back(jet_normal(jet));
      out.curvature.push_back(jet_curvature(jet));
      out.arclength.push_back(s_accum + target);
    }
    junction_weight_prev[(p + 1) % np] = tab.length() / n;  // closing chord
    s_accum += tab.length();
  }
  out.total_length = s_accum;

  // Junction nodes carry the chord-weighted mean of the one-sided curvature
  // limits, so trapezoidal boundary quadrature of kappa stays second order
  // across curvature jumps.
  for (int p = 0; p < np; ++p) {
    const int idx = junction_index[p];
    const double w_out =
        (idx + 1 < static_cast<int>(out.arclength.size())
             ? out.arclength[idx + 1]
             : out.total_length) -
        out.arclength[idx];
    const double w_in = junction_weight_prev[p];
    const double k_out = out.curvature[idx];
    out.curvature[idx] =
        (w_in * kappa_in[p] + w_out * k_out) / (w_in + w_out);
  }
  return out;
}

BoundaryCurve::Samples BoundaryCurve::sample_uniform(int n) const {
  if (pieces_.empty()) throw std::logic_error("BoundaryCurve: no pieces");
  if (n < 3) throw std::invalid_argument("BoundaryCurve: need n >= 3 samples");

  std::vector<PieceTable> tabs;
  tabs.reserve(pieces_.size());
  double total = 0.0;
  for (const auto& fn : pieces_) {
    tabs.push_back(build_table(fn));
    total += tabs.back().length();
  }

  Samples out;
  out.total_length = total;
  for (int i = 0; i < n; ++i) {
    double target = total * i / n;
    size_t p = 0;
    while (p + 1 < tabs.size() && target > tabs[p].length()) {
      target -= tabs[p].length();
      ++p;
    }
    const CurveJet jet = pieces_[p](tabs[p].param_at(target));
    out.point.push_back(jet.p);
    out.normal.push_back(jet_normal(jet));
    out.curvature.push_back(jet_curvature(jet));
    out.arclength.push_back(total * i / n);
  }
  return out;
}

BoundaryCurve circle_curve(const Eigen::Vector2d& c, double r) {
  BoundaryCurve curve;
  curve.add_piece([c, r](double t) {
    const double th = 2 * kPi * t, w = 2 * kPi;
    CurveJet jet;
    jet.p = c + r * Eigen::Vector2d(std::cos(th), std::sin(th));
    jet.d1 = r * w * Eigen::Vector2d(-std::sin(th), std::cos(th));
    jet.d2 = -r * w * w * Eigen::Vector2d(std::cos(th), std::sin(th));
    return jet;
  });
  return curve;
}

BoundaryCurve circle_curve_cw(const Eigen::Vector2d& c, double r) {
  BoundaryCurve curve;
  curve.add_piece([c, r](double t) {
    const double th = -2 * kPi * t, w = -2 * kPi;
    CurveJet jet;
    jet.p = c + r * Eigen::Vector2d(std::cos(th), std::sin(th));
    jet.d1 = r * w * Eigen::Vector2d(-std::sin(th), std::cos(th));
    jet.d2 = -r * w * w * Eigen::Vector2d(std::cos(th), std::sin(th));
    return jet;
  });
  return curve;
}

BoundaryCurve ellipse_curve(double rx, double ry) {
  if (!(rx > 0.0) || !(ry > 0.0))
    throw std::invalid_argument("ellipse: semi-axes must be positive");
  BoundaryCurve curve;
  curve.add_piece([rx, ry](double t) {
    const double th = 2 * kPi * t, w = 2 * kPi;
    CurveJet jet;
    jet.p = {rx * std::cos(th), ry * std::sin(th)};
    jet.d1 = {-rx * w * std::sin(th), ry * w * std::cos(th)};
    jet.d2 = {-rx * w * w * std::cos(th), -ry * w * w * std::sin(th)};
    return jet;
  });
  return curve;
}

namespace {

CurveFn segment_piece(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return [a, b](double t) {
    CurveJet jet;
    jet.p = a + t * (b - a);
    jet.d1 = b - a;
    jet.d2.setZero();
    return jet;
  };
}

// Arc of radius r about c, angle th0 -> th1 (counterclockwise if th1 > th0).
CurveFn arc_piece(const Eigen::Vector2d& c, double r, double th0, double th1) {
  return [c, r, th0, th1](double t) {
    const double th = th0 + t * (th1 - th0), w = th1 - th0;
    CurveJet jet;
    jet.p = c + r * Eigen::Vector2d(std::cos(th), std::sin(th));
    jet.d1 = r * w * Eigen::Vector2d(-std::sin(th), std::cos(th));
    jet.d2 = -r * w * w * Eigen::Vector2d(std::cos(th), std::sin(th));
    return jet;
  };
}

// Graph piece y = sgn * Y(x) traversed from x0 to x1; Y supplies value and
// two derivatives.
CurveFn graph_piece(std::function<std::array<double, 3>(double)> Y, double x0,
                    double x1, double sgn) {
  return [Y = std::move(Y), x0, x1, sgn](double t) {
    const double dx = x1 - x0;
    const double x = x0 + t * dx;
    const auto [y, yp, ypp] = Y(x);
    CurveJet jet;
    jet.p = {x, sgn * y};
    jet.d1 = {dx, sgn * yp * dx};
    jet.d2 = {0.0, sgn * ypp * dx * dx};
    return jet;
  };
}

}  // namespace

BoundaryCurve rounded_rectangle_curve(double w, double h, double r) {
  if (!(w > 0.0) || !(h > 0.0))
    throw std::invalid_argument("rectangle: sides must be positive");
  if (!(r > 0.0))
    throw std::invalid_argument(
        "rectangle: rounding radius must be positive (smooth boundary)");
  if (!(2 * r < std::min(w, h)))
    throw std::invalid_argument(
        "rectangle: rounding radius too large for the side lengths");

  using V = Eigen::Vector2d;
  BoundaryCurve curve;
  curve.add_piece(segment_piece({r, 0}, {w - r, 0}));
  curve.add_piece(arc_piece({w - r, r}, r, -kPi / 2, 0));
  curve.add_piece(segment_piece({w, r}, {w, h - r}));
  curve.add_piece(arc_piece({w - r, h - r}, r, 0, kPi / 2));
  curve.add_piece(segment_piece(V{w - r, h}, V{r, h}));
  curve.add_piece(arc_piece({r, h - r}, r, kPi / 2, kPi));
  curve.add_piece(segment_piece(V{0, h - r}, V{0, r}));
  curve.add_piece(arc_piece({r, r}, r, kPi, 3 * kPi / 2));
  return curve;
}

BoundaryCurve dumbbell_curve(double R, double w, double L,
                             double* center_offset) {
  if (!(R > 0.0) || !(w > 0.0) || !(L > 0.0))
    throw std::invalid_argument("dumbbell: radius, width, length must be > 0");
  if (!(w < 0.5 * R))
    throw std::invalid_argument(
        "dumbbell: neck width must be below half the bulb radius");

  const double ell = L / 2;        // half-length of the pinched wall
  const double B = 0.25 * R;       // fillet blend length
  const double x_att = ell + B;    // attachment abscissa
  const double c = x_att + R / std::numbers::sqrt2;  // bulb center offset
  if (center_offset) *center_offset = c;

  // Circle graph of the right bulb (upper half), valid on the blend range.
  auto f = [R, c](double x) -> std::array<double, 3> {
    const double d = x - c;
    const double y = std::sqrt(R * R - d * d);
    return {y, -d / y, -R * R / (y * y * y)};
  };
  // Pinched wall: parabola with minimal width w at x = 0, rising to 75% of
  // the circle-graph height at the blend start.
  const double q_end = 0.75 * f(ell)[0];
  if (!(q_end > w / 2))
    throw std::invalid_argument(
        "dumbbell: neck too wide for the bulbs (no headroom for the pinch)");
  const double cp = (q_end - w / 2) / (ell * ell);
  auto q = [w, cp](double x) -> std::array<double, 3> {
    return {w / 2 + cp * x * x, 2 * cp * x, 2 * cp};
  };
  // Quintic smoothstep: C2 blend weights.
  auto sigma = [](double s) -> std::array<double, 3> {
    const double v = s * s * s * (10 + s * (-15 + 6 * s));
    const double d1 = 30 * s * s * (1 - s) * (1 - s);
    const double d2 = 60 * s * (1 - s) * (1 - 2 * s);
    return {v, d1, d2};
  };
  // Even wall profile: pure pinch for |x| <= ell, blend to the bulb circle on
  // ell <= |x| <= x_att. C2 everywhere by construction.
  auto Y = [=](double x) -> std::array<double, 3> {
    const double ax = std::abs(x);
    const double sg = x < 0 ? -1.0 : 1.0;
    std::array<double, 3> r;
    if (ax <= ell) {
      r = q(x);
      return r;
    }
    const auto qa = q(ax);
    const auto fa = f(ax);
    const auto [s, s1, s2] = sigma((ax - ell) / B);
    const double g0 = fa[0] - qa[0];
    const double g1 = fa[1] - qa[1];
    const double g2 = fa[2] - qa[2];
    const double y = qa[0] + s * g0;
    const double yp = qa[1] + (s1 / B) * g0 + s * g1;
    const double ypp = qa[2] + (s2 / (B * B)) * g0 + 2 * (s1 / B) * g1 + s * g2;
    return {y, sg * yp, ypp};  // even function: odd first derivative
  };

  const double a_att = R / std::numbers::sqrt2;
  (void)a_att;
  BoundaryCurve curve;
  // Right bulb, east side, bottom attachment to top attachment.
  curve.add_piece(arc_piece({c, 0}, R, -3 * kPi / 4, 3 * kPi / 4));
  curve.add_piece(graph_piece(Y, x_att, ell, +1.0));    // upper right fillet
  curve.add_piece(graph_piece(Y, ell, -ell, +1.0));     // upper wall
  curve.add_piece(graph_piece(Y, -ell, -x_att, +1.0));  // upper left fillet
  // Left bulb, west side.
  curve.add_piece(arc_piece({-c, 0}, R, kPi / 4, 7 * kPi / 4));
  curve.add_piece(graph_piece(Y, -x_att, -ell, -1.0));  // lower left fillet
  curve.add_piece(graph_piece(Y, -ell, ell, -1.0));     // lower wall
  curve.add_piece(graph_piece(Y, ell, x_att, -1.0));    // lower right fillet
  return curve;
}

}  // namespace stablab
