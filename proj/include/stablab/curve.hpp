#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace stablab {

// Second-order jet of a parametric plane curve.
struct CurveJet {
  Eigen::Vector2d p;   // position
  Eigen::Vector2d d1;  // dp/dt
  Eigen::Vector2d d2;  // d2p/dt2
};

// One smooth piece, parametrized over t in [0, 1].
using CurveFn = std::function<CurveJet(double)>;

// Closed piecewise-smooth curve traversed with the domain on its left
// (outer boundaries counterclockwise, hole boundaries clockwise). Pieces
// must join end-to-start; closure is the caller's responsibility and is
// checked when sampling.
class BoundaryCurve {
 public:
  void add_piece(CurveFn fn) { pieces_.push_back(std::move(fn)); }
  int piece_count() const { return static_cast<int>(pieces_.size()); }

  struct Samples {
    std::vector<Eigen::Vector2d> point;
    std::vector<Eigen::Vector2d> normal;  // outward unit normal
    std::vector<double> curvature;        // signed; > 0 where convex
    std::vector<double> arclength;        // cumulative from the first sample
    double total_length = 0.0;
  };

  double length() const;

  // Near-equal arc-length samples at target spacing h. Piece endpoints are
  // always sampled (so piecewise-constant curvature integrates cleanly), and
  // pieces are refined to at least min_per_piece intervals and to a spacing
  // that resolves their curvature (spacing <= 1/(2 max|kappa|)).
  Samples sample(double h, int min_per_piece = 2) const;

  // Exactly n equally spaced samples along the whole curve (used by the
  // ring-based generators, where every piece is a full smooth loop).
  Samples sample_uniform(int n) const;

 private:
  std::vector<CurveFn> pieces_;
};

// Circle of radius r about c, counterclockwise, as a single closed piece.
BoundaryCurve circle_curve(const Eigen::Vector2d& c, double r);

// Same circle traversed clockwise (hole boundary; domain outside).
BoundaryCurve circle_curve_cw(const Eigen::Vector2d& c, double r);

// Axis-aligned ellipse about the origin, counterclockwise.
BoundaryCurve ellipse_curve(double rx, double ry);

// Rectangle [0,w] x [0,h] with corners rounded at radius r, counterclockwise.
BoundaryCurve rounded_rectangle_curve(double w, double h, double r);

// Dumbbell: bulbs of radius R centered at (+-c, 0), neck of minimal width w
// around the origin, C2 fillets. neck_length is the extent of the pinched
// wall section; the full neck (walls + fillets) is longer. Returns the curve
// and the bulb center offset c.
BoundaryCurve dumbbell_curve(double bulb_radius, double neck_width,
                             double neck_length, double* center_offset = nullptr);

}  // namespace stablab
