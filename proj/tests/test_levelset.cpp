#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stablab/levelset.hpp"

using namespace stablab;
using std::numbers::pi;

namespace {

Mesh disk(double h, double radius = 1.0) {
  DomainSpec spec;
  spec.h = h;
  spec.radius = radius;
  return generate(spec);
}

Mesh annulus(double h) {
  DomainSpec spec;
  spec.kind = DomainSpec::Kind::Annulus;
  spec.h = h;
  spec.radius = 1.0;
  spec.inner_radius = 0.5;
  return generate(spec);
}

Field field_on(const Mesh& mesh,
               const std::function<double(const Eigen::Vector2d&)>& fn) {
  return recover_derivatives(make_field(mesh, fn));
}

}  // namespace

TEST_CASE("levelset: affine field has straight level lines") {
  const Mesh mesh = disk(0.15);
  const Field u = field_on(
      mesh, [](const Eigen::Vector2d& p) { return 3.0 * p.x() - 2.0 * p.y(); });
  const LevelSetData data = levelset_quantities(u);
  const Eigen::VectorXd residual = curvature_identity_residual(u);

  const double g = std::sqrt(13.0);
  for (int i = 0; i < mesh.node_count(); ++i) {
    REQUIRE(!data.mask[i]);
    CHECK(data.grad_norm[i] == doctest::Approx(g).epsilon(1e-11));
    CHECK(std::abs(data.curvature_k1[i]) < 1e-11);
    CHECK(std::abs(data.tangential_grad_norm[i]) < 1e-11);
    CHECK(std::abs(residual[i]) < 1e-10);
  }
}

TEST_CASE("levelset: radial bowl on the annulus has circular level lines") {
  const Mesh mesh = annulus(0.05);
  const Field u = field_on(
      mesh, [](const Eigen::Vector2d& p) { return 0.5 * p.squaredNorm(); });
  const LevelSetData data = levelset_quantities(u);

  // |grad u| = r, k1 = 1/r, tangential derivative of |grad u| = 0
  for (int i = 0; i < mesh.node_count(); ++i) {
    REQUIRE(!data.mask[i]);
    const double r = mesh.nodes[i].norm();
    CHECK(data.grad_norm[i] == doctest::Approx(r).epsilon(1e-8));
    CHECK(data.curvature_k1[i] == doctest::Approx(1.0 / r).epsilon(0.02));
    CHECK(std::abs(data.tangential_grad_norm[i]) < 0.02);
  }
}

TEST_CASE("levelset: saddle curvature at a sample point") {
  // u = x y: level line through (1,1) is xy = 1 with curvature -1/sqrt(2)
  // against the upward gradient orientation
  const Mesh mesh = disk(0.05, 2.0);
  const Field u = field_on(
      mesh, [](const Eigen::Vector2d& p) { return p.x() * p.y(); });
  const LevelSetData data = levelset_quantities(u);

  int best = 0;
  double best_dist = 1e300;
  for (int i = 0; i < mesh.node_count(); ++i) {
    const double d = (mesh.nodes[i] - Eigen::Vector2d(1.0, 1.0)).norm();
    if (d < best_dist) { best_dist = d; best = i; }
  }
  REQUIRE(best_dist < 0.1);
  CHECK(data.grad_norm[best] == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
  CHECK(data.curvature_k1[best] ==
        doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(0.08));
}

TEST_CASE("levelset: identity residual decays under refinement") {
  double prev = 0.0;
  for (int level = 0; level < 2; ++level) {
    const double h = level == 0 ? 0.2 : 0.1;
    const Mesh mesh = disk(h);
    const Field u = field_on(mesh, [](const Eigen::Vector2d& p) {
      return std::sin(p.x()) * std::cosh(p.y());
    });
    const double res = curvature_identity_residual(u).cwiseAbs().maxCoeff();
    if (level == 1) CHECK(res <= 0.75 * prev);
    prev = res;
  }
}

TEST_CASE("levelset: degenerate nodes are masked and zeroed") {
  const Mesh mesh = disk(0.2);

  // constant field: every node is degenerate
  const Field c = field_on(mesh, [](const Eigen::Vector2d&) { return 4.0; });
  const LevelSetData flat = levelset_quantities(c);
  for (int i = 0; i < mesh.node_count(); ++i) {
    CHECK(flat.mask[i]);
    CHECK(flat.grad_norm[i] == 0.0);
    CHECK(flat.curvature_k1[i] == 0.0);
  }
  CHECK(curvature_identity_residual(c).cwiseAbs().maxCoeff() == 0.0);

  // centered bowl: only the critical point at the origin is masked
  const Field bowl = field_on(
      mesh, [](const Eigen::Vector2d& p) { return 0.5 * p.squaredNorm(); });
  const LevelSetData data = levelset_quantities(bowl, 1e-6);
  int masked = 0;
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (data.mask[i]) {
      ++masked;
      CHECK(mesh.nodes[i].norm() < 1e-6);
    }
  }
  CHECK(masked == 1);
}

TEST_CASE("poincare breakdown: constant solution gives all zeros") {
  const Mesh mesh = disk(0.15);
  const NonlinearProblem problem = neumann_problem(
      laplacian_family(), [](double u) { return u - u * u * u; },
      [](double u) { return 1.0 - 3.0 * u * u; });
  const Field u = recover_derivatives(make_field(mesh, 1.0));
  const Field phi = field_on(
      mesh, [](const Eigen::Vector2d& p) { return 1.0 + 0.3 * p.x(); });

  const PoincareBreakdown b = poincare_breakdown(problem, u, phi);
  CHECK(std::abs(b.interior_lhs) < 1e-12);
  CHECK(std::abs(b.boundary_term) < 1e-12);
  CHECK(std::abs(b.rhs) < 1e-12);
  CHECK(std::abs(b.slack) < 1e-12);
  CHECK(std::abs(b.hessian_form_lhs) < 1e-12);
}

TEST_CASE("poincare breakdown: closed forms for the bowl on the annulus") {
  // u = |x|^2/2 with a == 1, f = -2 (so u solves div grad u + f = 0),
  // Neumann data ignored through phi-independent boundary_term formula:
  //   boundary integrand = f u_nu - <g, d_nu g> = -2<p,nu> - <p,nu>.
  const Mesh mesh = annulus(0.05);
  const NonlinearProblem problem =
      neumann_problem(laplacian_family(), [](double) { return -2.0; },
                      [](double) { return 0.0; });
  const Field u = field_on(
      mesh, [](const Eigen::Vector2d& p) { return 0.5 * p.squaredNorm(); });

  // phi == 1: interior = Int |g|^2 k1^2 = Int_{0.5}^{1} r^2 (1/r)^2 2 pi r dr
  //         = 0.75 pi; rhs = 0; boundary = -3 Bnd <p, nu> = -3 Int div p
  //         = -6 |Omega| = -4.5 pi.
  const Field one = field_on(mesh, [](const Eigen::Vector2d&) { return 1.0; });
  const PoincareBreakdown b1 = poincare_breakdown(problem, u, one);
  CHECK(b1.interior_lhs == doctest::Approx(0.75 * pi).epsilon(0.01));
  CHECK(b1.boundary_term == doctest::Approx(-4.5 * pi).epsilon(0.01));
  CHECK(std::abs(b1.rhs) < 1e-10);
  CHECK(b1.slack ==
        doctest::Approx(-b1.interior_lhs - b1.boundary_term).epsilon(1e-10));
  CHECK(b1.hessian_form_lhs ==
        doctest::Approx(b1.interior_lhs).epsilon(0.02));

  // phi = x1: grad phi = e1 and A = I, so
  // rhs = Int |x|^2 = Int_{0.5}^{1} r^3 2 pi dr = 15 pi / 32.
  const Field phi = field_on(
      mesh, [](const Eigen::Vector2d& p) { return p.x(); });
  const PoincareBreakdown b2 = poincare_breakdown(problem, u, phi);
  CHECK(b2.rhs == doctest::Approx(15.0 * pi / 32.0).epsilon(0.01));
}
