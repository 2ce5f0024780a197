#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "stablab/fem.hpp"

using namespace stablab;
using std::numbers::pi;

namespace {

Mesh disk(double h) {
  DomainSpec spec;
  spec.h = h;
  return generate(spec);
}

// Exact boundary flux of a constant vector field c: for each boundary node,
// integral of <c, nu> phi_i over the two adjacent polygon edges.
Eigen::VectorXd polygon_flux(const Mesh& mesh, const Eigen::Vector2d& c) {
  Eigen::VectorXd flux = Eigen::VectorXd::Zero(mesh.node_count());
  for (const auto& loop : mesh.loops) {
    const int n = static_cast<int>(loop.nodes.size());
    for (int j = 0; j < n; ++j) {
      const int i0 = loop.nodes[j], i1 = loop.nodes[(j + 1) % n];
      const Eigen::Vector2d e = mesh.nodes[i1] - mesh.nodes[i0];
      const double edge_flux = c.x() * e.y() - c.y() * e.x();  // <c,nu>|e|
      flux[i0] += 0.5 * edge_flux;
      flux[i1] += 0.5 * edge_flux;
    }
  }
  return flux;
}

}  // namespace

TEST_CASE("residual: constants solve the Neumann problem") {
  const Mesh mesh = disk(0.2);
  const NonlinearProblem problem = neumann_problem(
      laplacian_family(), [](double) { return 0.0; },
      [](double) { return 0.0; });
  const Eigen::VectorXd r = assemble_residual(problem, make_field(mesh, 3.7));
  CHECK(r.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("residual: f == 1 against the zero field gives minus the lumped mass") {
  const Mesh mesh = disk(0.2);
  const NonlinearProblem problem = neumann_problem(
      laplacian_family(), [](double) { return 1.0; },
      [](double) { return 0.0; });
  const Eigen::VectorXd r = assemble_residual(problem, make_field(mesh, 0.0));
  const Eigen::VectorXd lumped = lumped_mass(mesh);
  CHECK((r + lumped).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("residual: affine field under the p-laplacian is a pure flux") {
  DomainSpec spec;
  spec.kind = DomainSpec::Kind::Annulus;
  spec.h = 0.1;
  const Mesh mesh = generate(spec);

  const NonlinearProblem problem = neumann_problem(
      p_laplacian_family(3.0), [](double) { return 0.0; },
      [](double) { return 0.0; });
  const Field u = make_field(
      mesh, [](const Eigen::Vector2d& p) { return p.x(); });
  const Eigen::VectorXd r = assemble_residual(problem, u);

  // a(|grad u|) = a(1) = 1, so the residual reduces to the boundary flux of
  // e1 on both loops; interior entries telescope to zero.
  const Eigen::VectorXd flux = polygon_flux(mesh, Eigen::Vector2d(1.0, 0.0));
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.is_boundary_node(i))
      CHECK(std::abs(r[i] - flux[i]) < 1e-12);
    else
      CHECK(std::abs(r[i]) < 1e-13);
  }
}

TEST_CASE("jacobian: laplacian form is the stiffness matrix") {
  const Mesh mesh = disk(0.2);
  const NonlinearProblem problem = neumann_problem(
      laplacian_family(), [](double) { return 0.0; },
      [](double) { return 0.0; });
  const SpMat J = assemble_jacobian(problem, make_field(mesh, 0.0));
  const SpMat K = stiffness_matrix(mesh);
  CHECK((Eigen::MatrixXd(J) - Eigen::MatrixXd(K)).cwiseAbs().maxCoeff() <
        1e-14);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.node_count());
  CHECK((J * ones).cwiseAbs().maxCoeff() < 1e-13);  // constants in the kernel
}

TEST_CASE("jacobian matches finite differences of the residual") {
  const Mesh mesh = disk(0.2);
  const NonlinearProblem problem = robin_problem(
      laplacian_family(), [](double u) { return u - u * u * u; },
      [](double u) { return 1.0 - 3.0 * u * u; },
      [](double u) { return 0.3 * u + u * u * u; },
      [](double u) { return 0.3 + 3.0 * u * u; });

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Field u = make_field(mesh);
  Field v = make_field(mesh);
  for (int i = 0; i < mesh.node_count(); ++i) {
    u.values[i] = unif(rng);
    v.values[i] = unif(rng);
  }

  const SpMat J = assemble_jacobian(problem, u);
  CHECK((Eigen::MatrixXd(J) - Eigen::MatrixXd(J).transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-13);

  const double delta = 1e-6;
  Field up = u, um = u;
  up.values += delta * v.values;
  um.values -= delta * v.values;
  const Eigen::VectorXd fd =
      (assemble_residual(problem, up) - assemble_residual(problem, um)) /
      (2.0 * delta);
  const Eigen::VectorXd Jv = J * v.values;
  CHECK((fd - Jv).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + Jv.cwiseAbs().maxCoeff()));
}

TEST_CASE("jacobian: frozen-gradient form reproduces A(grad u) exactly") {
  const Mesh mesh = disk(0.15);
  const NonlinearProblem problem = neumann_problem(
      p_laplacian_family(4.0), [](double) { return 0.0; },
      [](double) { return 0.0; });
  const Field u = make_field(
      mesh, [](const Eigen::Vector2d& p) { return p.x() + 2.0 * p.y(); });
  const SpMat J = assemble_jacobian(problem, u);

  // A((1,2)) for p = 4: a = |xi|^2 = 5, a'/|xi| = 2, so A = 5 I + 2 xi xi^T.
  Eigen::Matrix2d A;
  A << 7, 4, 4, 13;
  const Field x1 = make_field(
      mesh, [](const Eigen::Vector2d& p) { return p.x(); });
  const Field x2 = make_field(
      mesh, [](const Eigen::Vector2d& p) { return p.y(); });
  const Eigen::Vector2d e1(1, 0), e2(0, 1);
  const double area = mesh.area();
  CHECK(x1.values.dot(J * x1.values) ==
        doctest::Approx(area * e1.dot(A * e1)).epsilon(1e-12));
  CHECK(x1.values.dot(J * x2.values) ==
        doctest::Approx(area * e1.dot(A * e2)).epsilon(1e-12));
  CHECK(x2.values.dot(J * x2.values) ==
        doctest::Approx(area * e2.dot(A * e2)).epsilon(1e-12));
}

TEST_CASE("mass matrix: total sum, element rule, positivity") {
  const Mesh mesh = disk(0.2);
  const SpMat M = mass_matrix(mesh);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.node_count());
  CHECK(ones.dot(M * ones) == doctest::Approx(mesh.area()).epsilon(1e-12));
  CHECK(mesh.area() == doctest::Approx(pi).epsilon(0.02));

  // diagonal T/6, off-diagonal T/12 per triangle: verify on one interior edge
  int t0 = 0;
  const auto& tr = mesh.triangles[t0];
  double diag_expected = 0.0, off_expected = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& s = mesh.triangles[t];
    const bool has_a = s[0] == tr[0] || s[1] == tr[0] || s[2] == tr[0];
    const bool has_b = s[0] == tr[1] || s[1] == tr[1] || s[2] == tr[1];
    if (has_a) diag_expected += mesh.triangle_area(t) / 6.0;
    if (has_a && has_b) off_expected += mesh.triangle_area(t) / 12.0;
  }
  CHECK(M.coeff(tr[0], tr[0]) == doctest::Approx(diag_expected).epsilon(1e-12));
  CHECK(M.coeff(tr[0], tr[1]) == doctest::Approx(off_expected).epsilon(1e-12));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(M)};
  CHECK(es.eigenvalues()(0) > 0.0);

  CHECK(lumped_mass(mesh).sum() == doctest::Approx(mesh.area()).epsilon(1e-12));
}

TEST_CASE("derivative recovery: affine and quadratic fields") {
  const Mesh mesh = disk(0.15);

  const Field affine = recover_derivatives(make_field(
      mesh, [](const Eigen::Vector2d& p) { return 3.0 * p.x() - 2.0 * p.y(); }));
  for (int i = 0; i < mesh.node_count(); ++i) {
    CHECK((affine.grad_at(i) - Eigen::Vector2d(3, -2)).norm() < 1e-11);
    CHECK(affine.hess_at(i).norm() < 1e-10);
  }

  const Field bowl = recover_derivatives(make_field(
      mesh, [](const Eigen::Vector2d& p) { return 0.5 * p.squaredNorm(); }));
  for (int i = 0; i < mesh.node_count(); ++i) {
    CHECK((bowl.grad_at(i) - mesh.nodes[i]).norm() < 1e-10);
    CHECK((bowl.hess_at(i) - Eigen::Matrix2d::Identity()).norm() < 1e-9);
  }

  const Field sq = recover_derivatives(make_field(
      mesh, [](const Eigen::Vector2d& p) { return p.x() * p.x(); }));
  for (int i = 0; i < mesh.node_count(); ++i)
    CHECK(sq.hess_at(i).trace() == doctest::Approx(2.0).epsilon(1e-9));

  const auto avg = averaged_gradient(mesh, affine.values);
  for (int i = 0; i < mesh.node_count(); ++i)
    CHECK((avg.row(i).transpose() - Eigen::Vector2d(3, -2)).norm() < 1e-12);
}

TEST_CASE("derivative recovery: O(h) Hessian error on a smooth field") {
  const auto hess_err = [](double h) {
    const Mesh mesh = disk(h);
    const Field u = recover_derivatives(make_field(
        mesh, [](const Eigen::Vector2d& p) {
          return std::sin(p.x()) * std::cosh(p.y());
        }));
    double worst = 0.0;
    for (int i = 0; i < mesh.node_count(); ++i) {
      const auto& p = mesh.nodes[i];
      Eigen::Matrix2d H;
      H << -std::sin(p.x()) * std::cosh(p.y()),
          std::cos(p.x()) * std::sinh(p.y()),
          std::cos(p.x()) * std::sinh(p.y()),
          std::sin(p.x()) * std::cosh(p.y());
      worst = std::max(worst, (u.hess_at(i) - H).norm());
    }
    return worst;
  };
  const double coarse = hess_err(0.2), fine = hess_err(0.1);
  CHECK(fine < 0.35);  // measured 0.26 at h = 0.1 (worst node at the boundary)
  CHECK(fine < 0.9 * coarse);
}

TEST_CASE("singular family reports degenerate triangles") {
  const Mesh mesh = disk(0.3);
  const NonlinearProblem problem = neumann_problem(
      p_laplacian_family(1.5), [](double) { return 0.0; },
      [](double) { return 0.0; });
  try {
    assemble_residual(problem, make_field(mesh, 1.0));
    CHECK(false);
  } catch (const DegenerateGradientError& e) {
    CHECK(!e.triangles.empty());
  }
}
