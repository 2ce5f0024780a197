#include "stablab/levelset.hpp"

#include <cmath>
#include <stdexcept>

#include "stablab/coeff.hpp"
#include "stablab/mesh.hpp"

namespace stablab {

namespace {

double sq(double x) { return x * x; }

}  // namespace

LevelSetData levelset_quantities(const Field& u, double eps_grad) {
  if (u.mesh == nullptr || !u.has_derivatives()) {
    throw std::invalid_argument(
        "levelset_quantities: field needs recovered derivatives");
  }
  const Mesh& mesh = *u.mesh;
  const int n = mesh.node_count();

  LevelSetData data;
  data.grad_norm.resize(n);
  data.tangential_grad_norm.setZero(n);
  data.curvature_k1.setZero(n);
  data.mask.assign(n, false);

  for (int i = 0; i < n; ++i) data.grad_norm[i] = u.grad_at(i).norm();

  // grad|grad u| by one averaging pass over the nodal |grad u| values; this
  // route never touches the recovered Hessian, so the identity residual below
  // compares two genuinely independent discretizations.
  data.grad_of_grad_norm = averaged_gradient(mesh, data.grad_norm);

  for (int i = 0; i < n; ++i) {
    const double gn = data.grad_norm[i];
    if (gn <= eps_grad) {
      data.mask[i] = true;
      data.grad_norm[i] = 0.0;
      data.grad_of_grad_norm.row(i).setZero();
      continue;
    }
    const Eigen::Vector2d nrm = u.grad_at(i) / gn;
    const Eigen::Vector2d tau(-nrm.y(), nrm.x());
    const Eigen::Vector2d w = data.grad_of_grad_norm.row(i).transpose();
    const Eigen::Matrix2d H = u.hess_at(i);
    // tangential part of grad|grad u| along the level curve
    data.tangential_grad_norm[i] = std::abs(tau.dot(w));
    // level-curve curvature, oriented by grad u / |grad u|
    data.curvature_k1[i] = tau.dot(H * tau) / gn;
  }
  return data;
}

Eigen::VectorXd curvature_identity_residual(const Field& u, double eps_grad) {
  const LevelSetData data = levelset_quantities(u, eps_grad);
  const int n = u.mesh->node_count();
  Eigen::VectorXd residual = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (data.mask[i]) continue;
    const double hess2 = u.hess_at(i).squaredNorm();
    const double w2 = data.grad_of_grad_norm.row(i).squaredNorm();
    const double t2 = sq(data.tangential_grad_norm[i]);
    const double c2 = sq(data.grad_norm[i] * data.curvature_k1[i]);
    residual[i] = hess2 - w2 - t2 - c2;
  }
  return residual;
}

PoincareBreakdown poincare_breakdown(const NonlinearProblem& problem,
                                     const Field& u, const Field& phi,
                                     double eps_grad) {
  if (u.mesh == nullptr || u.mesh != phi.mesh) {
    throw std::invalid_argument("poincare_breakdown: u and phi must live on "
                                "the same mesh");
  }
  const Mesh& mesh = *u.mesh;
  const CoefficientFamily& family = problem.family;
  const LevelSetData data = levelset_quantities(u, eps_grad);

  PoincareBreakdown out;

  // Interior terms: lumped nodal quadrature over the nondegenerate set.
  const Eigen::VectorXd mlump = lumped_mass(mesh);
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (data.mask[i]) continue;
    const double gn = data.grad_norm[i];
    const double a_val = eval_a(family, gn);
    const double l1 = eval_lambda1(family, gn);
    const double phi2 = sq(phi.values[i]);
    const double t2 = sq(data.tangential_grad_norm[i]);
    const double curv2 = sq(gn * data.curvature_k1[i]);
    out.interior_lhs += mlump[i] * phi2 * (l1 * t2 + a_val * curv2);

    const Eigen::Matrix2d H = u.hess_at(i);
    const Eigen::Matrix2d A = matrix_A(family, u.grad_at(i));
    const Eigen::Vector2d w = data.grad_of_grad_norm.row(i).transpose();
    out.hessian_form_lhs +=
        mlump[i] * phi2 * ((H * A * H).trace() - w.dot(A * w));
  }

  // rhs = Int |grad u|^2 <A(grad u) grad phi, grad phi>, one point per
  // element. The |grad u|^2 factor kills degenerate elements, so they are
  // skipped rather than pushed through a possibly singular a(t).
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector2d gu = element_gradient(mesh, u.values, t);
    const double gn = gu.norm();
    if (gn <= eps_grad) continue;
    const Eigen::Vector2d gp = element_gradient(mesh, phi.values, t);
    const double a_val = eval_a(family, gn);
    const double ap = family.a_prime(gn);
    out.rhs += mesh.triangle_area(t) *
               (a_val * gn * gn * gp.squaredNorm() + ap * gn * sq(gu.dot(gp)));
  }

  // Boundary term via the frame evaluation of <grad u, H nu> and tr H;
  // trapezoidal weights along each loop.
  const BoundaryExpansion be = boundary_expansion(problem, u, eps_grad);
  for (std::size_t j = 0; j < be.nodes.size(); ++j) {
    const int i = be.nodes[j];
    const double gn = u.grad_at(i).norm();
    const double u_i = u.values[i];

    double integrand = problem.f(u_i) * (-be.u_t[j]);  // f(u) d_nu u
    // a(|grad u|) <grad u, H nu> vanishes with grad u; degenerate nodes take
    // the zero limit instead of evaluating a possibly singular a(t).
    if (!be.degenerate[j]) {
      integrand -= eval_a(family, gn) * be.grad_dot_dnu_grad[j];
    }
    if (!problem.h_is_zero) {
      integrand -= problem.h(u_i) * be.laplacian[j];
      integrand -= problem.h_prime(u_i) * gn * gn;
    }
    out.boundary_term += be.weight[j] * sq(phi.values[i]) * integrand;
  }

  out.slack = out.rhs - out.interior_lhs - out.boundary_term;
  return out;
}

BoundaryExpansion boundary_expansion(const NonlinearProblem& problem,
                                     const Field& u, double eps_grad) {
  if (u.mesh == nullptr || !u.has_derivatives()) {
    throw std::invalid_argument(
        "boundary_expansion: field needs recovered derivatives");
  }
  const Mesh& mesh = *u.mesh;
  const CoefficientFamily& family = problem.family;

  BoundaryExpansion out;
  int total = 0;
  for (const BoundaryLoop& loop : mesh.loops) {
    total += static_cast<int>(loop.nodes.size());
  }
  out.nodes.reserve(total);
  out.weight.resize(total);
  out.kappa.resize(total);
  out.u_s.resize(total);
  out.u_ss.resize(total);
  out.u_t.resize(total);
  out.u_tt.setZero(total);
  out.laplacian.setZero(total);
  out.grad_dot_dnu_grad.setZero(total);
  out.degenerate.assign(total, 0);

  int base = 0;
  for (const BoundaryLoop& loop : mesh.loops) {
    const int m = static_cast<int>(loop.nodes.size());
    if (m < 3) {
      throw std::runtime_error("boundary_expansion: loop with fewer than "
                               "three nodes");
    }
    Eigen::VectorXd chord(m);  // |x_{j+1} - x_j|
    for (int j = 0; j < m; ++j) {
      chord[j] =
          (mesh.nodes[loop.nodes[(j + 1) % m]] - mesh.nodes[loop.nodes[j]])
              .norm();
    }
    // nonuniform periodic three-point stencils along the loop
    const auto d1 = [&](int j, double up, double uc, double un) {
      const double h1 = chord[(j + m - 1) % m], h2 = chord[j];
      return (h1 * h1 * un - h2 * h2 * up + (h2 * h2 - h1 * h1) * uc) /
             (h1 * h2 * (h1 + h2));
    };
    // exact orthonormal frame per node: tangent = rotated normal, oriented
    // along the traversal direction
    std::vector<Eigen::Vector2d> tangent(m);
    for (int j = 0; j < m; ++j) {
      const Eigen::Vector2d nu = loop.normal[j];
      Eigen::Vector2d tau(-nu.y(), nu.x());
      const Eigen::Vector2d step = mesh.nodes[loop.nodes[(j + 1) % m]] -
                                   mesh.nodes[loop.nodes[(j + m - 1) % m]];
      if (tau.dot(step) < 0.0) tau = -tau;
      tangent[j] = tau;
    }

    for (int j = 0; j < m; ++j) {
      const int i = loop.nodes[j];
      const int jp = (j + m - 1) % m;
      const int jn = (j + 1) % m;
      const int ip = loop.nodes[jp];
      const int in = loop.nodes[jn];
      const int row = base + j;
      out.nodes.push_back(i);
      out.weight[row] = 0.5 * (chord[jp] + chord[j]);
      out.kappa[row] = loop.curvature[j];

      const Eigen::Vector2d nu = loop.normal[j];
      const Eigen::Vector2d tau = tangent[j];
      const Eigen::Vector2d g = u.grad_at(i);
      const double gn = g.norm();
      out.u_s[row] = d1(j, u.values[ip], u.values[i], u.values[in]);
      out.u_t[row] = -g.dot(nu);

      // dG/ds = H tau: tangential FD of the recovered gradient. Recovery
      // smooths the nodal FEM error, so differentiating G along the loop is
      // stable where a raw second difference of the trace values is not.
      const Eigen::Vector2d Gs(
          d1(j, u.grad_at(ip).x(), g.x(), u.grad_at(in).x()),
          d1(j, u.grad_at(ip).y(), g.y(), u.grad_at(in).y()));
      const Eigen::Vector2d tau_s(
          d1(j, tangent[jp].x(), tau.x(), tangent[jn].x()),
          d1(j, tangent[jp].y(), tau.y(), tangent[jn].y()));
      const double tHt = Gs.dot(tau);
      const double tHn = Gs.dot(nu);
      // d2/ds2 of the trace: d/ds (G . tau)
      out.u_ss[row] = tHt + g.dot(tau_s);

      if (gn <= eps_grad) {
        out.degenerate[row] = 1;
        continue;
      }
      // normal-normal second derivative from the interior equation
      //   a tr H + (a'/|g|) <g, H g> = -f(u),  g = u_s tau - u_t nu
      const double a_val = eval_a(family, gn);
      const double ap = family.a_prime(gn);
      const double us = g.dot(tau);
      const double ut = out.u_t[row];
      const double denom = a_val + ap * ut * ut / gn;
      const double nHn = (-problem.f(u.values[i]) -
                          tHt * (a_val + ap * us * us / gn) +
                          2.0 * ap * us * ut * tHn / gn) /
                         denom;
      out.u_tt[row] = nHn;
      out.laplacian[row] = tHt + nHn;
      out.grad_dot_dnu_grad[row] = us * tHn - ut * nHn;
    }
    base += m;
  }
  return out;
}

}  // namespace stablab
