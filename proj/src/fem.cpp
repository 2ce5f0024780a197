#include "stablab/fem.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace stablab {

namespace {

using Vec2 = Eigen::Vector2d;

// Gradients of the three hat functions and the (positive) area.
struct ElementGeometry {
  std::array<Vec2, 3> grad;
  double area;
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& tr = mesh.triangles[t];
  const Vec2& p0 = mesh.nodes[tr[0]];
  const Vec2& p1 = mesh.nodes[tr[1]];
  const Vec2& p2 = mesh.nodes[tr[2]];
  const double two_area = (p1.x() - p0.x()) * (p2.y() - p0.y()) -
                          (p1.y() - p0.y()) * (p2.x() - p0.x());
  auto rot = [](const Vec2& v) { return Vec2(-v.y(), v.x()); };
  ElementGeometry g;
  g.area = 0.5 * two_area;
  g.grad[0] = rot(p2 - p1) / two_area;
  g.grad[1] = rot(p0 - p2) / two_area;
  g.grad[2] = rot(p1 - p0) / two_area;
  return g;
}

void check_field(const Field& u, const char* where) {
  if (!u.mesh) throw std::invalid_argument(std::string(where) + ": field has no mesh");
  if (u.values.size() != u.mesh->node_count())
    throw std::invalid_argument(std::string(where) +
                                ": field size does not match the mesh");
}

[[noreturn]] void throw_degenerate(const std::string& family,
                                   std::vector<int> tris) {
  std::string msg = "family '" + family +
                    "' hit a vanishing gradient on triangles {";
  for (size_t i = 0; i < tris.size() && i < 8; ++i)
    msg += (i ? ", " : "") + std::to_string(tris[i]);
  if (tris.size() > 8) msg += ", ...";
  msg += "}";
  throw DegenerateGradientError(msg, std::move(tris));
}

}  // namespace

Field make_field(const Mesh& mesh, double value) {
  Field f;
  f.mesh = &mesh;
  f.values = Eigen::VectorXd::Constant(mesh.node_count(), value);
  return f;
}

Field make_field(const Mesh& mesh,
                 const std::function<double(const Eigen::Vector2d&)>& fn) {
  Field f;
  f.mesh = &mesh;
  f.values.resize(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) f.values[i] = fn(mesh.nodes[i]);
  return f;
}

NonlinearProblem neumann_problem(CoefficientFamily family, ScalarFn f,
                                 ScalarFn f_prime) {
  NonlinearProblem p;
  p.family = std::move(family);
  p.f = std::move(f);
  p.f_prime = std::move(f_prime);
  p.h_is_zero = true;
  return p;
}

NonlinearProblem robin_problem(CoefficientFamily family, ScalarFn f,
                               ScalarFn f_prime, ScalarFn h,
                               ScalarFn h_prime) {
  NonlinearProblem p;
  p.family = std::move(family);
  p.f = std::move(f);
  p.f_prime = std::move(f_prime);
  p.h = std::move(h);
  p.h_prime = std::move(h_prime);
  p.h_is_zero = false;
  return p;
}

Eigen::Vector2d element_gradient(const Mesh& mesh,
                                 const Eigen::VectorXd& values, int t) {
  const auto g = element_geometry(mesh, t);
  const auto& tr = mesh.triangles[t];
  return values[tr[0]] * g.grad[0] + values[tr[1]] * g.grad[1] +
         values[tr[2]] * g.grad[2];
}

Eigen::VectorXd assemble_residual(const NonlinearProblem& problem,
                                  const Field& u) {
  check_field(u, "assemble_residual");
  const Mesh& mesh = *u.mesh;
  Eigen::VectorXd R = Eigen::VectorXd::Zero(mesh.node_count());
  std::vector<int> degenerate;

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto& tr = mesh.triangles[t];
    const Vec2 g = u.values[tr[0]] * geom.grad[0] +
                   u.values[tr[1]] * geom.grad[1] +
                   u.values[tr[2]] * geom.grad[2];
    const double gn = g.norm();
    double coef;
    if (gn <= problem.family.grad_floor) {
      if (!problem.family.regular_at_zero || !problem.family.zero_limit) {
        degenerate.push_back(t);
        continue;
      }
      coef = *problem.family.zero_limit;
    } else {
      coef = problem.family.a(gn);
    }
    for (int a = 0; a < 3; ++a)
      R[tr[a]] += coef * geom.area * g.dot(geom.grad[a]);

    // Reaction term, 3-point edge-midpoint rule (exact through quadratics).
    const double w = geom.area / 3.0;
    for (int a = 0; a < 3; ++a) {
      const double m_ab = 0.5 * (u.values[tr[a]] + u.values[tr[(a + 1) % 3]]);
      const double m_ca = 0.5 * (u.values[tr[(a + 2) % 3]] + u.values[tr[a]]);
      R[tr[a]] -= w * 0.5 * (problem.f(m_ab) + problem.f(m_ca));
    }
  }
  if (!degenerate.empty())
    throw_degenerate(problem.family.name, std::move(degenerate));

  if (!problem.h_is_zero) {
    for (const auto& loop : mesh.loops) {
      const int n = static_cast<int>(loop.nodes.size());
      for (int i = 0; i < n; ++i) {
        const int a = loop.nodes[i], b = loop.nodes[(i + 1) % n];
        const double len = (mesh.nodes[b] - mesh.nodes[a]).norm();
        const double um = 0.5 * (u.values[a] + u.values[b]);
        const double hm = problem.h(um);
        R[a] += len * (problem.h(u.values[a]) / 6.0 + hm / 3.0);
        R[b] += len * (problem.h(u.values[b]) / 6.0 + hm / 3.0);
      }
    }
  }
  return R;
}

SpMat assemble_jacobian(const NonlinearProblem& problem, const Field& u) {
  check_field(u, "assemble_jacobian");
  const Mesh& mesh = *u.mesh;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangle_count());
  std::vector<int> degenerate;

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto& tr = mesh.triangles[t];
    const Vec2 g = u.values[tr[0]] * geom.grad[0] +
                   u.values[tr[1]] * geom.grad[1] +
                   u.values[tr[2]] * geom.grad[2];
    Eigen::Matrix2d A;
    const double gn = g.norm();
    if (gn <= problem.family.grad_floor) {
      if (!problem.family.regular_at_zero || !problem.family.zero_limit) {
        degenerate.push_back(t);
        continue;
      }
      A = *problem.family.zero_limit * Eigen::Matrix2d::Identity();
    } else {
      A = (problem.family.a_prime(gn) / gn) * (g * g.transpose()) +
          problem.family.a(gn) * Eigen::Matrix2d::Identity();
    }

    std::array<double, 3> fpm;  // f' at the edge midpoints (01, 12, 20)
    for (int a = 0; a < 3; ++a)
      fpm[a] = problem.f_prime(
          0.5 * (u.values[tr[a]] + u.values[tr[(a + 1) % 3]]));
    const double w = geom.area / 3.0;

    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double v = geom.area * geom.grad[a].dot(A * geom.grad[b]);
        if (a == b) {
          // Midpoints touching vertex a: edges (a, a+1) and (a+2, a).
          v -= w * 0.25 * (fpm[a] + fpm[(a + 2) % 3]);
        } else {
          // Single midpoint shared by hats a and b.
          const int e = (b == (a + 1) % 3) ? a : b;
          v -= w * 0.25 * fpm[e];
        }
        trip.emplace_back(tr[a], tr[b], v);
      }
  }
  if (!degenerate.empty())
    throw_degenerate(problem.family.name, std::move(degenerate));

  if (!problem.h_is_zero) {
    for (const auto& loop : mesh.loops) {
      const int n = static_cast<int>(loop.nodes.size());
      for (int i = 0; i < n; ++i) {
        const int a = loop.nodes[i], b = loop.nodes[(i + 1) % n];
        const double len = (mesh.nodes[b] - mesh.nodes[a]).norm();
        const double hm = problem.h_prime(0.5 * (u.values[a] + u.values[b]));
        trip.emplace_back(
            a, a, len * (problem.h_prime(u.values[a]) / 6.0 + hm / 6.0));
        trip.emplace_back(
            b, b, len * (problem.h_prime(u.values[b]) / 6.0 + hm / 6.0));
        trip.emplace_back(a, b, len * hm / 6.0);
        trip.emplace_back(b, a, len * hm / 6.0);
      }
    }
  }

  SpMat J(mesh.node_count(), mesh.node_count());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

SpMat mass_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double T = mesh.triangle_area(t);
    const auto& tr = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trip.emplace_back(tr[a], tr[b], T / 12.0 * (a == b ? 2.0 : 1.0));
  }
  SpMat M(mesh.node_count(), mesh.node_count());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

Eigen::VectorXd lumped_mass(const Mesh& mesh) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double share = mesh.triangle_area(t) / 3.0;
    for (int a = 0; a < 3; ++a) m[mesh.triangles[t][a]] += share;
  }
  return m;
}

SpMat stiffness_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto& tr = mesh.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trip.emplace_back(tr[a], tr[b],
                          geom.area * geom.grad[a].dot(geom.grad[b]));
  }
  SpMat K(mesh.node_count(), mesh.node_count());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SpMat boundary_mass_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& loop : mesh.loops) {
    const int n = static_cast<int>(loop.nodes.size());
    for (int i = 0; i < n; ++i) {
      const int a = loop.nodes[i], b = loop.nodes[(i + 1) % n];
      const double len = (mesh.nodes[b] - mesh.nodes[a]).norm();
      trip.emplace_back(a, a, len / 3.0);
      trip.emplace_back(b, b, len / 3.0);
      trip.emplace_back(a, b, len / 6.0);
      trip.emplace_back(b, a, len / 6.0);
    }
  }
  SpMat B(mesh.node_count(), mesh.node_count());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> averaged_gradient(
    const Mesh& mesh, const Eigen::VectorXd& values) {
  if (values.size() != mesh.node_count())
    throw std::invalid_argument("averaged_gradient: size mismatch");
  Eigen::Matrix<double, Eigen::Dynamic, 2> g =
      Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(mesh.node_count(), 2);
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(mesh.node_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Vec2 gt = element_gradient(mesh, values, t);
    const double T = mesh.triangle_area(t);
    for (int a = 0; a < 3; ++a) {
      g.row(mesh.triangles[t][a]) += T * gt.transpose();
      wsum[mesh.triangles[t][a]] += T;
    }
  }
  for (int i = 0; i < mesh.node_count(); ++i) g.row(i) /= wsum[i];
  return g;
}

Field recover_derivatives(Field u) {
  check_field(u, "recover_derivatives");
  const Mesh& mesh = *u.mesh;
  const int nn = mesh.node_count();

  std::vector<std::set<int>> ring1(nn);
  for (const auto& tr : mesh.triangles)
    for (int a = 0; a < 3; ++a) {
      ring1[tr[a]].insert(tr[(a + 1) % 3]);
      ring1[tr[a]].insert(tr[(a + 2) % 3]);
    }

  u.gradient.emplace(nn, 2);
  u.hessian.emplace(nn, 3);

  std::vector<int> patch;
  for (int i = 0; i < nn; ++i) {
    patch.clear();
    std::set<int> seen{i};
    for (int j : ring1[i]) seen.insert(j);
    for (int j : ring1[i])
      for (int k : ring1[j]) seen.insert(k);
    // Expand once more if the patch is too small for a quadratic fit.
    if (seen.size() < 8) {
      std::set<int> grow = seen;
      for (int j : grow)
        for (int k : ring1[j]) seen.insert(k);
    }
    patch.assign(seen.begin(), seen.end());

    // Scaled local coordinates keep the normal equations well conditioned.
    double rho = 0.0;
    for (int j : patch) rho += (mesh.nodes[j] - mesh.nodes[i]).norm();
    rho /= std::max<size_t>(patch.size() - 1, 1);
    if (!(rho > 0.0)) rho = 1.0;

    Eigen::Matrix<double, 6, 6> N = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
    for (int j : patch) {
      const Vec2 d = (mesh.nodes[j] - mesh.nodes[i]) / rho;
      Eigen::Matrix<double, 6, 1> row;
      row << 1.0, d.x(), d.y(), d.x() * d.x(), d.x() * d.y(), d.y() * d.y();
      N += row * row.transpose();
      rhs += row * u.values[j];
    }
    const Eigen::Matrix<double, 6, 1> c = N.ldlt().solve(rhs);
    (*u.gradient)(i, 0) = c[1] / rho;
    (*u.gradient)(i, 1) = c[2] / rho;
    (*u.hessian)(i, 0) = 2.0 * c[3] / (rho * rho);
    (*u.hessian)(i, 1) = c[4] / (rho * rho);
    (*u.hessian)(i, 2) = 2.0 * c[5] / (rho * rho);
  }
  return u;
}

}  // namespace stablab
