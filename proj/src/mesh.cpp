#include "stablab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stablab/curve.hpp"
#include "stablab/delaunay.hpp"

namespace stablab {

namespace {
constexpr double kPi = std::numbers::pi;
using Vec2 = Eigen::Vector2d;

double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}
}  // namespace

double Mesh::triangle_area(int t) const {
  const auto& tr = triangles[t];
  return 0.5 * signed_area2(nodes[tr[0]], nodes[tr[1]], nodes[tr[2]]);
}

double Mesh::area() const {
  double sum = 0.0;
  for (int t = 0; t < triangle_count(); ++t) sum += triangle_area(t);
  return sum;
}

double Mesh::boundary_length() const {
  double sum = 0.0;
  for (const auto& loop : loops) {
    const int n = static_cast<int>(loop.nodes.size());
    for (int i = 0; i < n; ++i)
      sum += (nodes[loop.nodes[(i + 1) % n]] - nodes[loop.nodes[i]]).norm();
  }
  return sum;
}

void Mesh::finalize() {
  on_boundary.assign(nodes.size(), 0);
  for (const auto& loop : loops)
    for (int i : loop.nodes) on_boundary[i] = 1;
}

std::vector<std::pair<int, double>> boundary_quadrature(const Mesh& mesh) {
  std::vector<std::pair<int, double>> weights;
  for (const auto& loop : mesh.loops) {
    const int n = static_cast<int>(loop.nodes.size());
    for (int i = 0; i < n; ++i) {
      const double l_prev =
          (mesh.nodes[loop.nodes[i]] - mesh.nodes[loop.nodes[(i + n - 1) % n]])
              .norm();
      const double l_next =
          (mesh.nodes[loop.nodes[(i + 1) % n]] - mesh.nodes[loop.nodes[i]])
              .norm();
      weights.emplace_back(loop.nodes[i], 0.5 * (l_prev + l_next));
    }
  }
  return weights;
}

double min_boundary_curvature(const Mesh& mesh) {
  double m = std::numeric_limits<double>::max();
  for (const auto& loop : mesh.loops)
    for (double k : loop.curvature) m = std::min(m, k);
  return m;
}

void validate_mesh(const Mesh& mesh) {
  const int nn = mesh.node_count();
  for (int i = 0; i < nn; ++i)
    if (!mesh.nodes[i].allFinite())
      throw std::runtime_error("mesh: node " + std::to_string(i) +
                               " has non-finite coordinates");

  std::vector<char> used(nn, 0);
  std::map<std::pair<int, int>, int> edge_count;
  std::map<std::pair<int, int>, int> directed_owner;  // ccw directed edges
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      if (tr[i] < 0 || tr[i] >= nn)
        throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                                 " references missing node");
      used[tr[i]] = 1;
    }
    if (tr[0] == tr[1] || tr[1] == tr[2] || tr[0] == tr[2])
      throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                               " has repeated vertices");
    if (!(mesh.triangle_area(t) > 0.0))
      throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                               " has non-positive area");
    for (int i = 0; i < 3; ++i) {
      const int a = tr[i], b = tr[(i + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
      directed_owner[{a, b}] = t;
    }
  }
  for (int i = 0; i < nn; ++i)
    if (!used[i])
      throw std::runtime_error("mesh: node " + std::to_string(i) +
                               " belongs to no triangle");
  for (const auto& [e, c] : edge_count)
    if (c > 2)
      throw std::runtime_error("mesh: non-manifold edge (" +
                               std::to_string(e.first) + ", " +
                               std::to_string(e.second) + ")");

  // Every boundary edge (incident to one triangle) must appear in exactly one
  // loop, traversed with the domain on its left.
  std::set<std::pair<int, int>> loop_edges;
  for (size_t li = 0; li < mesh.loops.size(); ++li) {
    const auto& loop = mesh.loops[li];
    const int n = static_cast<int>(loop.nodes.size());
    if (n < 5)
      throw std::runtime_error("mesh: boundary loop " + std::to_string(li) +
                               " has fewer than 5 nodes");
    if (loop.normal.size() != loop.nodes.size() ||
        loop.curvature.size() != loop.nodes.size() ||
        loop.arclength.size() != loop.nodes.size())
      throw std::runtime_error("mesh: boundary loop " + std::to_string(li) +
                               " has inconsistent data sizes");
    std::set<int> seen;
    for (int i = 0; i < n; ++i) {
      if (!seen.insert(loop.nodes[i]).second)
        throw std::runtime_error("mesh: boundary loop " + std::to_string(li) +
                                 " repeats node " +
                                 std::to_string(loop.nodes[i]));
      const int a = loop.nodes[i], b = loop.nodes[(i + 1) % n];
      auto ec = edge_count.find({std::min(a, b), std::max(a, b)});
      if (ec == edge_count.end() || ec->second != 1)
        throw std::runtime_error("mesh: loop edge (" + std::to_string(a) +
                                 ", " + std::to_string(b) +
                                 ") is not a boundary edge");
      if (!directed_owner.count({a, b}))
        throw std::runtime_error("mesh: loop edge (" + std::to_string(a) +
                                 ", " + std::to_string(b) +
                                 ") traversed with the domain on its right");
      loop_edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  for (const auto& [e, c] : edge_count)
    if (c == 1 && !loop_edges.count(e))
      throw std::runtime_error("mesh: boundary edge (" +
                               std::to_string(e.first) + ", " +
                               std::to_string(e.second) +
                               ") is covered by no loop");
}

namespace {

// ---------------------------------------------------------------------------
// Structured polar-ring generation (disk, annulus, ellipse).

struct Ring {
  std::vector<int> ids;
  std::vector<double> frac;  // position along the ring in [0, 1)
};

// Zipper triangulation of the band between two concentric rings (both
// counterclockwise, fraction-aligned). Produces |A| + |B| ccw triangles.
void strip(std::vector<std::array<int, 3>>& tris, const Ring& A,
           const Ring& B) {
  const int m = static_cast<int>(A.ids.size());
  const int n = static_cast<int>(B.ids.size());
  auto next_frac = [](const Ring& r, int k) {
    return k + 1 < static_cast<int>(r.ids.size()) ? r.frac[k + 1]
                                                  : 1.0 + r.frac[0];
  };
  int i = 0, j = 0;
  while (i < m || j < n) {
    const double fa =
        i < m ? next_frac(A, i) : std::numeric_limits<double>::max();
    const double fb =
        j < n ? next_frac(B, j) : std::numeric_limits<double>::max();
    if (j < n && fb <= fa) {
      tris.push_back({A.ids[i % m], B.ids[j % n], B.ids[(j + 1) % n]});
      ++j;
    } else {
      tris.push_back({A.ids[i % m], B.ids[j % n], A.ids[(i + 1) % m]});
      ++i;
    }
  }
}

void fan(std::vector<std::array<int, 3>>& tris, int center, const Ring& B) {
  const int n = static_cast<int>(B.ids.size());
  for (int j = 0; j < n; ++j)
    tris.push_back({center, B.ids[j], B.ids[(j + 1) % n]});
}

Mesh disk_mesh(double R, double h) {
  if (!(R > 0.0) || !(h > 0.0))
    throw std::invalid_argument("disk: radius and h must be positive");
  if (h > R) throw std::invalid_argument("disk: h exceeds the radius");
  Mesh mesh;
  const int nr = std::max<long>(1, std::lround(R / h));
  mesh.nodes.push_back({0.0, 0.0});
  std::vector<Ring> rings(nr + 1);
  rings[0].ids = {0};
  rings[0].frac = {0.0};
  for (int k = 1; k <= nr; ++k) {
    const double r = R * k / nr;
    const int n = std::max<long>(8, std::lround(2 * kPi * r / h));
    for (int j = 0; j < n; ++j) {
      const double th = 2 * kPi * j / n;
      rings[k].ids.push_back(static_cast<int>(mesh.nodes.size()));
      rings[k].frac.push_back(double(j) / n);
      mesh.nodes.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  fan(mesh.triangles, 0, rings[1]);
  for (int k = 1; k < nr; ++k) strip(mesh.triangles, rings[k], rings[k + 1]);

  BoundaryLoop loop;
  const int n = static_cast<int>(rings[nr].ids.size());
  for (int j = 0; j < n; ++j) {
    const int id = rings[nr].ids[j];
    loop.nodes.push_back(id);
    loop.normal.push_back(mesh.nodes[id] / R);
    loop.curvature.push_back(1.0 / R);
    loop.arclength.push_back(2 * kPi * R * j / n);
  }
  mesh.loops.push_back(std::move(loop));
  mesh.finalize();
  return mesh;
}

Mesh annulus_mesh(double r0, double R, double h) {
  if (!(r0 > 0.0) || !(R > r0))
    throw std::invalid_argument("annulus: need 0 < inner_radius < radius");
  if (!(h > 0.0) || h > (R - r0))
    throw std::invalid_argument("annulus: h must be in (0, radius - inner_radius]");
  Mesh mesh;
  const int nr = std::max<long>(1, std::lround((R - r0) / h));
  std::vector<Ring> rings(nr + 1);
  for (int k = 0; k <= nr; ++k) {
    const double r = r0 + (R - r0) * k / nr;
    const int n = std::max<long>(8, std::lround(2 * kPi * r / h));
    for (int j = 0; j < n; ++j) {
      const double th = 2 * kPi * j / n;
      rings[k].ids.push_back(static_cast<int>(mesh.nodes.size()));
      rings[k].frac.push_back(double(j) / n);
      mesh.nodes.push_back({r * std::cos(th), r * std::sin(th)});
    }
  }
  for (int k = 0; k < nr; ++k) strip(mesh.triangles, rings[k], rings[k + 1]);

  BoundaryLoop outer;
  const int n_out = static_cast<int>(rings[nr].ids.size());
  for (int j = 0; j < n_out; ++j) {
    const int id = rings[nr].ids[j];
    outer.nodes.push_back(id);
    outer.normal.push_back(mesh.nodes[id] / R);
    outer.curvature.push_back(1.0 / R);
    outer.arclength.push_back(2 * kPi * R * j / n_out);
  }
  mesh.loops.push_back(std::move(outer));

  // Inner loop runs clockwise so the domain stays on its left; the outward
  // normal points into the hole and the curvature is negative.
  BoundaryLoop inner;
  const int n_in = static_cast<int>(rings[0].ids.size());
  for (int j = 0; j < n_in; ++j) {
    const int id = rings[0].ids[(n_in - j) % n_in];
    inner.nodes.push_back(id);
    inner.normal.push_back(-mesh.nodes[id] / r0);
    inner.curvature.push_back(-1.0 / r0);
    inner.arclength.push_back(2 * kPi * r0 * j / n_in);
  }
  mesh.loops.push_back(std::move(inner));
  mesh.finalize();
  return mesh;
}

Mesh ellipse_mesh(double rx, double ry, double h) {
  if (!(rx > 0.0) || !(ry > 0.0) || !(h > 0.0))
    throw std::invalid_argument("ellipse: semi-axes and h must be positive");
  const double aspect = std::max(rx / ry, ry / rx);
  if (aspect > 3.0)
    throw std::invalid_argument(
        "ellipse: aspect ratio above 3 is outside the generator's range");
  if (h > std::min(rx, ry))
    throw std::invalid_argument("ellipse: h exceeds the minor semi-axis");

  Mesh mesh;
  const int nr = std::max<long>(1, std::lround(std::sqrt(rx * ry) / h));
  mesh.nodes.push_back({0.0, 0.0});
  std::vector<Ring> rings(nr + 1);
  rings[0].ids = {0};
  rings[0].frac = {0.0};

  BoundaryLoop loop;
  for (int k = 1; k <= nr; ++k) {
    const double rho = double(k) / nr;
    BoundaryCurve ring_curve = ellipse_curve(rho * rx, rho * ry);
    const double P = ring_curve.length();
    const int n = std::max<long>(8, std::lround(P / h));
    const auto samples = ring_curve.sample_uniform(n);
    for (int j = 0; j < n; ++j) {
      const int id = static_cast<int>(mesh.nodes.size());
      rings[k].ids.push_back(id);
      rings[k].frac.push_back(double(j) / n);
      mesh.nodes.push_back(samples.point[j]);
      if (k == nr) {
        loop.nodes.push_back(id);
        loop.normal.push_back(samples.normal[j]);
        loop.curvature.push_back(samples.curvature[j]);
        loop.arclength.push_back(samples.arclength[j]);
      }
    }
  }
  fan(mesh.triangles, 0, rings[1]);
  for (int k = 1; k < nr; ++k) strip(mesh.triangles, rings[k], rings[k + 1]);
  mesh.loops.push_back(std::move(loop));
  mesh.finalize();
  return mesh;
}

// ---------------------------------------------------------------------------
// Curve-bounded domains through constrained Delaunay.

Mesh curve_mesh(const BoundaryCurve& curve, double h) {
  const auto samples = curve.sample(h);
  const auto tri = triangulate_polygon({samples.point}, h);

  Mesh mesh;
  mesh.nodes = tri.points;
  mesh.triangles = tri.triangles;
  BoundaryLoop loop;
  const int nb = static_cast<int>(samples.point.size());
  for (int j = 0; j < nb; ++j) {
    loop.nodes.push_back(j);
    loop.normal.push_back(samples.normal[j]);
    loop.curvature.push_back(samples.curvature[j]);
    loop.arclength.push_back(samples.arclength[j]);
  }
  mesh.loops.push_back(std::move(loop));
  mesh.finalize();
  return mesh;
}

// ---------------------------------------------------------------------------
// Boundary geometry reconstruction for loaded meshes: least-squares quadratic
// fit of position against cumulative chord length over the 5-node stencil.

void reconstruct_boundary_geometry(Mesh& mesh) {
  for (auto& loop : mesh.loops) {
    const int n = static_cast<int>(loop.nodes.size());
    std::vector<double> chord(n);  // chord(i): edge i -> i+1
    for (int i = 0; i < n; ++i)
      chord[i] =
          (mesh.nodes[loop.nodes[(i + 1) % n]] - mesh.nodes[loop.nodes[i]])
              .norm();
    loop.normal.resize(n);
    loop.curvature.resize(n);
    loop.arclength.resize(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      loop.arclength[i] = s;
      s += chord[i];
    }
    for (int i = 0; i < n; ++i) {
      // Signed chordal offsets of the 5 stencil nodes around i.
      std::array<double, 5> t;
      t[2] = 0.0;
      t[1] = -chord[(i + n - 1) % n];
      t[0] = t[1] - chord[(i + n - 2) % n];
      t[3] = chord[i];
      t[4] = t[3] + chord[(i + 1) % n];
      Eigen::Matrix<double, 5, 3> V;
      Eigen::Matrix<double, 5, 2> P;
      for (int k = 0; k < 5; ++k) {
        V(k, 0) = 1.0;
        V(k, 1) = t[k];
        V(k, 2) = t[k] * t[k];
        P.row(k) = mesh.nodes[loop.nodes[(i + n - 2 + k) % n]].transpose();
      }
      const Eigen::Matrix<double, 3, 2> coef =
          (V.transpose() * V).ldlt().solve(V.transpose() * P);
      const Vec2 d1 = coef.row(1).transpose();
      const Vec2 d2 = 2.0 * coef.row(2).transpose();
      const double speed = d1.norm();
      if (!(speed > 0.0))
        throw std::runtime_error("mesh: degenerate boundary stencil");
      loop.normal[i] = Vec2(d1.y(), -d1.x()) / speed;
      loop.curvature[i] =
          (d1.x() * d2.y() - d1.y() * d2.x()) / (speed * speed * speed);
    }
  }
}

}  // namespace

Mesh generate(const DomainSpec& spec) {
  Mesh mesh;
  switch (spec.kind) {
    case DomainSpec::Kind::Disk:
      mesh = disk_mesh(spec.radius, spec.h);
      break;
    case DomainSpec::Kind::Annulus:
      mesh = annulus_mesh(spec.inner_radius, spec.radius, spec.h);
      break;
    case DomainSpec::Kind::Ellipse:
      mesh = ellipse_mesh(spec.rx, spec.ry, spec.h);
      break;
    case DomainSpec::Kind::Rectangle:
      mesh = curve_mesh(
          rounded_rectangle_curve(spec.width, spec.height, spec.rounding),
          spec.h);
      break;
    case DomainSpec::Kind::Dumbbell:
      if (spec.h > spec.neck_width)
        throw std::invalid_argument(
            "dumbbell: h must not exceed the neck width");
      mesh = curve_mesh(
          dumbbell_curve(spec.radius, spec.neck_width, spec.neck_length),
          spec.h);
      break;
    case DomainSpec::Kind::File:
      return load_mesh(spec.path);  // validated on load
  }
  validate_mesh(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  out.precision(17);
  out << "nodes " << mesh.node_count() << "\n";
  for (const auto& p : mesh.nodes) out << p.x() << " " << p.y() << "\n";
  out << "triangles " << mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles)
    out << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& loop : mesh.loops) {
    out << "bloop " << loop.nodes.size();
    for (int i : loop.nodes) out << " " << i;
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing mesh file: " + path);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);

  Mesh mesh;
  std::string line;
  int lineno = 0;
  auto next_line = [&](std::istringstream& ls) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ls = std::istringstream(line);
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& msg) -> std::runtime_error {
    return std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
  };

  std::istringstream ls;
  std::string word;
  long count = 0;
  if (!next_line(ls) || !(ls >> word >> count) || word != "nodes" || count < 3)
    throw fail("expected 'nodes N'");
  for (long i = 0; i < count; ++i) {
    double x, y;
    if (!next_line(ls) || !(ls >> x >> y)) throw fail("expected 'x y'");
    mesh.nodes.push_back({x, y});
  }
  if (!next_line(ls) || !(ls >> word >> count) || word != "triangles" ||
      count < 1)
    throw fail("expected 'triangles T'");
  for (long t = 0; t < count; ++t) {
    int i, j, k;
    if (!next_line(ls) || !(ls >> i >> j >> k)) throw fail("expected 'i j k'");
    mesh.triangles.push_back({i, j, k});
  }
  while (next_line(ls)) {
    long n = 0;
    if (!(ls >> word >> n) || word != "bloop" || n < 3)
      throw fail("expected 'bloop n i1 ... in'");
    BoundaryLoop loop;
    for (long i = 0; i < n; ++i) {
      int id;
      if (!(ls >> id)) throw fail("boundary loop is shorter than declared");
      loop.nodes.push_back(id);
    }
    mesh.loops.push_back(std::move(loop));
  }
  if (mesh.loops.empty()) throw fail("mesh file declares no boundary loop");

  for (const auto& loop : mesh.loops)
    for (int id : loop.nodes)
      if (id < 0 || id >= mesh.node_count())
        throw std::runtime_error(path + ": boundary loop references node " +
                                 std::to_string(id) + " outside range");

  reconstruct_boundary_geometry(mesh);
  mesh.finalize();
  validate_mesh(mesh);
  return mesh;
}

}  // namespace stablab
