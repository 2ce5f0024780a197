#include "stablab/delaunay.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace stablab {

namespace {

using Vec2 = Eigen::Vector2d;

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 iff d lies strictly inside the circumcircle of the ccw triangle abc.
double in_circle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double ax = a.x() - d.x(), ay = a.y() - d.y();
  const double bx = b.x() - d.x(), by = b.y() - d.y();
  const double cx = c.x() - d.x(), cy = c.y() - d.y();
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
         a2 * (bx * cy - by * cx);
}

bool segments_cross(const Vec2& p, const Vec2& q, const Vec2& a,
                    const Vec2& b) {
  const double d1 = orient2d(p, q, a);
  const double d2 = orient2d(p, q, b);
  const double d3 = orient2d(a, b, p);
  const double d4 = orient2d(a, b, q);
  return d1 * d2 < 0.0 && d3 * d4 < 0.0;
}

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

struct Tri {
  std::array<int, 3> v;  // ccw
  std::array<int, 3> n;  // neighbor across edge (v[i+1], v[i+2]); -1 if none
  bool alive = true;
};

// Uniform hash grid for nearest-existing-point rejection during refinement.
struct PointGrid {
  double cell;
  std::unordered_map<uint64_t, std::vector<int>> bins;

  explicit PointGrid(double c) : cell(c) {}
  uint64_t key(int ix, int iy) const {
    return (static_cast<uint64_t>(static_cast<uint32_t>(ix + 0x40000000))
            << 32) |
           static_cast<uint32_t>(iy + 0x40000000);
  }
  void add(const Vec2& p, int id) {
    bins[key(static_cast<int>(std::floor(p.x() / cell)),
             static_cast<int>(std::floor(p.y() / cell)))]
        .push_back(id);
  }
  double nearest_dist2(const Vec2& p, const std::vector<Vec2>& pts) const {
    const int ix = static_cast<int>(std::floor(p.x() / cell));
    const int iy = static_cast<int>(std::floor(p.y() / cell));
    double best = std::numeric_limits<double>::max();
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        auto it = bins.find(key(ix + dx, iy + dy));
        if (it == bins.end()) continue;
        for (int id : it->second)
          best = std::min(best, (pts[id] - p).squaredNorm());
      }
    return best;
  }
};

class Triangulator {
 public:
  std::vector<Vec2> pts;
  std::vector<Tri> tris;
  std::vector<int> vert_tri;  // some alive triangle incident to each vertex
  std::unordered_set<uint64_t> constrained;
  int hint = 0;

  void init_super(const Vec2& lo, const Vec2& hi) {
    const Vec2 c = 0.5 * (lo + hi);
    const double r = 4.0 * std::max((hi - lo).norm(), 1e-8);
    pts = {c + Vec2(-2.6 * r, -1.5 * r), c + Vec2(2.6 * r, -1.5 * r),
           c + Vec2(0.0, 3.0 * r)};
    tris.push_back({{0, 1, 2}, {-1, -1, -1}, true});
    vert_tri = {0, 0, 0};
    hint = 0;
  }

  bool is_constrained(int a, int b) const {
    return constrained.count(edge_key(a, b)) > 0;
  }

  int locate(const Vec2& p) const {
    int t = hint;
    if (t < 0 || t >= static_cast<int>(tris.size()) || !tris[t].alive) t = -1;
    if (t < 0) {
      for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i)
        if (tris[i].alive) {
          t = i;
          break;
        }
    }
    const int max_steps = 4 * static_cast<int>(tris.size()) + 64;
    for (int step = 0; step < max_steps; ++step) {
      const Tri& tr = tris[t];
      int next = -1;
      for (int i = 0; i < 3; ++i) {
        const Vec2& a = pts[tr.v[(i + 1) % 3]];
        const Vec2& b = pts[tr.v[(i + 2) % 3]];
        if (orient2d(a, b, p) < 0.0) {
          next = tr.n[i];
          break;
        }
      }
      if (next == -1) return t;  // inside or on an edge
      t = next;
    }
    // Fallback: linear scan with tolerance.
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
      if (!tris[i].alive) continue;
      const Tri& tr = tris[i];
      bool inside = true;
      for (int j = 0; j < 3 && inside; ++j)
        inside = orient2d(pts[tr.v[(j + 1) % 3]], pts[tr.v[(j + 2) % 3]], p) >=
                 -1e-12;
      if (inside) return i;
    }
    throw std::runtime_error("triangulation: point location failed");
  }

  // Bowyer-Watson insertion. Cavity growth never crosses constrained edges.
  int insert(const Vec2& p) {
    const int start = locate(p);
    const int vid = static_cast<int>(pts.size());
    pts.push_back(p);
    vert_tri.push_back(-1);

    // Grow the cavity of triangles whose circumcircle contains p.
    std::vector<int> cavity;
    std::unordered_set<int> in_cavity;
    std::deque<int> work{start};
    in_cavity.insert(start);
    while (!work.empty()) {
      const int t = work.front();
      work.pop_front();
      cavity.push_back(t);
      for (int i = 0; i < 3; ++i) {
        const int nb = tris[t].n[i];
        if (nb < 0 || in_cavity.count(nb)) continue;
        if (is_constrained(tris[t].v[(i + 1) % 3], tris[t].v[(i + 2) % 3]))
          continue;
        const Tri& tn = tris[nb];
        if (in_circle(pts[tn.v[0]], pts[tn.v[1]], pts[tn.v[2]], p) > 0.0) {
          in_cavity.insert(nb);
          work.push_back(nb);
        }
      }
    }

    // Collect the directed cavity boundary (edges whose neighbor is outside),
    // oriented as in their dead triangle so the cavity lies on the left.
    struct BEdge {
      int a, b, outer;
    };
    std::vector<BEdge> border;
    for (int t : cavity) {
      for (int i = 0; i < 3; ++i) {
        const int nb = tris[t].n[i];
        const int a = tris[t].v[(i + 1) % 3];
        const int b = tris[t].v[(i + 2) % 3];
        if (nb < 0 || !in_cavity.count(nb)) border.push_back({a, b, nb});
      }
      tris[t].alive = false;
    }

    // Retriangulate: fan (a, b, vid) over the border.
    std::unordered_map<int, int> tri_of_first;  // border edge start -> new tri
    std::vector<int> fresh;
    fresh.reserve(border.size());
    for (const BEdge& e : border) {
      const int id = static_cast<int>(tris.size());
      tris.push_back({{e.a, e.b, vid}, {-1, -1, -1}, true});
      fresh.push_back(id);
      tri_of_first[e.a] = id;
    }
    for (size_t k = 0; k < border.size(); ++k) {
      const BEdge& e = border[k];
      const int id = fresh[k];
      // Edge (a,b) is opposite vid (index 2).
      tris[id].n[2] = e.outer;
      if (e.outer >= 0) {
        Tri& out = tris[e.outer];
        for (int i = 0; i < 3; ++i)
          if (out.v[(i + 1) % 3] == e.b && out.v[(i + 2) % 3] == e.a)
            out.n[i] = id;
      }
      // Edge (b, vid) is opposite a (index 0): neighbor is the fan triangle
      // starting at b. Edge (vid, a) opposite b (index 1): fan ending at a.
      tris[id].n[0] = tri_of_first.at(e.b);
      vert_tri[e.a] = id;
      vert_tri[e.b] = id;
    }
    for (size_t k = 0; k < border.size(); ++k) {
      const int id = fresh[k];
      const int succ = tris[id].n[0];
      tris[succ].n[1] = id;  // back link
    }
    vert_tri[vid] = fresh.empty() ? -1 : fresh.front();
    hint = vert_tri[vid];
    if (fresh.empty())
      throw std::runtime_error("triangulation: empty insertion cavity");
    return vid;
  }

  // Index of vertex v within triangle t.
  static int index_of(const Tri& t, int v) {
    for (int i = 0; i < 3; ++i)
      if (t.v[i] == v) return i;
    return -1;
  }

  bool edge_exists(int a, int b) const {
    int t = vert_tri[a];
    if (t < 0) return false;
    // Walk around a.
    const int start = t;
    int guard = 0;
    while (guard++ < 1024) {
      const Tri& tr = tris[t];
      const int ia = index_of(tr, a);
      if (ia < 0) return false;
      if (tr.v[(ia + 1) % 3] == b || tr.v[(ia + 2) % 3] == b) return true;
      const int next = tr.n[(ia + 1) % 3];  // rotate around a
      if (next < 0 || next == start) break;
      t = next;
    }
    // The star may be open (hull); scan as fallback.
    for (const Tri& tr : tris) {
      if (!tr.alive) continue;
      const int ia = index_of(tr, a);
      if (ia >= 0 && (tr.v[(ia + 1) % 3] == b || tr.v[(ia + 2) % 3] == b))
        return true;
    }
    return false;
  }

  // Flip the edge opposite vertex index j of triangle t (shared with its
  // neighbor). Returns false if the surrounding quad is not strictly convex.
  bool flip(int t, int j) {
    const int s = tris[t].n[j];
    if (s < 0) return false;
    const int p = tris[t].v[j];
    const int u = tris[t].v[(j + 1) % 3];
    const int w = tris[t].v[(j + 2) % 3];
    const Tri& ts = tris[s];
    int k = -1;
    for (int i = 0; i < 3; ++i)
      if (ts.v[(i + 1) % 3] == w && ts.v[(i + 2) % 3] == u) k = i;
    if (k < 0) throw std::logic_error("triangulation: inconsistent adjacency");
    const int q = ts.v[k];
    // Quad (p, u, q, w) must be strictly convex to flip.
    if (orient2d(pts[p], pts[u], pts[q]) <= 0.0 ||
        orient2d(pts[q], pts[w], pts[p]) <= 0.0)
      return false;

    const int B = tris[t].n[(j + 1) % 3];  // across (w, p)
    const int C = tris[t].n[(j + 2) % 3];  // across (p, u)
    const int E = tris[s].n[(k + 1) % 3];  // across (u, q)
    const int F = tris[s].n[(k + 2) % 3];  // across (q, w)

    tris[t] = {{p, u, q}, {E, s, C}, true};
    tris[s] = {{p, q, w}, {F, B, t}, true};
    auto relink = [&](int tri_id, int old_nb, int new_nb) {
      if (tri_id < 0) return;
      for (int i = 0; i < 3; ++i)
        if (tris[tri_id].n[i] == old_nb) tris[tri_id].n[i] = new_nb;
    };
    relink(E, s, t);
    relink(B, t, s);
    vert_tri[p] = t;
    vert_tri[u] = t;
    vert_tri[q] = t;
    vert_tri[w] = s;
    return true;
  }

  // Sloan edge recovery: flip crossing edges until (a, b) exists.
  void insert_constraint(int a, int b) {
    int rounds = 0;
    while (!edge_exists(a, b)) {
      if (++rounds > 256)
        throw std::runtime_error("triangulation: constraint recovery stalled");
      // Find a triangle incident to a whose opposite edge crosses (a, b).
      bool flipped = false;
      for (int t = 0; t < static_cast<int>(tris.size()) && !flipped; ++t) {
        if (!tris[t].alive) continue;
        const int ia = index_of(tris[t], a);
        if (ia < 0) continue;
        const int u = tris[t].v[(ia + 1) % 3];
        const int w = tris[t].v[(ia + 2) % 3];
        if (!segments_cross(pts[a], pts[b], pts[u], pts[w])) continue;
        // Walk the corridor of triangles crossed by (a, b), flipping the
        // first flippable crossing edge each round.
        int cur = t, jj = ia;
        int guard = 0;
        while (guard++ < 4096) {
          if (is_constrained(tris[cur].v[(jj + 1) % 3],
                             tris[cur].v[(jj + 2) % 3]))
            throw std::runtime_error(
                "triangulation: crossing constrained edges");
          if (flip(cur, jj)) {
            flipped = true;
            break;
          }
          // Not convex: advance to the neighbor and find its crossing edge.
          const int nb = tris[cur].n[jj];
          if (nb < 0) break;
          int found = -1;
          for (int i = 0; i < 3; ++i) {
            const int x = tris[nb].v[(i + 1) % 3];
            const int y = tris[nb].v[(i + 2) % 3];
            if ((x == a && y == b) || (x == b && y == a)) continue;
            if (tris[nb].n[i] == cur) continue;
            if (segments_cross(pts[a], pts[b], pts[x], pts[y])) {
              found = i;
              break;
            }
          }
          if (found < 0) break;
          cur = nb;
          jj = found;
        }
      }
      if (!flipped)
        throw std::runtime_error("triangulation: constraint recovery failed");
    }
    constrained.insert(edge_key(a, b));
  }

  Vec2 circumcenter(const Tri& t, bool* ok) const {
    const Vec2& a = pts[t.v[0]];
    const Vec2& b = pts[t.v[1]];
    const Vec2& c = pts[t.v[2]];
    const Vec2 ab = b - a, ac = c - a;
    const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
    if (std::abs(d) < 1e-30) {
      *ok = false;
      return a;
    }
    const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
    *ok = true;
    return a + Vec2(ac.y() * ab2 - ab.y() * ac2, ab.x() * ac2 - ac.x() * ab2) /
                   d;
  }
};

}  // namespace

PolygonTriangulation triangulate_polygon(
    const std::vector<std::vector<Eigen::Vector2d>>& loops, double h) {
  if (loops.empty()) throw std::invalid_argument("triangulate: no loops");
  if (!(h > 0.0)) throw std::invalid_argument("triangulate: h must be > 0");

  Vec2 lo(std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max());
  Vec2 hi = -lo;
  int total_pts = 0;
  for (const auto& loop : loops) {
    if (loop.size() < 3)
      throw std::invalid_argument("triangulate: loop with < 3 points");
    total_pts += static_cast<int>(loop.size());
    for (const auto& p : loop) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }

  // Winding-number inside test against the input polygon.
  auto inside = [&loops](const Vec2& p) {
    double angle = 0.0;
    for (const auto& loop : loops) {
      const int n = static_cast<int>(loop.size());
      for (int i = 0; i < n; ++i) {
        const Vec2 a = loop[i] - p;
        const Vec2 b = loop[(i + 1) % n] - p;
        angle += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
      }
    }
    return std::abs(angle) > 3.0;  // ~2*pi inside, ~0 outside
  };

  Triangulator tri;
  tri.init_super(lo, hi);
  PointGrid grid(std::max(h, 1e-8));

  // Chain points first, in input order.
  std::vector<std::vector<int>> loop_ids;
  for (const auto& loop : loops) {
    loop_ids.emplace_back();
    for (const auto& p : loop) {
      const int id = tri.insert(p);
      loop_ids.back().push_back(id);
      grid.add(p, id);
    }
  }
  for (const auto& ids : loop_ids) {
    const int n = static_cast<int>(ids.size());
    for (int i = 0; i < n; ++i) {
      const int a = ids[i], b = ids[(i + 1) % n];
      if (!tri.edge_exists(a, b)) tri.insert_constraint(a, b);
      tri.constrained.insert(edge_key(a, b));
    }
  }

  // Circumcenter refinement toward edge length h.
  const double min_sep = 0.62 * h;
  auto needs_refine = [&](const Tri& t) {
    const Vec2& a = tri.pts[t.v[0]];
    const Vec2& b = tri.pts[t.v[1]];
    const Vec2& c = tri.pts[t.v[2]];
    const double e0 = (b - a).norm(), e1 = (c - b).norm(), e2 = (a - c).norm();
    const double longest = std::max({e0, e1, e2});
    const double shortest = std::min({e0, e1, e2});
    if (longest > 1.45 * h) return true;
    const double area2 = std::abs(orient2d(a, b, c));
    if (area2 < 1e-30) return false;
    const double circumr = e0 * e1 * e2 / (2.0 * area2);
    return circumr > 1.5 * shortest && longest > 0.9 * h;
  };

  std::queue<int> work;
  for (int t = 0; t < static_cast<int>(tri.tris.size()); ++t) work.push(t);
  long safety = 64L * (total_pts + static_cast<long>(
                                       ((hi - lo).x() * (hi - lo).y()) /
                                       (0.4 * h * h + 1e-30)) +
                       1024);
  while (!work.empty()) {
    if (--safety < 0)
      throw std::runtime_error("triangulate: refinement did not settle");
    const int t = work.front();
    work.pop();
    if (t >= static_cast<int>(tri.tris.size()) || !tri.tris[t].alive) continue;
    const Tri tr = tri.tris[t];
    if (tr.v[0] < 3 || tr.v[1] < 3 || tr.v[2] < 3) continue;  // super vertex
    const Vec2 centroid =
        (tri.pts[tr.v[0]] + tri.pts[tr.v[1]] + tri.pts[tr.v[2]]) / 3.0;
    if (!inside(centroid)) continue;
    if (!needs_refine(tr)) continue;
    bool ok = false;
    const Vec2 cc = tri.circumcenter(tr, &ok);
    if (!ok || !inside(cc)) continue;
    if (grid.nearest_dist2(cc, tri.pts) < min_sep * min_sep) continue;
    const int before = static_cast<int>(tri.tris.size());
    const int vid = tri.insert(cc);
    grid.add(cc, vid);
    for (int k = before; k < static_cast<int>(tri.tris.size()); ++k)
      work.push(k);
  }

  // Extract interior triangles and compact indices (chain points first).
  std::vector<int> remap(tri.pts.size(), -1);
  PolygonTriangulation out;
  int next_id = 0;
  for (const auto& ids : loop_ids)
    for (int id : ids) {
      remap[id] = next_id++;
      out.points.push_back(tri.pts[id]);
    }
  for (const Tri& t : tri.tris) {
    if (!t.alive) continue;
    if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) continue;
    const Vec2 centroid =
        (tri.pts[t.v[0]] + tri.pts[t.v[1]] + tri.pts[t.v[2]]) / 3.0;
    if (!inside(centroid)) continue;
    std::array<int, 3> tv;
    for (int i = 0; i < 3; ++i) {
      int& m = remap[t.v[i]];
      if (m < 0) {
        m = next_id++;
        out.points.push_back(tri.pts[t.v[i]]);
      }
      tv[i] = m;
    }
    out.triangles.push_back(tv);
  }
  if (out.triangles.empty())
    throw std::runtime_error("triangulate: region is empty");

  // Laplacian smoothing of Steiner points (chain points stay put).
  const int n_fixed = total_pts;
  std::vector<std::vector<int>> nbrs(out.points.size());
  std::vector<std::vector<int>> star(out.points.size());
  for (int t = 0; t < static_cast<int>(out.triangles.size()); ++t)
    for (int i = 0; i < 3; ++i) {
      const int a = out.triangles[t][i];
      nbrs[a].push_back(out.triangles[t][(i + 1) % 3]);
      nbrs[a].push_back(out.triangles[t][(i + 2) % 3]);
      star[a].push_back(t);
    }
  for (int pass = 0; pass < 3; ++pass) {
    for (int v = n_fixed; v < static_cast<int>(out.points.size()); ++v) {
      Vec2 sum(0, 0);
      for (int u : nbrs[v]) sum += out.points[u];
      const Vec2 old = out.points[v];
      out.points[v] = sum / static_cast<double>(nbrs[v].size());
      for (int t : star[v]) {
        const auto& tv = out.triangles[t];
        if (orient2d(out.points[tv[0]], out.points[tv[1]], out.points[tv[2]]) <=
            1e-14) {
          out.points[v] = old;  // would fold an element; keep position
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace stablab
