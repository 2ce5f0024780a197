#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace stablab {

// One closed boundary loop, stored with the domain on its left (outer loops
// counterclockwise, hole loops clockwise). Geometry is per chain node.
struct BoundaryLoop {
  std::vector<int> nodes;
  std::vector<Eigen::Vector2d> normal;  // outward unit normal
  std::vector<double> curvature;        // signed; > 0 where the domain is convex
  std::vector<double> arclength;        // cumulative from the chain start
};

// Conforming triangulation of a plane domain. Triangles are counterclockwise;
// every boundary edge belongs to exactly one loop.
struct Mesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryLoop> loops;
  std::vector<char> on_boundary;  // per-node flag, filled by finalize()

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  double triangle_area(int t) const;
  double area() const;
  double boundary_length() const;
  bool is_boundary_node(int i) const { return on_boundary[i] != 0; }

  void finalize();  // rebuilds derived flags
};

struct DomainSpec {
  enum class Kind { Disk, Annulus, Rectangle, Ellipse, Dumbbell, File };
  Kind kind = Kind::Disk;
  double h = 0.1;          // target mesh size
  double radius = 1.0;     // disk / annulus outer / dumbbell bulb radius
  double inner_radius = 0.5;  // annulus
  double width = 1.0;      // rectangle
  double height = 1.0;     // rectangle
  double rounding = 0.1;   // rectangle corner radius (> 0: smooth boundary)
  double rx = 1.0;         // ellipse semi-axes
  double ry = 0.6;
  double neck_width = 0.1;   // dumbbell minimal neck width
  double neck_length = 1.0;  // dumbbell pinched-wall length
  std::string path;          // Kind::File
};

// Builds a mesh for the requested domain: structured polar rings for disk,
// annulus and ellipse; constrained Delaunay for rectangle and dumbbell;
// load_mesh for files. Boundary nodes lie on the analytic curve and carry
// analytic normals and curvatures.
Mesh generate(const DomainSpec& spec);

// Plain-text format: "nodes N" / N lines "x y" / "triangles T" / T lines
// "i j k" / one "bloop n i1 ... in" line per loop. Loaded meshes are
// validated and get boundary normals/curvatures reconstructed from 5-node
// arc-length stencils.
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

// Trapezoidal boundary weights: (node, weight) with weight the half-sum of
// the adjacent edge lengths. Sums to the boundary length.
std::vector<std::pair<int, double>> boundary_quadrature(const Mesh& mesh);

// Structural checks (positive areas, manifold edges, closed loops, loops
// covering the boundary); throws std::runtime_error naming the offender.
void validate_mesh(const Mesh& mesh);

double min_boundary_curvature(const Mesh& mesh);

// Parses the domain.* keys of a config into a DomainSpec (see config.hpp for
// the file format). Declared here to keep CLI and scenarios in one dialect.
struct Config;
DomainSpec domain_from_config(const Config& cfg);

}  // namespace stablab
