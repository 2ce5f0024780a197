#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace stablab {

// Triangulation of a polygonal region. The input loop points appear first in
// `points`, in their original order; Steiner points follow. Triangles are
// counterclockwise.
struct PolygonTriangulation {
  std::vector<Eigen::Vector2d> points;
  std::vector<std::array<int, 3>> triangles;
};

// Constrained Delaunay triangulation of the region bounded by `loops`
// (outer loop counterclockwise, holes clockwise; loop edges become mesh
// edges), refined toward edge length h by circumcenter insertion and relaxed
// by a few Laplacian smoothing passes.
PolygonTriangulation triangulate_polygon(
    const std::vector<std::vector<Eigen::Vector2d>>& loops, double h);

}  // namespace stablab
