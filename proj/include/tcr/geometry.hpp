#pragma once

#include <array>
#include <memory>
#include <vector>

#include "tcr/trimesh.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

// Exact closest point on a single triangle (region-based case analysis).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestSurfacePoint {
    double dist = 0;
    Vec3 point;
    int triangle = -1;
    double b0 = 0, b1 = 0, b2 = 0; // barycentric on `triangle`
};

// Uniform spatial grid over a mesh's triangles. Backs both ray-parity
// inside/outside queries and exact nearest-surface-point queries. Candidate
// enumeration is conservative (AABB binning), so results are identical to
// scanning every triangle.
class TriangleGrid {
  public:
    explicit TriangleGrid(const TriMesh& mesh);

    // Number of ray/surface crossings from `origin` along `dir`.
    int count_crossings(const Vec3& origin, const Vec3& dir) const;

    ClosestSurfacePoint closest_point(const Vec3& p) const;

    const TriMesh& mesh() const { return mesh_; }

  private:
    std::array<int, 3> cell_coords(const Vec3& p) const;
    const std::vector<int>& cell_tris(int i, int j, int k) const;

    TriMesh mesh_;
    Aabb bounds_;
    std::array<int, 3> res_{1, 1, 1};
    Vec3 cell_size_{1, 1, 1};
    std::vector<std::vector<int>> cells_;
    mutable std::vector<std::uint32_t> mailbox_; // per-triangle visit stamps
    mutable std::uint32_t stamp_ = 0;
};

// Inside/outside classification by ray-crossing parity. Three fixed jittered
// ray directions vote so a single degenerate hit cannot flip the answer.
// The mesh must pass the watertightness check; this is verified once at
// construction.
class InsideTester {
  public:
    explicit InsideTester(const TriMesh& mesh);

    bool inside(const Vec3& X) const;
    const TriangleGrid& grid() const { return *grid_; }

  private:
    std::shared_ptr<TriangleGrid> grid_;
};

// Occupancy label of one point; builds the acceleration structure per call,
// so batch callers should use InsideTester directly.
int point_in_mesh(const TriMesh& mesh, const Vec3& X);

// Binary occupancy at cell-center nodes: value = inside test at node_pos.
// `bounds` must enclose the mesh.
VoxelGrid voxelize(const TriMesh& mesh, std::array<int, 3> resolution, const Aabb& bounds);

} // namespace tcr
