#pragma once

#include <vector>

#include "tcr/vec3.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

// Symmetric mean nearest-neighbor distance between two point sets,
// 0.5*(mean_a min_b |a-b| + mean_b min_a |a-b|), in the units of the input
// coordinates. The spatial-grid acceleration visits a superset of the
// nearest candidates and evaluates the same squared-distance expression as
// an exhaustive scan, so the result is identical to brute force.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// |A and B| / |A or B| over binary grids with identical layout; defined as
// 1 when both grids are empty.
double voxel_iou(const VoxelGrid& a, const VoxelGrid& b);

// Shared squared-distance kernel; also used by the brute-force test oracle
// so both paths round identically.
inline double point_dist2(const Vec3& a, const Vec3& b) {
    double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

} // namespace tcr
