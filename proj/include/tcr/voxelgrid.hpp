#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tcr/vec3.hpp"

namespace tcr {

enum class GridValueType { occupancy, logits, binary };

std::string grid_value_type_name(GridValueType t);
GridValueType grid_value_type_from_name(const std::string& name);

// Dense axis-aligned scalar field. Values live on a lattice of sample nodes
// at origin + (i,j,k)*spacing; each node is read as the center of a voxel
// cell of size `spacing`, so the covered cell volume extends half a cell
// beyond the node lattice on every side. Storage is x-fastest.
struct VoxelGrid {
    std::array<int, 3> res{0, 0, 0};
    Vec3 origin;
    Vec3 spacing{1, 1, 1};
    GridValueType value_type = GridValueType::occupancy;
    std::vector<double> values;

    VoxelGrid() = default;
    VoxelGrid(std::array<int, 3> res_, Vec3 origin_, Vec3 spacing_, GridValueType type);

    // Lattice covering `cell_bounds` with res cells per axis, nodes at cell
    // centers: spacing = extent/res, origin = lo + spacing/2.
    static VoxelGrid from_cell_bounds(const Aabb& cell_bounds, std::array<int, 3> res,
                                      GridValueType type);

    std::size_t count() const { return values.size(); }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(res[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(res[1]) * k);
    }
    std::array<int, 3> coords(std::size_t flat) const {
        int i = static_cast<int>(flat % res[0]);
        int j = static_cast<int>((flat / res[0]) % res[1]);
        int k = static_cast<int>(flat / (static_cast<std::size_t>(res[0]) * res[1]));
        return {i, j, k};
    }

    double& at(int i, int j, int k) { return values[index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }

    Vec3 node_pos(int i, int j, int k) const {
        return origin + Vec3{i * spacing.x, j * spacing.y, k * spacing.z};
    }
    // Index of the cell whose center node is nearest to X; -1 components
    // when X is outside the cell bounds.
    std::array<int, 3> cell_of(const Vec3& X) const;

    Aabb node_bounds() const { return {origin, node_pos(res[0] - 1, res[1] - 1, res[2] - 1)}; }
    Aabb cell_bounds() const {
        Vec3 half = spacing * 0.5;
        return {origin - half, node_pos(res[0] - 1, res[1] - 1, res[2] - 1) + half};
    }

    bool same_layout(const VoxelGrid& o) const;
    bool occupied(std::size_t flat) const { return values[flat] > 0.5; }
    std::size_t occupied_count() const;
};

// The 8 lattice nodes and blend weights around X; clamped at the lattice
// border so out-of-bounds queries extend the boundary values.
struct TrilinearStencil {
    std::array<std::int64_t, 8> idx;
    std::array<double, 8> w;
};

TrilinearStencil trilinear_stencil(const VoxelGrid& grid, const Vec3& X);

// Exact trilinear blend of the 8 surrounding node values.
double trilinear_sample(const VoxelGrid& grid, const Vec3& X);

// Payload file (raw little-endian floats, dtype per header) plus a text
// sidecar header at path + ".hdr" carrying resolution, origin, spacing,
// value type and format version. Dataset grids use f32; checkpointed logit
// grids use f64 to keep training state exact.
void save_grid(const VoxelGrid& grid, const std::string& path, bool f64 = false);
VoxelGrid load_grid(const std::string& path);

} // namespace tcr
