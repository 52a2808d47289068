#pragma once

#include "tcr/trimesh.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

// Isosurface extraction with the classic 256-case marching cubes tables.
// Vertices are placed by linear interpolation along sign-crossing lattice
// edges and welded per global edge, so closed level sets come out as
// edge-paired watertight meshes. Triangles are wound so normals point away
// from the above-iso (occupied) side. A constant grid, or an iso outside
// the value range, yields an empty mesh rather than an error.
//
// Face-ambiguous cube configurations are resolved per cube by the table; no
// asymptotic decider is applied, so two adjacent cubes can in principle
// disagree on an ambiguous shared face. The occupancy-style fields this
// toolkit extracts from do not exercise that case in practice.
TriMesh marching_cubes(const VoxelGrid& grid, double iso);

} // namespace tcr
