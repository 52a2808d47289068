#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcr/synthgen.hpp"
#include "tcr/trimesh.hpp"

namespace tcr {

// Training points with occupancy or color labels, anchored to the source
// frame's surface so they can be transported to every other frame of a
// sequence. The anchor stores the nearest source-surface triangle, the
// barycentric foot point and the offset vector in that triangle's local
// frame (tangent, bitangent, normal); re-evaluating the anchor on the
// deformed triangle transports the point exactly under rigid motion.
struct SampleSet {
    int source_frame = 0;
    double sigma = 0;

    std::vector<Vec3> points;
    std::vector<std::int8_t> occupancy; // empty for color sets
    std::vector<Vec3> colors;           // empty for occupancy sets

    struct Anchor {
        int triangle = -1;
        double b0 = 0, b1 = 0, b2 = 0;
        double tangent = 0, bitangent = 0, normal = 0; // offset in local frame
    };
    std::vector<Anchor> anchors;        // filled by sampling or track_samples
    std::vector<std::uint8_t> far_flag; // farther than 3*sigma off-surface

    // tracked[t][i] = corresponded position of point i in frame t.
    std::vector<std::vector<Vec3>> tracked;

    std::size_t size() const { return points.size(); }
    bool has_occupancy() const { return !occupancy.empty(); }
    bool has_colors() const { return !colors.empty(); }
};

// Area-weighted surface points displaced by isotropic Gaussian noise of
// std `sigma`, labeled inside/outside by the mesh parity test. A
// `uniform_fraction` share of the points (rounded down) is drawn uniformly
// from the mesh bounds dilated by 10% instead, to anchor the far field.
SampleSet sample_occupancy_points(const TriMesh& mesh, std::size_t n, double sigma,
                                  std::uint64_t seed, double uniform_fraction = 0.1,
                                  int source_frame = 0);

// On-surface points with barycentrically interpolated vertex colors.
SampleSet sample_color_points(const TriMesh& mesh, std::size_t m, std::uint64_t seed,
                              int source_frame = 0);

// Fills samples.tracked with per-frame corresponded positions (and anchors
// when the sampler did not already provide exact ones). Points farther than
// 3*sigma from the source surface are still mapped but flagged.
void track_samples(SampleSet& samples, const Sequence& sequence);

// Dense voxel index map induced by the surface correspondence: every source
// node is transported by its nearest source-surface anchor and assigned the
// target frame's containing cell (-1 when it leaves the grid).
struct VoxelCorrespondence {
    int source_frame = 0, target_frame = 0;
    std::array<int, 3> resolution{0, 0, 0};
    std::vector<std::int32_t> target; // flat target index per source voxel
    std::string method;
    double occupied_coverage = 0; // mapped fraction of occupied source voxels

    std::size_t count() const { return target.size(); }
};

VoxelCorrespondence voxel_correspondence(const Sequence& sequence, int frame_t, int frame_l,
                                         int resolution);

// Binary record file (versioned text header + little-endian payload).
void save_samples(const SampleSet& samples, const std::string& path);
SampleSet load_samples(const std::string& path);

} // namespace tcr
