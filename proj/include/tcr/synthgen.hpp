#pragma once

#include <string>
#include <vector>

#include "tcr/body.hpp"
#include "tcr/camera.hpp"
#include "tcr/image.hpp"
#include "tcr/trimesh.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

// Procedural deforming-body sequence parameters. Every derived quantity is
// a pure function of these fields, so equal specs give byte-identical
// datasets.
struct SequenceSpec {
    int frame_count = 30;
    std::uint64_t seed = 1;
    double motion_amplitude = 0.35; // radians at the most mobile joints
    BodyDims dims;
    // One RGB per body part (kBodyPartCount); empty = seeded palette.
    std::vector<Vec3> region_colors;
    double orbit_radius = 3.0;
    double orbit_height = 0.1;
    double orbit_start_angle = 0.0;
    double orbit_step = 0.12; // radians per frame
    int image_size = 256;
    int voxel_resolution = 64;
    int mesh_resolution = 96; // rest-surface extraction lattice

    void validate() const;
};

// Torso+head in color_a, limbs in color_b.
std::vector<Vec3> two_tone_palette(const Vec3& color_a, const Vec3& color_b);

struct FrameBundle {
    Image image; // rgb + coverage mask
    Camera camera;
    TriMesh gt_mesh;
    VoxelGrid gt_voxels;
};

struct Sequence {
    SequenceSpec spec;
    Aabb bounds; // voxel cell bounds, fixed for all frames
    std::vector<FrameBundle> frames;
    // Per frame, per bone; drives the exact vertex correspondences and the
    // analytic capsule oracle.
    std::vector<std::vector<RigidTransform>> bone_transforms;
    BodyRig rig;

    int frame_count() const { return static_cast<int>(frames.size()); }
    std::vector<Capsule> posed_capsules(int frame) const {
        return rig.posed_capsules(bone_transforms[frame]);
    }
};

// Deterministic sequence synthesis: a capsule body skinned from one rest
// surface, seeded smooth joint trajectories, an orbiting camera, and per
// frame the rendered image, mask, ground-truth mesh and voxelization.
// Throws GeometryError naming the first frame whose mesh leaves the bounds.
Sequence generate_sequence(const SequenceSpec& spec);

// Z-buffered rasterization with Lambertian shading of interpolated vertex
// colors; background black, mask = coverage, output quantized to 8-bit
// levels. light_dir is the direction light travels.
Image render_frame(const TriMesh& mesh, const Camera& camera, const Vec3& light_dir);

// Directory layout: frames/NNNN.{obj,ppm,pgm,grid[,.hdr]} plus manifest.txt
// (line-oriented key=value, versioned). Loading the manifest reproduces the
// Sequence exactly.
void export_dataset(const Sequence& seq, const std::string& directory);
Sequence load_dataset(const std::string& directory);

} // namespace tcr
