#pragma once

#include <span>
#include <vector>

#include "tcr/camera.hpp"
#include "tcr/image.hpp"
#include "tcr/tape.hpp"
#include "tcr/tensor.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

// Feature layout feeding both decoders: per pyramid level a 7-point stencil
// of trilinear samples (center plus +-one fine cell along each axis),
// concatenated coarse-to-fine; then K bilinear RGB samples from a 2x
// average-pooled image pyramid, coarse-to-fine; then the camera-normalized
// depth. levels = L extra pooled grid levels on top of the source.
struct EncoderConfig {
    int levels = 2;       // L: pooled shape levels (pyramid has L+1 grids)
    int image_levels = 2; // K: image pyramid size (level 0 = source image)

    int shape_dim() const { return 7 * (levels + 1); }
    int image_dim() const { return 3 * image_levels; }
    int feature_dim() const { return shape_dim() + image_dim() + 1; }
};

struct ShapePyramid {
    std::vector<VoxelGrid> levels; // [0] = source
};

// Rejects pyramids deeper than the grid supports (every level must keep at
// least 2 nodes per axis for trilinear sampling).
ShapePyramid build_shape_pyramid(const VoxelGrid& grid, int levels);

// Per-level 7-stencil trilinear samples at X, coarse-to-fine.
std::vector<double> shape_encoding(const ShapePyramid& pyramid, const Vec3& X);

struct ImagePyramid {
    std::vector<Image> levels; // [0] = source
};

ImagePyramid build_image_pyramid(const Image& image, int levels);

// Bilinear RGB at the level-l coordinate of pixel (x,y), coarse-to-fine.
std::vector<double> pixel_feature(const ImagePyramid& pyramid, double x, double y);

// (depth - near) / (far - near), clamped to [0,1].
double depth_encoding(const Camera& camera, const Vec3& X);

// Everything fixed for one frame. assemble() writes one feature row per
// query point in the fixed (shape | image | depth) order; points at or
// behind the near plane clamp to the near depth for projection.
struct FrameEncoder {
    ShapePyramid pyramid;
    ImagePyramid images;
    Camera camera;
    EncoderConfig config;

    FrameEncoder() = default;
    FrameEncoder(const VoxelGrid& shape_grid, const Image& image, const Camera& cam,
                 const EncoderConfig& cfg);

    std::vector<double> assemble_one(const Vec3& X) const;
    Tensor assemble(std::span<const Vec3> points) const; // [n, feature_dim]

    // Image+depth feature columns only; the constant part of the tape path.
    Tensor assemble_image_depth(std::span<const Vec3> points) const;
};

// Tape-path pyramid: level tensors as Vars over a flattened source grid, so
// gradients flow from features back to the source values.
struct PyramidVars {
    std::vector<Var> levels;
    std::vector<VoxelGrid> geometry; // layout metadata per level (values unused)
};

PyramidVars build_pyramid_vars(Tape& tape, Var source, const VoxelGrid& source_geometry,
                               int levels);

// [n, 7*(levels+1)] shape features of a point batch, differentiable w.r.t.
// the source grid. Bitwise identical to the plain shape_encoding path.
Var shape_encoding_vars(Tape& tape, const PyramidVars& pyramid, std::span<const Vec3> points);

// Full feature rows on the tape: differentiable shape part concatenated
// with constant image/depth columns from `encoder`.
Var assemble_features_vars(Tape& tape, const PyramidVars& pyramid, const FrameEncoder& encoder,
                           std::span<const Vec3> points);

} // namespace tcr
