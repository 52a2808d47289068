#include "tcr/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "tcr/error.hpp"

namespace tcr {

namespace {

// 2x pooling step as an explicit gather: 8 child indices and 1/8 weights
// per pooled node (floor halving, trailing odd planes dropped). Shared by
// the plain and tape paths so both produce identical values.
struct PoolPlan {
    VoxelGrid geometry; // pooled layout, values unused
    std::vector<std::int64_t> idx;
    std::vector<double> w;
    static constexpr std::size_t k = 8;
};

PoolPlan pool_plan(const VoxelGrid& src) {
    std::array<int, 3> res{std::max(src.res[0] / 2, 1), std::max(src.res[1] / 2, 1),
                           std::max(src.res[2] / 2, 1)};
    if (res[0] < 2 || res[1] < 2 || res[2] < 2)
        throw ShapeError("shape pyramid too deep for grid resolution");
    PoolPlan plan{VoxelGrid(res, src.origin + src.spacing * 0.5, src.spacing * 2.0,
                            src.value_type),
                  {},
                  {}};
    plan.idx.reserve(plan.geometry.count() * PoolPlan::k);
    plan.w.reserve(plan.geometry.count() * PoolPlan::k);
    for (int k3 = 0; k3 < res[2]; ++k3)
        for (int j = 0; j < res[1]; ++j)
            for (int i = 0; i < res[0]; ++i) {
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            plan.idx.push_back(static_cast<std::int64_t>(
                                src.index(2 * i + di, 2 * j + dj, 2 * k3 + dk)));
                for (int c = 0; c < 8; ++c) plan.w.push_back(0.125);
            }
    return plan;
}

void apply_pool_plan(const PoolPlan& plan, const std::vector<double>& src,
                     std::vector<double>& dst) {
    dst.assign(plan.geometry.count(), 0.0);
    for (std::size_t n = 0; n < dst.size(); ++n) {
        double acc = 0;
        for (std::size_t j = 0; j < PoolPlan::k; ++j)
            acc += plan.w[n * PoolPlan::k + j] *
                   src[static_cast<std::size_t>(plan.idx[n * PoolPlan::k + j])];
        dst[n] = acc;
    }
}

// Stencil positions: center, +x, -x, +y, -y, +z, -z, offset by one cell of
// the finest level.
std::array<Vec3, 7> stencil_positions(const Vec3& X, const Vec3& fine_spacing) {
    return {X,
            X + Vec3{fine_spacing.x, 0, 0},
            X - Vec3{fine_spacing.x, 0, 0},
            X + Vec3{0, fine_spacing.y, 0},
            X - Vec3{0, fine_spacing.y, 0},
            X + Vec3{0, 0, fine_spacing.z},
            X - Vec3{0, 0, fine_spacing.z}};
}

} // namespace

ShapePyramid build_shape_pyramid(const VoxelGrid& grid, int levels) {
    if (levels < 0) throw ShapeError("pyramid level count must be >= 0");
    ShapePyramid pyr;
    pyr.levels.push_back(grid);
    for (int l = 0; l < levels; ++l) {
        PoolPlan plan = pool_plan(pyr.levels.back());
        VoxelGrid next = plan.geometry;
        apply_pool_plan(plan, pyr.levels.back().values, next.values);
        pyr.levels.push_back(std::move(next));
    }
    return pyr;
}

std::vector<double> shape_encoding(const ShapePyramid& pyramid, const Vec3& X) {
    std::vector<double> out;
    out.reserve(7 * pyramid.levels.size());
    std::array<Vec3, 7> pos = stencil_positions(X, pyramid.levels[0].spacing);
    for (std::size_t l = pyramid.levels.size(); l-- > 0;) // coarse to fine
        for (const Vec3& p : pos) out.push_back(trilinear_sample(pyramid.levels[l], p));
    return out;
}

ImagePyramid build_image_pyramid(const Image& image, int levels) {
    if (levels < 1) throw ShapeError("image pyramid needs at least one level");
    ImagePyramid pyr;
    pyr.levels.push_back(image);
    for (int l = 1; l < levels; ++l) pyr.levels.push_back(avg_pool2(pyr.levels.back()));
    return pyr;
}

std::vector<double> pixel_feature(const ImagePyramid& pyramid, double x, double y) {
    std::vector<double> out;
    out.reserve(3 * pyramid.levels.size());
    for (std::size_t l = pyramid.levels.size(); l-- > 0;) {
        double scale = std::pow(2.0, static_cast<double>(l));
        Vec3 c = bilinear_rgb(pyramid.levels[l], (x + 0.5) / scale - 0.5,
                              (y + 0.5) / scale - 0.5);
        out.push_back(c.x);
        out.push_back(c.y);
        out.push_back(c.z);
    }
    return out;
}

double depth_encoding(const Camera& camera, const Vec3& X) {
    return camera.normalized_depth(camera.depth_of(X));
}

FrameEncoder::FrameEncoder(const VoxelGrid& shape_grid, const Image& image, const Camera& cam,
                           const EncoderConfig& cfg)
    : pyramid(build_shape_pyramid(shape_grid, cfg.levels)),
      images(build_image_pyramid(image, cfg.image_levels)), camera(cam), config(cfg) {}

std::vector<double> FrameEncoder::assemble_one(const Vec3& X) const {
    std::vector<double> row = shape_encoding(pyramid, X);
    Vec3 c = camera.to_camera(X);
    double z = std::max(c.z, camera.near_depth);
    std::vector<double> img = pixel_feature(images, camera.cx + camera.fx * c.x / z,
                                            camera.cy + camera.fy * c.y / z);
    row.insert(row.end(), img.begin(), img.end());
    row.push_back(camera.normalized_depth(c.z));
    return row;
}

Tensor FrameEncoder::assemble(std::span<const Vec3> points) const {
    Tensor out({points.size(), static_cast<std::size_t>(config.feature_dim())});
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<double> row = assemble_one(points[i]);
        std::copy(row.begin(), row.end(), out.data.begin() + i * row.size());
    }
    return out;
}

Tensor FrameEncoder::assemble_image_depth(std::span<const Vec3> points) const {
    std::size_t d = static_cast<std::size_t>(config.image_dim()) + 1;
    Tensor out({points.size(), d});
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec3 c = camera.to_camera(points[i]);
        double z = std::max(c.z, camera.near_depth);
        std::vector<double> img = pixel_feature(images, camera.cx + camera.fx * c.x / z,
                                                camera.cy + camera.fy * c.y / z);
        std::copy(img.begin(), img.end(), out.data.begin() + i * d);
        out.data[i * d + d - 1] = camera.normalized_depth(c.z);
    }
    return out;
}

PyramidVars build_pyramid_vars(Tape& tape, Var source, const VoxelGrid& source_geometry,
                               int levels) {
    if (tape.value(source).numel() != source_geometry.count())
        throw ShapeError("pyramid source tensor does not match the grid layout");
    PyramidVars pyr;
    pyr.levels.push_back(source);
    pyr.geometry.push_back(source_geometry);
    for (int l = 0; l < levels; ++l) {
        PoolPlan plan = pool_plan(pyr.geometry.back());
        pyr.levels.push_back(tape.gather_weighted(pyr.levels.back(), plan.idx, plan.w,
                                                  PoolPlan::k, {plan.geometry.count()}));
        pyr.geometry.push_back(plan.geometry);
    }
    return pyr;
}

Var shape_encoding_vars(Tape& tape, const PyramidVars& pyramid, std::span<const Vec3> points) {
    std::vector<Var> blocks;
    const Vec3 fine = pyramid.geometry[0].spacing;
    for (std::size_t l = pyramid.levels.size(); l-- > 0;) {
        const VoxelGrid& geom = pyramid.geometry[l];
        std::vector<std::int64_t> idx;
        std::vector<double> w;
        idx.reserve(points.size() * 7 * 8);
        w.reserve(points.size() * 7 * 8);
        for (const Vec3& X : points) {
            std::array<Vec3, 7> pos = stencil_positions(X, fine);
            for (const Vec3& p : pos) {
                TrilinearStencil s = trilinear_stencil(geom, p);
                idx.insert(idx.end(), s.idx.begin(), s.idx.end());
                w.insert(w.end(), s.w.begin(), s.w.end());
            }
        }
        blocks.push_back(tape.gather_weighted(pyramid.levels[l], std::move(idx), std::move(w), 8,
                                              {points.size(), 7}));
    }
    return tape.concat_cols(blocks);
}

Var assemble_features_vars(Tape& tape, const PyramidVars& pyramid, const FrameEncoder& encoder,
                           std::span<const Vec3> points) {
    Var shape = shape_encoding_vars(tape, pyramid, points);
    Var rest = tape.constant(encoder.assemble_image_depth(points));
    return tape.concat_cols({shape, rest});
}

} // namespace tcr
