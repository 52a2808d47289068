#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tcr/encoders.hpp"
#include "tcr/error.hpp"
#include "tcr/gradcheck.hpp"
#include "tcr/rng.hpp"

using namespace tcr;

namespace {

VoxelGrid random_grid(std::array<int, 3> res, std::uint64_t seed) {
    VoxelGrid g(res, {0, 0, 0}, {0.1, 0.1, 0.1}, GridValueType::occupancy);
    CounterRng rng(seed);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = rng.u01(i);
    return g;
}

Camera test_camera(int size = 32) {
    return Camera(40.0, 40.0, (size - 1) * 0.5, (size - 1) * 0.5, size, size, Mat3::identity(),
                  {0, 0, 1.0}, 0.2, 3.0);
}

} // namespace

TEST_CASE("build_shape_pyramid: constant grid stays constant at every level") {
    VoxelGrid g({8, 8, 8}, {0, 0, 0}, {1, 1, 1}, GridValueType::occupancy);
    for (double& v : g.values) v = 0.75;
    ShapePyramid pyr = build_shape_pyramid(g, 2);
    REQUIRE(pyr.levels.size() == 3);
    for (const VoxelGrid& level : pyr.levels)
        for (double v : level.values) CHECK(v == 0.75);
}

TEST_CASE("build_shape_pyramid: L=0 is just the source grid") {
    VoxelGrid g = random_grid({4, 4, 4}, 3);
    ShapePyramid pyr = build_shape_pyramid(g, 0);
    REQUIRE(pyr.levels.size() == 1);
    CHECK(pyr.levels[0].values == g.values);
}

TEST_CASE("build_shape_pyramid: pooled cells equal the mean of their 8 children") {
    VoxelGrid g = random_grid({8, 8, 8}, 5);
    ShapePyramid pyr = build_shape_pyramid(g, 1);
    REQUIRE(pyr.levels.size() == 2);
    const VoxelGrid& p = pyr.levels[1];
    REQUIRE(p.res == std::array<int, 3>{4, 4, 4});
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) {
                double acc = 0;
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            acc += g.at(2 * i + di, 2 * j + dj, 2 * k + dk);
                CHECK(p.at(i, j, k) == doctest::Approx(acc / 8.0).epsilon(1e-15));
                // Pooled node sits at the mean of its children positions.
                Vec3 mean_pos{0, 0, 0};
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di)
                            mean_pos += g.node_pos(2 * i + di, 2 * j + dj, 2 * k + dk);
                CHECK(norm(p.node_pos(i, j, k) - mean_pos / 8.0) < 1e-12);
            }
}

TEST_CASE("build_shape_pyramid: over-deep pyramid rejected") {
    VoxelGrid g = random_grid({8, 8, 8}, 7);
    CHECK_THROWS_AS((void)build_shape_pyramid(g, 3), ShapeError);
}

TEST_CASE("shape_encoding: constant-1 grid gives all-ones features") {
    VoxelGrid g({8, 8, 8}, {0, 0, 0}, {0.1, 0.1, 0.1}, GridValueType::occupancy);
    for (double& v : g.values) v = 1.0;
    ShapePyramid pyr = build_shape_pyramid(g, 2);
    std::vector<double> f = shape_encoding(pyr, {0.35, 0.4, 0.33});
    REQUIRE(f.size() == 21);
    for (double v : f) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shape_encoding: deep inside filled region vs deep outside") {
    VoxelGrid g({16, 16, 16}, {0, 0, 0}, {0.1, 0.1, 0.1}, GridValueType::occupancy);
    // Fill half-space x <= 7 nodes.
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) g.at(i, j, k) = i <= 7 ? 1.0 : 0.0;
    ShapePyramid pyr = build_shape_pyramid(g, 1);
    std::vector<double> inside = shape_encoding(pyr, {0.2, 0.8, 0.8});
    std::vector<double> outside = shape_encoding(pyr, {1.35, 0.8, 0.8});
    for (double v : inside) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : outside) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("shape_encoding: linear field reproduced at every level within 1e-12") {
    VoxelGrid g({16, 16, 16}, {-0.5, 0, 0.25}, {0.11, 0.09, 0.13}, GridValueType::occupancy);
    auto field = [](const Vec3& p) { return 0.7 * p.x - 1.3 * p.y + 0.4 * p.z + 0.2; };
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) g.at(i, j, k) = field(g.node_pos(i, j, k));
    ShapePyramid pyr = build_shape_pyramid(g, 2);
    CounterRng rng(11);
    Aabb nb = pyr.levels.back().node_bounds(); // interior of the coarsest level
    for (int n = 0; n < 30; ++n) {
        Vec3 X{rng.uniform(3 * n, nb.lo.x + 0.15, nb.hi.x - 0.15),
               rng.uniform(3 * n + 1, nb.lo.y + 0.15, nb.hi.y - 0.15),
               rng.uniform(3 * n + 2, nb.lo.z + 0.15, nb.hi.z - 0.15)};
        std::vector<double> f = shape_encoding(pyr, X);
        std::array<Vec3, 7> pos = {X,
                                   X + Vec3{g.spacing.x, 0, 0},
                                   X - Vec3{g.spacing.x, 0, 0},
                                   X + Vec3{0, g.spacing.y, 0},
                                   X - Vec3{0, g.spacing.y, 0},
                                   X + Vec3{0, 0, g.spacing.z},
                                   X - Vec3{0, 0, g.spacing.z}};
        for (int l = 0; l < 3; ++l)
            for (int s = 0; s < 7; ++s) CHECK(std::abs(f[7 * l + s] - field(pos[s])) < 1e-12);
    }
}

TEST_CASE("pixel_feature: constant image repeats its color at every level") {
    Image img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.set_color(x, y, {0.2, 0.5, 0.8});
    ImagePyramid pyr = build_image_pyramid(img, 3);
    std::vector<double> f = pixel_feature(pyr, 7.3, 4.1);
    REQUIRE(f.size() == 9);
    for (int l = 0; l < 3; ++l) {
        CHECK(f[3 * l] == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(f[3 * l + 1] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(f[3 * l + 2] == doctest::Approx(0.8).epsilon(1e-14));
    }
}

TEST_CASE("pixel_feature: K=1 is plain bilinear RGB") {
    Image img(8, 8);
    CounterRng rng(13);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            std::uint64_t base = 3 * (y * 8 + x);
            img.set_color(x, y, {rng.u01(base), rng.u01(base + 1), rng.u01(base + 2)});
        }
    ImagePyramid pyr = build_image_pyramid(img, 1);
    std::vector<double> f = pixel_feature(pyr, 3.7, 5.2);
    Vec3 expect = bilinear_rgb(img, 3.7, 5.2);
    CHECK(f[0] == expect.x);
    CHECK(f[1] == expect.y);
    CHECK(f[2] == expect.z);
}

TEST_CASE("pixel_feature: checkerboard coarse level approaches 0.5, matching direct pooling") {
    Image img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            double v = (x + y) % 2 ? 1.0 : 0.0;
            img.set_color(x, y, {v, v, v});
        }
    ImagePyramid pyr = build_image_pyramid(img, 3);
    // Direct pooling oracle: every 2x2 checkerboard quad averages to 0.5.
    for (int l : {1, 2})
        for (int y = 0; y < pyr.levels[l].height; ++y)
            for (int x = 0; x < pyr.levels[l].width; ++x)
                CHECK(pyr.levels[l].color(x, y).x == doctest::Approx(0.5).epsilon(1e-14));
    std::vector<double> f = pixel_feature(pyr, 8.0, 8.0);
    CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-12)); // coarsest first
    CHECK(f[3] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("depth_encoding: near=0, far=1, midpoint=0.5 within 1e-12") {
    Camera cam = test_camera();
    // Points on the optical axis at known camera depths: z_cam = z + 1.
    CHECK(depth_encoding(cam, {0, 0, cam.near_depth - 1.0}) == 0.0);
    CHECK(depth_encoding(cam, {0, 0, cam.far_depth - 1.0}) == 1.0);
    double mid = 0.5 * (cam.near_depth + cam.far_depth);
    CHECK(std::abs(depth_encoding(cam, {0, 0, mid - 1.0}) - 0.5) < 1e-12);
    // Clamped outside the range.
    CHECK(depth_encoding(cam, {0, 0, cam.far_depth + 5.0}) == 1.0);
}

TEST_CASE("assemble_features: dimension arithmetic and empty-scene content") {
    EncoderConfig cfg{2, 2};
    CHECK(cfg.feature_dim() == 7 * 3 + 3 * 2 + 1);

    VoxelGrid g({8, 8, 8}, {-0.4, -0.4, -0.4}, {0.1, 0.1, 0.1}, GridValueType::occupancy);
    Image black(16, 16);
    Camera cam(20, 20, 7.5, 7.5, 16, 16, Mat3::identity(), {0, 0, 1.0}, 0.2, 3.0);
    FrameEncoder enc(g, black, cam, cfg);
    Vec3 X{0.05, -0.1, 0.0};
    std::vector<double> f = enc.assemble_one(X);
    REQUIRE(f.size() == 28);
    for (std::size_t i = 0; i + 1 < f.size(); ++i) CHECK(f[i] == 0.0);
    CHECK(f.back() == doctest::Approx((X.z + 1.0 - 0.2) / 2.8));
}

TEST_CASE("assemble_features is continuous: bounded by the trilinear Lipschitz constant") {
    VoxelGrid g = random_grid({16, 16, 16}, 17);
    Image img(32, 32);
    CounterRng prng(19);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            std::uint64_t base = 3 * (y * 32 + x);
            img.set_color(x, y, {prng.u01(base), prng.u01(base + 1), prng.u01(base + 2)});
        }
    Camera cam = test_camera(32);
    EncoderConfig cfg{1, 1};
    FrameEncoder enc(g, img, cam, cfg);

    // value range 1, finest cell 0.1 -> per-axis slope bound 10 per shape
    // feature; image slope fx/z/pixel and depth slope 1/(far-near).
    double delta = 1e-4;
    CounterRng rng(23);
    for (int n = 0; n < 100; ++n) {
        Vec3 X{rng.uniform(4 * n, 0.2, 1.2), rng.uniform(4 * n + 1, 0.2, 1.2),
               rng.uniform(4 * n + 2, 0.2, 1.2)};
        Vec3 dir = normalized(rng.normal3(2 * n + 1));
        std::vector<double> f0 = enc.assemble_one(X);
        std::vector<double> f1 = enc.assemble_one(X + dir * delta);
        double lip_shape = (1.0 / 0.1) * std::sqrt(3.0);
        double lip_image = cam.fx / 0.2 * 1.0; // worst slope in pixels * color range
        double lip_depth = 1.0 / (cam.far_depth - cam.near_depth);
        for (std::size_t i = 0; i < f0.size(); ++i) {
            double lip = i < 14 ? lip_shape : (i + 1 == f0.size() ? lip_depth : lip_image);
            CHECK(std::abs(f1[i] - f0[i]) <= lip * delta * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("tape feature path equals the plain path bitwise") {
    VoxelGrid g = random_grid({8, 8, 8}, 29);
    Image img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.set_color(x, y, {0.3, 0.1, 0.9});
    Camera cam(20, 20, 7.5, 7.5, 16, 16, Mat3::identity(), {0, 0, 1.0}, 0.2, 3.0);
    EncoderConfig cfg{2, 2};
    FrameEncoder enc(g, img, cam, cfg);

    CounterRng rng(31);
    std::vector<Vec3> points;
    for (int i = 0; i < 20; ++i)
        points.push_back({rng.uniform(3 * i, 0.0, 0.7), rng.uniform(3 * i + 1, 0.0, 0.7),
                          rng.uniform(3 * i + 2, 0.0, 0.7)});

    Tensor plain = enc.assemble(points);

    Tape tape;
    Var src = tape.constant(Tensor({g.count()}, g.values));
    PyramidVars pyr = build_pyramid_vars(tape, src, g, cfg.levels);
    Var feats = assemble_features_vars(tape, pyr, enc, points);
    CHECK(tape.value(feats).data == plain.data);
}

TEST_CASE("feature gradients w.r.t. source grid values pass finite differences") {
    VoxelGrid g = random_grid({8, 8, 8}, 37);
    Image img(16, 16);
    Camera cam(20, 20, 7.5, 7.5, 16, 16, Mat3::identity(), {0, 0, 1.0}, 0.2, 3.0);
    EncoderConfig cfg{2, 1};
    FrameEncoder enc(g, img, cam, cfg);

    CounterRng rng(41);
    std::vector<Vec3> points;
    for (int i = 0; i < 8; ++i)
        points.push_back({rng.uniform(3 * i, 0.05, 0.65), rng.uniform(3 * i + 1, 0.05, 0.65),
                          rng.uniform(3 * i + 2, 0.05, 0.65)});
    Tensor target({points.size(), static_cast<std::size_t>(cfg.feature_dim())});
    for (std::size_t i = 0; i < target.numel(); ++i) target.data[i] = rng.u01(1000 + i);

    TapeLossFn fn = [&](Tape& t, const std::vector<Var>& vars) {
        PyramidVars pyr = build_pyramid_vars(t, vars[0], g, cfg.levels);
        Var feats = assemble_features_vars(t, pyr, enc, points);
        return t.mean(t.square(t.sub(feats, t.constant(target))));
    };
    std::vector<Tensor> params = {Tensor({g.count()}, g.values)};
    GradCheckResult res = finite_diff_check(params, fn, 1e-5, sample_coords(params, 64, 43));
    CHECK(res.max_rel_error < 1e-4);
}
