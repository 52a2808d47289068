#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support/oracles.hpp"
#include "tcr/error.hpp"
#include "tcr/geometry.hpp"
#include "tcr/sampling.hpp"
#include "tcr/synthgen.hpp"

using namespace tcr;

namespace {

SequenceSpec desk_spec(int frames, std::uint64_t seed) {
    SequenceSpec spec;
    spec.frame_count = frames;
    spec.seed = seed;
    spec.image_size = 64;
    spec.voxel_resolution = 24;
    spec.mesh_resolution = 48;
    return spec;
}

// Minimal fixture: a sequence whose frames are rigid copies of one mesh.
Sequence rigid_sequence(const TriMesh& mesh, const std::vector<Vec3>& offsets) {
    Sequence seq;
    seq.spec.frame_count = static_cast<int>(offsets.size());
    Aabb box = mesh.bounds();
    for (const Vec3& d : offsets) {
        FrameBundle fb;
        fb.gt_mesh = mesh;
        for (Vec3& v : fb.gt_mesh.vertices) v += d;
        box.lo = min(box.lo, fb.gt_mesh.bounds().lo);
        box.hi = max(box.hi, fb.gt_mesh.bounds().hi);
        seq.frames.push_back(std::move(fb));
    }
    seq.bounds = box.expanded(0.25);
    return seq;
}

} // namespace

TEST_CASE("sample_occupancy_points: sigma=0 keeps points on the surface") {
    TriMesh sphere = oracle::icosphere(0.5, 3);
    SampleSet s = sample_occupancy_points(sphere, 500, 0.0, 11, /*uniform_fraction=*/0.0);
    REQUIRE(s.size() == 500);
    TriangleGrid grid(sphere);
    double inside = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(grid.closest_point(s.points[i]).dist < 1e-12);
        inside += s.occupancy[i];
    }
    // Label balance on on-surface points is chance; recorded, not asserted.
    MESSAGE("sigma=0 inside fraction: ", inside / 500.0);
}

TEST_CASE("sample_occupancy_points: deterministic per seed, n=10000 supported") {
    TriMesh sphere = oracle::icosphere(0.5, 3);
    SampleSet a = sample_occupancy_points(sphere, 10000, 0.03, 7);
    SampleSet b = sample_occupancy_points(sphere, 10000, 0.03, 7);
    REQUIRE(a.size() == 10000);
    CHECK(a.points == b.points);
    CHECK(a.occupancy == b.occupancy);
    SampleSet c = sample_occupancy_points(sphere, 10000, 0.03, 8);
    CHECK(a.points != c.points);
}

TEST_CASE("sample_occupancy_points: non-watertight mesh rejected") {
    TriMesh open_mesh;
    open_mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    open_mesh.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS((void)sample_occupancy_points(open_mesh, 10, 0.1, 1), GeometryError);
}

TEST_CASE("occupancy labels match the winding-number oracle off-surface") {
    TriMesh sphere = oracle::icosphere(0.5, 3);
    for (Vec3& v : sphere.vertices) v.x *= 1.2; // ellipsoid
    SampleSet s = sample_occupancy_points(sphere, 400, 0.08, 13);
    TriangleGrid grid(sphere);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (grid.closest_point(s.points[i]).dist < 1e-6) continue;
        CHECK(static_cast<bool>(s.occupancy[i]) == oracle::winding_inside(sphere, s.points[i]));
    }
}

TEST_CASE("unit sphere inside-fraction matches the quadrature oracle within 3 sigma") {
    double sigma = 0.05;
    TriMesh sphere = oracle::icosphere(1.0, 5);
    std::size_t n = 20000;
    SampleSet s = sample_occupancy_points(sphere, n, sigma, 29, /*uniform_fraction=*/0.0);
    double inside = 0;
    for (std::int8_t o : s.occupancy) inside += o;
    double p_hat = inside / static_cast<double>(n);
    double p = oracle::gaussian_displaced_sphere_inside_prob(sigma);
    double band = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    INFO("p=", p, " p_hat=", p_hat, " band=", band);
    CHECK(std::abs(p_hat - p) < band);
}

TEST_CASE("sample_color_points: vertex hit returns that vertex color exactly") {
    TriMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    tri.vertex_colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    CHECK(tri.color_at(0, 1, 0, 0) == Vec3{1, 0, 0});
    CHECK(tri.color_at(0, 0, 1, 0) == Vec3{0, 1, 0});
    CHECK(tri.color_at(0, 0, 0, 1) == Vec3{0, 0, 1});
}

TEST_CASE("sample_color_points: uniform-colored mesh gives constant labels") {
    TriMesh sphere = oracle::icosphere(0.4, 2);
    sphere.vertex_colors.assign(sphere.vertices.size(), {0.3, 0.6, 0.9});
    SampleSet s = sample_color_points(sphere, 300, 17);
    REQUIRE(s.size() == 300);
    for (const Vec3& c : s.colors) CHECK(norm(c - Vec3{0.3, 0.6, 0.9}) < 1e-12);
}

TEST_CASE("sample_color_points: labels equal an independent barycentric blend") {
    TriMesh sphere = oracle::icosphere(0.4, 2);
    CounterRng rng(19);
    sphere.vertex_colors.resize(sphere.vertices.size());
    for (std::size_t i = 0; i < sphere.vertices.size(); ++i)
        sphere.vertex_colors[i] = {rng.u01(3 * i), rng.u01(3 * i + 1), rng.u01(3 * i + 2)};
    SampleSet s = sample_color_points(sphere, 200, 23);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& a = s.anchors[i];
        const auto& t = sphere.triangles[a.triangle];
        Vec3 expect = sphere.vertex_colors[t[0]] * a.b0 + sphere.vertex_colors[t[1]] * a.b1 +
                      sphere.vertex_colors[t[2]] * a.b2;
        CHECK(norm(s.colors[i] - expect) < 1e-12);
    }
}

TEST_CASE("sample_color_points: missing colors rejected") {
    TriMesh sphere = oracle::icosphere(0.4, 2);
    CHECK_THROWS_AS((void)sample_color_points(sphere, 10, 1), GeometryError);
}

TEST_CASE("track_samples: static sequence maps every point to itself exactly") {
    TriMesh sphere = oracle::icosphere(0.5, 3);
    Sequence seq = rigid_sequence(sphere, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    SampleSet s = sample_occupancy_points(sphere, 300, 0.05, 31);
    track_samples(s, seq);
    REQUIRE(s.tracked.size() == 3);
    // Identical frames share one anchor frame, so the reconstruction is
    // exact up to decompose/recompose rounding.
    for (int f = 0; f < 3; ++f)
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(norm(s.tracked[f][i] - s.points[i]) < 1e-12);
}

TEST_CASE("track_samples: rigid translation moves every point by d within 1e-9") {
    TriMesh sphere = oracle::icosphere(0.5, 3);
    Vec3 d{0.4, -0.2, 0.7};
    Sequence seq = rigid_sequence(sphere, {{0, 0, 0}, d});
    SampleSet s = sample_occupancy_points(sphere, 300, 0.05, 37);
    track_samples(s, seq);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(norm(s.tracked[1][i] - (s.points[i] + d)) < 1e-9);
}

TEST_CASE("track_samples: articulated sequence preserves signed offsets within 10% of sigma") {
    Sequence seq = generate_sequence(desk_spec(3, 41));
    double sigma = 0.05 * seq.frames[0].gt_mesh.bounds().diagonal();
    SampleSet s = sample_occupancy_points(seq.frames[0].gt_mesh, 400, sigma, 43,
                                          /*uniform_fraction=*/0.0);
    track_samples(s, seq);
    for (int f : {1, 2}) {
        TriangleGrid grid(seq.frames[f].gt_mesh);
        InsideTester tester(seq.frames[f].gt_mesh);
        int ok = 0, used = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.far_flag[i]) continue;
            ++used;
            double ref = s.anchors[i].normal; // signed offset at the source
            double dist = grid.closest_point(s.tracked[f][i]).dist;
            double signed_dist = tester.inside(s.tracked[f][i]) ? -dist : dist;
            if (std::abs(signed_dist - ref) <= 0.1 * sigma) ++ok;
        }
        INFO("frame ", f, ": ", ok, "/", used);
        // Offsets are exactly preserved away from joints; bending accounts
        // for the remainder.
        CHECK(ok >= used * 9 / 10);
    }
}

TEST_CASE("voxel_correspondence: identity map for t == l") {
    Sequence seq = generate_sequence(desk_spec(2, 47));
    VoxelCorrespondence corr = voxel_correspondence(seq, 0, 0, 16);
    for (std::size_t flat = 0; flat < corr.count(); ++flat)
        CHECK(corr.target[flat] == static_cast<std::int32_t>(flat));
    CHECK(corr.occupied_coverage == 1.0);
}

TEST_CASE("voxel_correspondence: lattice-aligned rigid translation shifts indices") {
    TriMesh sphere = oracle::icosphere(0.4, 3);
    Sequence seq = rigid_sequence(sphere, {{0, 0, 0}, {0, 0, 0}});
    // Re-derive the grid spacing, then move frame 1 by exactly 3 cells in x.
    int res = 16;
    VoxelGrid layout =
        VoxelGrid::from_cell_bounds(seq.bounds, {res, res, res}, GridValueType::binary);
    int k = 3;
    Vec3 d{k * layout.spacing.x, 0, 0};
    for (Vec3& v : seq.frames[1].gt_mesh.vertices) v += d;

    VoxelCorrespondence corr = voxel_correspondence(seq, 0, 1, res);
    InsideTester inside(seq.frames[0].gt_mesh);
    int checked = 0;
    for (int kk = 0; kk < res; ++kk)
        for (int j = 0; j < res; ++j)
            for (int i = 0; i < res; ++i) {
                if (i + k >= res) continue;
                // interior voxels: inside the frame-0 body
                if (!inside.inside(layout.node_pos(i, j, kk))) continue;
                ++checked;
                CHECK(corr.target[layout.index(i, j, kk)] ==
                      static_cast<std::int32_t>(layout.index(i + k, j, kk)));
            }
    CHECK(checked > 50);
    CHECK(corr.occupied_coverage >= 0.95);
}

TEST_CASE("voxel_correspondence: articulated round trip returns >= 90% of occupied voxels") {
    Sequence seq = generate_sequence(desk_spec(2, 53));
    int res = 24;
    VoxelCorrespondence fwd = voxel_correspondence(seq, 0, 1, res);
    VoxelCorrespondence bwd = voxel_correspondence(seq, 1, 0, res);
    CHECK(fwd.occupied_coverage >= 0.95);
    const VoxelGrid& occ = seq.frames[0].gt_voxels;
    REQUIRE(occ.res[0] == res);
    std::size_t total = 0, returned = 0;
    for (std::size_t flat = 0; flat < fwd.count(); ++flat) {
        if (!occ.occupied(flat)) continue;
        ++total;
        std::int32_t t = fwd.target[flat];
        if (t >= 0 && bwd.target[static_cast<std::size_t>(t)] == static_cast<std::int32_t>(flat))
            ++returned;
    }
    REQUIRE(total > 100);
    INFO("round trip: ", returned, "/", total);
    CHECK(returned >= total * 9 / 10);
}

TEST_CASE("sample records round trip through the binary file") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tcr_samples";
    fs::create_directories(dir);
    TriMesh sphere = oracle::icosphere(0.5, 2);
    Sequence seq = rigid_sequence(sphere, {{0, 0, 0}, {0.1, 0, 0}});
    SampleSet s = sample_occupancy_points(sphere, 100, 0.05, 59);
    track_samples(s, seq);
    std::string path = (dir / "s.bin").string();
    save_samples(s, path);
    SampleSet back = load_samples(path);
    CHECK(back.points == s.points);
    CHECK(back.occupancy == s.occupancy);
    REQUIRE(back.tracked.size() == s.tracked.size());
    for (std::size_t f = 0; f < s.tracked.size(); ++f) CHECK(back.tracked[f] == s.tracked[f]);
}
