#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "support/oracles.hpp"
#include "tcr/camera.hpp"
#include "tcr/error.hpp"
#include "tcr/geometry.hpp"
#include "tcr/image.hpp"
#include "tcr/marching_cubes.hpp"
#include "tcr/metrics.hpp"
#include "tcr/rng.hpp"
#include "tcr/trimesh.hpp"
#include "tcr/voxelgrid.hpp"

using namespace tcr;

namespace {

// Occupancy-style field of a sphere: linear ramp of one-cell width around
// the radius, so the 0.5 level set is the sphere itself.
VoxelGrid sphere_field(double radius, int res, double half = 1.0) {
    Aabb bounds{{-half, -half, -half}, {half, half, half}};
    VoxelGrid g = VoxelGrid::from_cell_bounds(bounds, {res, res, res}, GridValueType::occupancy);
    double h = g.spacing.x;
    for (int k = 0; k < res; ++k)
        for (int j = 0; j < res; ++j)
            for (int i = 0; i < res; ++i) {
                double d = radius - norm(g.node_pos(i, j, k));
                g.at(i, j, k) = std::clamp(0.5 + d / (2.0 * h), 0.0, 1.0);
            }
    return g;
}

std::size_t count_undirected_edges(const TriMesh& mesh) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.triangles)
        for (int e = 0; e < 3; ++e)
            edges.insert(std::minmax(t[e], t[(e + 1) % 3]));
    return edges.size();
}

} // namespace

TEST_CASE("project: point on the optical axis maps to the principal point") {
    Camera cam(400, 400, 127.5, 127.5, 256, 256, Mat3::identity(), {0, 0, 0}, 0.01, 10.0);
    auto p = cam.project({0, 0, 2.5});
    CHECK(p.px == doctest::Approx(127.5));
    CHECK(p.py == doctest::Approx(127.5));
    CHECK(p.depth == doctest::Approx(2.5));
}

TEST_CASE("project: pinhole formula with identity extrinsics") {
    double f = 333.0, cx = 100.0, cy = 80.0;
    Camera cam(f, f, cx, cy, 200, 160, Mat3::identity(), {0, 0, 0}, 0.01, 10.0);
    double a = 0.37, d = 1.9;
    auto p = cam.project({a, 0, d});
    CHECK(p.px == doctest::Approx(cx + f * a / d).epsilon(1e-12));
    CHECK(p.py == doctest::Approx(cy).epsilon(1e-12));
}

TEST_CASE("project: behind-camera points rejected") {
    Camera cam(400, 400, 127.5, 127.5, 256, 256, Mat3::identity(), {0, 0, 0}, 0.01, 10.0);
    CHECK_THROWS_AS((void)cam.project({0, 0, -1.0}), GeometryError);
}

TEST_CASE("project/backproject round trip recovers random points within 1e-9") {
    CounterRng rng(101);
    Mat3 r = Mat3::rotation_y(0.8) * Mat3::rotation_x(-0.3) * Mat3::rotation_z(0.15);
    Camera cam(350, 360, 120, 130, 256, 256, r, {0.2, -0.1, 2.0}, 0.01, 50.0);
    for (int i = 0; i < 50; ++i) {
        Vec3 X{rng.uniform(3 * i, -1, 1), rng.uniform(3 * i + 1, -1, 1),
               rng.uniform(3 * i + 2, -1, 1)};
        if (cam.depth_of(X) <= cam.near_depth) continue;
        auto p = cam.project(X);
        Vec3 back = cam.backproject(p.px, p.py, p.depth);
        CHECK(norm(back - X) < 1e-9);
    }
}

TEST_CASE("camera validates rotation orthonormality and image size") {
    Mat3 bad = Mat3::identity();
    bad.m[0] = 1.5;
    CHECK_THROWS_AS(Camera(400, 400, 0, 0, 10, 10, bad, {0, 0, 0}, 0.1, 10.0), GeometryError);
    CHECK_THROWS_AS(Camera(400, 400, 0, 0, 0, 10, Mat3::identity(), {0, 0, 0}, 0.1, 10.0),
                    GeometryError);
}

TEST_CASE("trilinear: node values reproduced exactly") {
    VoxelGrid g({3, 3, 3}, {0, 0, 0}, {1, 1, 1}, GridValueType::occupancy);
    CounterRng rng(7);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = rng.u01(i);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i)
                CHECK(trilinear_sample(g, g.node_pos(i, j, k)) == doctest::Approx(g.at(i, j, k)).epsilon(1e-15));
}

TEST_CASE("trilinear: cell center equals the mean of its 8 corners") {
    VoxelGrid g({2, 2, 2}, {0, 0, 0}, {2, 2, 2}, GridValueType::occupancy);
    double sum = 0;
    CounterRng rng(9);
    for (std::size_t i = 0; i < 8; ++i) {
        g.values[i] = rng.u01(i);
        sum += g.values[i];
    }
    CHECK(trilinear_sample(g, {1, 1, 1}) == doctest::Approx(sum / 8.0).epsilon(1e-15));
}

TEST_CASE("trilinear: reproduces a linear field at 100 random interior points to 1e-12") {
    VoxelGrid g({9, 7, 8}, {-1, 0.5, 2}, {0.25, 0.5, 0.125}, GridValueType::occupancy);
    auto field = [](const Vec3& p) { return p.x + 2.0 * p.y + 3.0 * p.z; };
    for (int k = 0; k < g.res[2]; ++k)
        for (int j = 0; j < g.res[1]; ++j)
            for (int i = 0; i < g.res[0]; ++i) g.at(i, j, k) = field(g.node_pos(i, j, k));
    Aabb nb = g.node_bounds();
    CounterRng rng(11);
    for (int n = 0; n < 100; ++n) {
        Vec3 p{rng.uniform(3 * n, nb.lo.x, nb.hi.x), rng.uniform(3 * n + 1, nb.lo.y, nb.hi.y),
               rng.uniform(3 * n + 2, nb.lo.z, nb.hi.z)};
        CHECK(std::abs(trilinear_sample(g, p) - field(p)) < 1e-12);
    }
}

TEST_CASE("point_in_mesh: icosphere basics") {
    TriMesh sphere = oracle::icosphere(1.0, 3);
    CHECK(sphere.is_watertight());
    CHECK(point_in_mesh(sphere, {0, 0, 0}) == 1);
    CHECK(point_in_mesh(sphere, {2, 0, 0}) == 0);
}

TEST_CASE("point_in_mesh: rejects non-watertight meshes") {
    TriMesh open_mesh;
    open_mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    open_mesh.triangles = {{0, 1, 2}};
    CHECK_FALSE(open_mesh.is_watertight());
    CHECK_THROWS_AS((void)point_in_mesh(open_mesh, {0, 0, 0}), GeometryError);
}

TEST_CASE("point_in_mesh agrees with the winding-number oracle on 1000 points") {
    TriMesh mesh = oracle::icosphere(0.8, 3);
    // Deform into a potato so the test is not sphere-specific.
    for (Vec3& v : mesh.vertices) {
        v.x *= 1.0 + 0.3 * std::sin(3.0 * v.y);
        v.y *= 1.0 + 0.2 * std::cos(2.0 * v.z);
    }
    InsideTester tester(mesh);
    TriangleGrid grid(mesh);
    CounterRng rng(13);
    int tested = 0;
    for (int n = 0; tested < 1000 && n < 4000; ++n) {
        Vec3 p{rng.uniform(3 * n, -1.5, 1.5), rng.uniform(3 * n + 1, -1.5, 1.5),
               rng.uniform(3 * n + 2, -1.5, 1.5)};
        if (grid.closest_point(p).dist < 1e-6) continue;
        ++tested;
        CHECK(tester.inside(p) == oracle::winding_inside(mesh, p));
    }
    CHECK(tested == 1000);
}

TEST_CASE("voxelize: sphere occupied volume within 2% of analytic") {
    double r = 0.35;
    TriMesh sphere = oracle::icosphere(r, 4);
    Aabb bounds{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    VoxelGrid g = voxelize(sphere, {64, 64, 64}, bounds);
    double cell_volume = g.spacing.x * g.spacing.y * g.spacing.z;
    double occupied = static_cast<double>(g.occupied_count()) * cell_volume;
    double analytic = 4.0 / 3.0 * M_PI * r * r * r;
    CHECK(occupied == doctest::Approx(analytic).epsilon(0.02));
}

TEST_CASE("voxelize: empty bounds region is all zeros") {
    TriMesh sphere = oracle::icosphere(0.2, 2);
    for (Vec3& v : sphere.vertices) v += Vec3{0.7, 0.7, 0.7};
    Aabb bounds{{-1, -1, -1}, {1, 1, 1}};
    VoxelGrid g = voxelize(sphere, {16, 16, 16}, bounds);
    // Octant far from the sphere.
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) CHECK(g.at(i, j, k) == 0.0);
}

TEST_CASE("voxelize: non-enclosing bounds rejected") {
    TriMesh sphere = oracle::icosphere(1.0, 2);
    Aabb bounds{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    CHECK_THROWS_AS((void)voxelize(sphere, {8, 8, 8}, bounds), GeometryError);
}

TEST_CASE("marching_cubes: sphere area and volume within 2% at 64^3") {
    double r = 0.4;
    VoxelGrid g = sphere_field(r, 64);
    TriMesh mesh = marching_cubes(g, 0.5);
    REQUIRE(!mesh.triangles.empty());
    CHECK(mesh.is_watertight());
    CHECK(mesh.area() == doctest::Approx(4.0 * M_PI * r * r).epsilon(0.02));
    CHECK(mesh.signed_volume() == doctest::Approx(4.0 / 3.0 * M_PI * r * r * r).epsilon(0.02));
}

TEST_CASE("marching_cubes: half-space field gives a plane of constant x") {
    VoxelGrid g({8, 8, 8}, {0, 0, 0}, {1, 1, 1}, GridValueType::occupancy);
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) g.at(i, j, k) = i <= 3 ? 1.0 : 0.0;
    TriMesh mesh = marching_cubes(g, 0.5);
    REQUIRE(!mesh.vertices.empty());
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(v.x - 3.5) < 1e-9);
    // Outward orientation: normals point toward the unoccupied +x side.
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        CHECK(mesh.triangle_normal(static_cast<int>(t)).x == doctest::Approx(1.0));
}

TEST_CASE("marching_cubes: single interior node gives a closed surface with Euler char 2") {
    VoxelGrid g({7, 7, 7}, {0, 0, 0}, {1, 1, 1}, GridValueType::occupancy);
    g.at(3, 3, 3) = 1.0;
    TriMesh mesh = marching_cubes(g, 0.5);
    REQUIRE(!mesh.triangles.empty());
    CHECK(mesh.is_watertight());
    long v = static_cast<long>(mesh.vertices.size());
    long e = static_cast<long>(count_undirected_edges(mesh));
    long f = static_cast<long>(mesh.triangles.size());
    CHECK(v - e + f == 2);
    CHECK(mesh.signed_volume() > 0.0);
}

TEST_CASE("marching_cubes: constant grid gives an empty surface, not an error") {
    VoxelGrid g({4, 4, 4}, {0, 0, 0}, {1, 1, 1}, GridValueType::occupancy);
    TriMesh mesh = marching_cubes(g, 0.5);
    CHECK(mesh.vertices.empty());
    CHECK(mesh.triangles.empty());
}

TEST_CASE("voxelize / marching_cubes / voxelize is idempotent up to the boundary shell") {
    TriMesh sphere = oracle::icosphere(0.4, 3);
    Aabb bounds{{-0.6, -0.6, -0.6}, {0.6, 0.6, 0.6}};
    VoxelGrid v0 = voxelize(sphere, {32, 32, 32}, bounds);
    TriMesh m = marching_cubes(v0, 0.5);
    REQUIRE(m.is_watertight());
    VoxelGrid v1 = voxelize(m, {32, 32, 32}, bounds);
    // Differences must sit on v0's occupancy boundary (some 3^3 neighbor in
    // v0 has the opposite value).
    for (int k = 0; k < 32; ++k)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i) {
                if (v0.at(i, j, k) == v1.at(i, j, k)) continue;
                bool boundary = false;
                for (int dk = -1; dk <= 1 && !boundary; ++dk)
                    for (int dj = -1; dj <= 1 && !boundary; ++dj)
                        for (int di = -1; di <= 1 && !boundary; ++di) {
                            int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || jj < 0 || kk < 0 || ii >= 32 || jj >= 32 || kk >= 32)
                                continue;
                            if (v0.at(ii, jj, kk) != v0.at(i, j, k)) boundary = true;
                        }
                CHECK(boundary);
            }
}

TEST_CASE("chamfer_distance: identical sets give zero") {
    CounterRng rng(17);
    std::vector<Vec3> a;
    for (int i = 0; i < 40; ++i) a.push_back(rng.normal3(i));
    CHECK(chamfer_distance(a, a) == 0.0);
}

TEST_CASE("chamfer_distance: unit separation gives 1") {
    std::vector<Vec3> a = {{0, 0, 0}}, b = {{0, 0, 1}};
    CHECK(chamfer_distance(a, b) == 1.0);
}

TEST_CASE("chamfer_distance: empty set rejected") {
    std::vector<Vec3> a = {{0, 0, 0}}, empty;
    CHECK_THROWS_AS((void)chamfer_distance(a, empty), GeometryError);
    CHECK_THROWS_AS((void)chamfer_distance(empty, a), GeometryError);
}

TEST_CASE("chamfer_distance equals O(n^2) brute force exactly on 500-point clouds") {
    CounterRng rng(19);
    std::vector<Vec3> a, b;
    for (int i = 0; i < 500; ++i) {
        a.push_back({rng.uniform(6 * i, -1, 1), rng.uniform(6 * i + 1, -1, 1),
                     rng.uniform(6 * i + 2, -1, 1)});
        b.push_back({rng.uniform(6 * i + 3, -1, 1), rng.uniform(6 * i + 4, -1, 1),
                     rng.uniform(6 * i + 5, -1, 1)});
    }
    double fast = chamfer_distance(a, b);
    double brute = oracle::brute_chamfer(a, b);
    CHECK(fast == brute); // bitwise
    CHECK(fast > 0.0);
    CHECK(chamfer_distance(b, a) == fast); // symmetry
}

TEST_CASE("voxel_iou: identities, disjoint, half-overlap") {
    VoxelGrid a({4, 4, 4}, {0, 0, 0}, {1, 1, 1}, GridValueType::binary);
    VoxelGrid b = a;
    // Empty grids: defined as 1.
    CHECK(voxel_iou(a, b) == 1.0);
    // Box A occupies x in [0,2), box B x in [1,3): overlap 1 of 3 columns.
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j) {
            a.at(0, j, k) = a.at(1, j, k) = 1.0;
            b.at(1, j, k) = b.at(2, j, k) = 1.0;
        }
    CHECK(voxel_iou(a, a) == 1.0);
    CHECK(voxel_iou(a, b) == doctest::Approx(1.0 / 3.0));
    VoxelGrid c({4, 4, 4}, {0, 0, 0}, {1, 1, 1}, GridValueType::binary);
    for (int j = 0; j < 4; ++j) c.at(3, j, 0) = 1.0;
    CHECK(voxel_iou(a, c) == 0.0);
    VoxelGrid different({5, 4, 4}, {0, 0, 0}, {1, 1, 1}, GridValueType::binary);
    CHECK_THROWS_AS((void)voxel_iou(a, different), ShapeError);
}

TEST_CASE("obj round trip preserves vertices, colors and faces exactly") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tcr_obj";
    fs::create_directories(dir);
    std::string path = (dir / "m.obj").string();

    TriMesh mesh = oracle::icosphere(0.7312891722398845, 2);
    CounterRng rng(23);
    mesh.vertex_colors.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        mesh.vertex_colors[i] = {rng.u01(3 * i), rng.u01(3 * i + 1), rng.u01(3 * i + 2)};
    save_obj(mesh, path);
    TriMesh loaded = load_obj(path);
    REQUIRE(loaded.vertices.size() == mesh.vertices.size());
    REQUIRE(loaded.triangles == mesh.triangles);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        CHECK(loaded.vertices[i] == mesh.vertices[i]);
        CHECK(loaded.vertex_colors[i] == mesh.vertex_colors[i]);
    }
}

TEST_CASE("grid file round trip and version rejection") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tcr_grid";
    fs::create_directories(dir);
    std::string path = (dir / "g.grid").string();

    VoxelGrid g({4, 5, 6}, {0.25, -1, 2}, {0.5, 0.25, 0.125}, GridValueType::binary);
    CounterRng rng(29);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = rng.u01(i) > 0.5 ? 1.0 : 0.0;
    save_grid(g, path);
    VoxelGrid h = load_grid(path);
    CHECK(h.res == g.res);
    CHECK(h.origin == g.origin);
    CHECK(h.spacing == g.spacing);
    CHECK(h.value_type == g.value_type);
    CHECK(h.values == g.values); // binary values are f32-exact

    SUBCASE("f64 payload for logit grids") {
        g.value_type = GridValueType::logits;
        for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = rng.normal(i) * 3.0;
        save_grid(g, path, /*f64=*/true);
        VoxelGrid l = load_grid(path);
        CHECK(l.values == g.values);
    }

    SUBCASE("header version mismatch rejected") {
        std::FILE* f = std::fopen((path + ".hdr").c_str(), "r+b");
        REQUIRE(f);
        std::fseek(f, 9, SEEK_SET); // version digit of "tcr-grid 1"
        std::fputc('7', f);
        std::fclose(f);
        CHECK_THROWS_AS((void)load_grid(path), IoError);
    }
}

TEST_CASE("image: ppm/pgm round trip and bilinear sampling") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tcr_img";
    fs::create_directories(dir);

    Image img(8, 6);
    CounterRng rng(31);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) {
            // Snap to 8-bit levels, as the renderer does.
            auto q = [&](std::uint64_t c) { return std::round(rng.u01(c) * 255.0) / 255.0; };
            std::uint64_t base = 3 * (y * 8 + x);
            img.set_color(x, y, {q(base), q(base + 1), q(base + 2)});
        }
    img.mask.assign(48, 0);
    for (int i = 0; i < 48; i += 3) img.mask[i] = 1;

    std::string ppm = (dir / "i.ppm").string(), pgm = (dir / "i.pgm").string();
    save_ppm(img, ppm);
    save_pgm(img.mask, 8, 6, pgm);
    Image back = load_ppm(ppm);
    CHECK(back.rgb == img.rgb);
    int w = 0, h = 0;
    CHECK(load_pgm(pgm, w, h) == img.mask);
    CHECK(w == 8);
    CHECK(h == 6);

    // Bilinear at pixel centers reproduces the pixel exactly; midpoints blend.
    CHECK(bilinear_rgb(img, 3.0, 2.0) == img.color(3, 2));
    Vec3 mid = bilinear_rgb(img, 3.5, 2.0);
    Vec3 expect = (img.color(3, 2) + img.color(4, 2)) * 0.5;
    CHECK(norm(mid - expect) < 1e-15);
}

TEST_CASE("avg_pool2 halves dimensions and averages quads") {
    Image img(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.set_color(x, y, {double(x), double(y), 1.0});
    Image p = avg_pool2(img);
    REQUIRE(p.width == 2);
    REQUIRE(p.height == 2);
    CHECK(p.color(0, 0) == Vec3{0.5, 0.5, 1.0});
    CHECK(p.color(1, 1) == Vec3{2.5, 2.5, 1.0});
}
