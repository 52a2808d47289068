#include "tcr/sampling.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tcr/error.hpp"
#include "tcr/geometry.hpp"

namespace tcr {

namespace {

struct TriFrame {
    Vec3 base, tangent, bitangent, normal;
};

TriFrame triangle_frame(const TriMesh& mesh, const SampleSet::Anchor& a) {
    const auto& t = mesh.triangles[a.triangle];
    const Vec3 &v0 = mesh.vertices[t[0]], &v1 = mesh.vertices[t[1]], &v2 = mesh.vertices[t[2]];
    TriFrame f;
    f.base = v0 * a.b0 + v1 * a.b1 + v2 * a.b2;
    f.tangent = normalized(v1 - v0);
    f.normal = normalized(cross(v1 - v0, v2 - v0));
    f.bitangent = cross(f.normal, f.tangent);
    return f;
}

SampleSet::Anchor anchor_from_closest(const TriMesh& mesh, const ClosestSurfacePoint& cp,
                                      const Vec3& p) {
    SampleSet::Anchor a;
    a.triangle = cp.triangle;
    a.b0 = cp.b0;
    a.b1 = cp.b1;
    a.b2 = cp.b2;
    TriFrame f = triangle_frame(mesh, a);
    Vec3 off = p - f.base;
    a.tangent = dot(off, f.tangent);
    a.bitangent = dot(off, f.bitangent);
    a.normal = dot(off, f.normal);
    return a;
}

Vec3 anchor_position(const TriMesh& mesh, const SampleSet::Anchor& a) {
    TriFrame f = triangle_frame(mesh, a);
    return f.base + f.tangent * a.tangent + f.bitangent * a.bitangent + f.normal * a.normal;
}

} // namespace

SampleSet sample_occupancy_points(const TriMesh& mesh, std::size_t n, double sigma,
                                  std::uint64_t seed, double uniform_fraction,
                                  int source_frame) {
    if (n < 1) throw ShapeError("sample_occupancy_points: n must be >= 1");
    if (sigma < 0) throw ShapeError("sample_occupancy_points: sigma must be >= 0");
    InsideTester tester(mesh); // also enforces watertightness

    CounterRng rng(seed);
    SampleSet set;
    set.source_frame = source_frame;
    set.sigma = sigma;
    set.points.reserve(n);

    std::size_t n_uniform = static_cast<std::size_t>(uniform_fraction * static_cast<double>(n));
    std::size_t n_surface = n - n_uniform;

    std::vector<SurfaceSample> base = sample_surface(mesh, n_surface, rng.stream(0));
    CounterRng noise = rng.stream(1);
    for (std::size_t i = 0; i < n_surface; ++i)
        set.points.push_back(base[i].position + noise.normal3(i) * sigma);

    Aabb box = mesh.bounds().expanded(0.1 * mesh.bounds().diagonal());
    CounterRng ubox = rng.stream(2);
    for (std::size_t i = 0; i < n_uniform; ++i)
        set.points.push_back({ubox.uniform(3 * i, box.lo.x, box.hi.x),
                              ubox.uniform(3 * i + 1, box.lo.y, box.hi.y),
                              ubox.uniform(3 * i + 2, box.lo.z, box.hi.z)});

    set.occupancy.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        set.occupancy[i] = tester.inside(set.points[i]) ? 1 : 0;
    return set;
}

SampleSet sample_color_points(const TriMesh& mesh, std::size_t m, std::uint64_t seed,
                              int source_frame) {
    if (!mesh.has_colors()) throw GeometryError("sample_color_points: mesh has no vertex colors");
    CounterRng rng(seed);
    SampleSet set;
    set.source_frame = source_frame;
    std::vector<SurfaceSample> base = sample_surface(mesh, m, rng.stream(0));
    set.points.reserve(m);
    set.colors.reserve(m);
    set.anchors.reserve(m);
    for (const SurfaceSample& s : base) {
        set.points.push_back(s.position);
        set.colors.push_back(mesh.color_at(s.triangle, s.b0, s.b1, s.b2));
        SampleSet::Anchor a;
        a.triangle = s.triangle;
        a.b0 = s.b0;
        a.b1 = s.b1;
        a.b2 = s.b2;
        set.anchors.push_back(a); // exact on-surface anchor, zero offset
    }
    return set;
}

void track_samples(SampleSet& samples, const Sequence& sequence) {
    if (samples.source_frame < 0 || samples.source_frame >= sequence.frame_count())
        throw ShapeError("track_samples: source frame not in sequence");
    const TriMesh& src = sequence.frames[samples.source_frame].gt_mesh;

    if (samples.anchors.empty()) {
        TriangleGrid grid(src);
        samples.anchors.resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples.anchors[i] = anchor_from_closest(src, grid.closest_point(samples.points[i]),
                                                     samples.points[i]);
    }

    samples.far_flag.assign(samples.size(), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& a = samples.anchors[i];
        double off = std::sqrt(a.tangent * a.tangent + a.bitangent * a.bitangent +
                               a.normal * a.normal);
        if (off > 3.0 * samples.sigma) samples.far_flag[i] = 1;
    }

    samples.tracked.assign(sequence.frame_count(), {});
    for (int f = 0; f < sequence.frame_count(); ++f) {
        const TriMesh& mesh = sequence.frames[f].gt_mesh;
        samples.tracked[f].resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples.tracked[f][i] = anchor_position(mesh, samples.anchors[i]);
    }
}

VoxelCorrespondence voxel_correspondence(const Sequence& sequence, int frame_t, int frame_l,
                                         int resolution) {
    if (frame_t < 0 || frame_t >= sequence.frame_count() || frame_l < 0 ||
        frame_l >= sequence.frame_count())
        throw ShapeError("voxel_correspondence: frame index out of range");

    VoxelGrid layout = VoxelGrid::from_cell_bounds(
        sequence.bounds, {resolution, resolution, resolution}, GridValueType::binary);
    const TriMesh& src_mesh = sequence.frames[frame_t].gt_mesh;
    const TriMesh& tgt_mesh = sequence.frames[frame_l].gt_mesh;
    TriangleGrid grid(src_mesh);

    VoxelCorrespondence corr;
    corr.source_frame = frame_t;
    corr.target_frame = frame_l;
    corr.resolution = {resolution, resolution, resolution};
    corr.method = "nearest-surface-frame-transport";
    corr.target.assign(layout.count(), -1);

    // Occupancy of the source frame at this resolution, for the coverage
    // statistic. Reuse the dataset grid when the layouts match.
    const VoxelGrid* src_occ = nullptr;
    VoxelGrid src_occ_local;
    if (sequence.frames[frame_t].gt_voxels.res[0] == resolution &&
        sequence.frames[frame_t].gt_voxels.same_layout(layout)) {
        src_occ = &sequence.frames[frame_t].gt_voxels;
    } else {
        src_occ_local = voxelize(src_mesh, {resolution, resolution, resolution}, sequence.bounds);
        src_occ = &src_occ_local;
    }

    std::size_t occupied = 0, occupied_mapped = 0;
    for (std::size_t flat = 0; flat < layout.count(); ++flat) {
        auto [i, j, k] = layout.coords(flat);
        Vec3 X = layout.node_pos(i, j, k);
        SampleSet::Anchor a = anchor_from_closest(src_mesh, grid.closest_point(X), X);
        Vec3 Xp = anchor_position(tgt_mesh, a);
        auto cell = layout.cell_of(Xp);
        bool mapped = cell[0] >= 0;
        if (mapped)
            corr.target[flat] = static_cast<std::int32_t>(layout.index(cell[0], cell[1], cell[2]));
        if (src_occ->occupied(flat)) {
            ++occupied;
            occupied_mapped += mapped;
        }
    }
    corr.occupied_coverage =
        occupied == 0 ? 1.0 : static_cast<double>(occupied_mapped) / static_cast<double>(occupied);
    return corr;
}

void save_samples(const SampleSet& s, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    std::ostringstream head;
    head << "tcr-samples 1 n " << s.size() << " source_frame " << s.source_frame << " sigma "
         << s.sigma << " occupancy " << (s.has_occupancy() ? 1 : 0) << " colors "
         << (s.has_colors() ? 1 : 0) << " frames " << s.tracked.size() << "\n";
    f << head.str();
    auto wd = [&f](const double* p, std::size_t n) {
        f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
    };
    for (const Vec3& p : s.points) wd(&p.x, 3);
    if (s.has_occupancy())
        f.write(reinterpret_cast<const char*>(s.occupancy.data()),
                static_cast<std::streamsize>(s.occupancy.size()));
    for (const Vec3& c : s.colors) wd(&c.x, 3);
    for (const auto& frame : s.tracked)
        for (const Vec3& p : frame) wd(&p.x, 3);
    if (!f) throw IoError("write failed: " + path);
}

SampleSet load_samples(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("missing samples header: " + path);
    std::istringstream hs(line);
    std::string magic, key;
    int version = 0;
    hs >> magic >> version;
    if (magic != "tcr-samples" || version != 1)
        throw IoError("samples version mismatch in " + path);
    std::size_t n = 0, frames = 0;
    int has_occ = 0, has_col = 0;
    SampleSet s;
    while (hs >> key) {
        if (key == "n") hs >> n;
        else if (key == "source_frame") hs >> s.source_frame;
        else if (key == "sigma") hs >> s.sigma;
        else if (key == "occupancy") hs >> has_occ;
        else if (key == "colors") hs >> has_col;
        else if (key == "frames") hs >> frames;
    }
    auto rd = [&f, &path](double* p, std::size_t cnt) {
        f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(cnt * 8));
        if (!f) throw IoError("truncated samples file: " + path);
    };
    s.points.resize(n);
    for (Vec3& p : s.points) rd(&p.x, 3);
    if (has_occ) {
        s.occupancy.resize(n);
        f.read(reinterpret_cast<char*>(s.occupancy.data()), static_cast<std::streamsize>(n));
    }
    if (has_col) {
        s.colors.resize(n);
        for (Vec3& c : s.colors) rd(&c.x, 3);
    }
    s.tracked.resize(frames);
    for (auto& frame : s.tracked) {
        frame.resize(n);
        for (Vec3& p : frame) rd(&p.x, 3);
    }
    return s;
}

} // namespace tcr
