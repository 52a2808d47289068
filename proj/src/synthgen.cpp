#include "tcr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "tcr/error.hpp"
#include "tcr/geometry.hpp"
#include "tcr/keyvalue.hpp"
#include "tcr/rng.hpp"

namespace tcr {

namespace fs = std::filesystem;

void SequenceSpec::validate() const {
    if (frame_count < 1) throw ConfigError("frame_count must be >= 1");
    if (motion_amplitude < 0) throw ConfigError("motion_amplitude must be >= 0");
    if (image_size < 8) throw ConfigError("image_size must be >= 8");
    if (voxel_resolution < 4) throw ConfigError("voxel_resolution must be >= 4");
    if (mesh_resolution < 16) throw ConfigError("mesh_resolution must be >= 16");
    if (!region_colors.empty() && region_colors.size() != kBodyPartCount)
        throw ConfigError("region_colors must have one entry per body part");
    if (orbit_radius <= 0.5) throw ConfigError("orbit_radius too small");
}

std::vector<Vec3> two_tone_palette(const Vec3& color_a, const Vec3& color_b) {
    std::vector<Vec3> palette(kBodyPartCount, color_b);
    palette[kTorso] = color_a;
    palette[kHead] = color_a;
    return palette;
}

namespace {

Vec3 hsv_to_rgb(double h, double s, double v) {
    double r = std::abs(h * 6.0 - 3.0) - 1.0;
    double g = 2.0 - std::abs(h * 6.0 - 2.0);
    double b = 2.0 - std::abs(h * 6.0 - 4.0);
    auto mixc = [&](double c) { return ((std::clamp(c, 0.0, 1.0) - 1.0) * s + 1.0) * v; };
    return {mixc(r), mixc(g), mixc(b)};
}

std::vector<Vec3> seeded_palette(const CounterRng& rng) {
    std::vector<Vec3> palette(kBodyPartCount);
    for (int b = 0; b < kBodyPartCount; ++b)
        palette[b] = hsv_to_rgb(rng.u01(3 * b), rng.uniform(3 * b + 1, 0.45, 0.9),
                                rng.uniform(3 * b + 2, 0.5, 0.95));
    return palette;
}

struct JointTrajectories {
    std::vector<double> cycles, phase;

    static JointTrajectories make(const CounterRng& rng, std::size_t bones) {
        JointTrajectories tr;
        tr.cycles.resize(bones);
        tr.phase.resize(bones);
        for (std::size_t b = 0; b < bones; ++b) {
            tr.cycles[b] = rng.uniform(2 * b, 0.4, 1.2);
            tr.phase[b] = rng.uniform(2 * b + 1, 0.0, 2.0 * M_PI);
        }
        return tr;
    }

    std::vector<double> angles(const BodyRig& rig, double amplitude, int frame,
                               int frame_count) const {
        double u = static_cast<double>(frame) / std::max(frame_count - 1, 1);
        std::vector<double> out(cycles.size());
        for (std::size_t b = 0; b < cycles.size(); ++b)
            out[b] = amplitude * rig.amplitude_scale[b] *
                     std::sin(2.0 * M_PI * cycles[b] * u + phase[b]);
        return out;
    }
};

} // namespace

Sequence generate_sequence(const SequenceSpec& spec) {
    spec.validate();
    CounterRng rng(spec.seed);

    Sequence seq;
    seq.spec = spec;
    if (seq.spec.region_colors.empty()) seq.spec.region_colors = seeded_palette(rng.stream(1));

    SkinnedBody body = SkinnedBody::build(spec.dims, spec.mesh_resolution,
                                          seq.spec.region_colors);
    seq.rig = body.rig;

    Aabb rest_bounds = body.rest_mesh.bounds();
    double margin = 0.08 + 0.85 * std::min(spec.motion_amplitude, 0.5);
    seq.bounds = rest_bounds.expanded(margin);

    JointTrajectories traj = JointTrajectories::make(rng.stream(2), body.rig.rest_capsules.size());

    Vec3 center = rest_bounds.center();
    double half_extent = 0.5 * std::max({rest_bounds.extent().x, rest_bounds.extent().y,
                                         rest_bounds.extent().z});
    double focal = 0.30 * spec.image_size * spec.orbit_radius / half_extent;
    double near_d = std::max(0.05, spec.orbit_radius - 1.6 * half_extent);
    double far_d = spec.orbit_radius + 1.6 * half_extent;
    const Vec3 light_dir = normalized({-0.35, -0.8, -0.5});

    for (int f = 0; f < spec.frame_count; ++f) {
        std::vector<double> angles =
            traj.angles(body.rig, spec.motion_amplitude, f, spec.frame_count);
        std::vector<RigidTransform> transforms = body.rig.pose(angles);
        TriMesh mesh = body.posed_mesh(transforms);
        if (!seq.bounds.contains(mesh.bounds()))
            throw GeometryError("frame " + std::to_string(f) +
                                " leaves the sequence voxel bounds; reduce motion_amplitude");

        double angle = spec.orbit_start_angle + spec.orbit_step * f;
        Vec3 eye = center + Vec3{spec.orbit_radius * std::sin(angle), spec.orbit_height,
                                 spec.orbit_radius * std::cos(angle)};
        Camera camera = Camera::look_at(eye, center, focal, focal, spec.image_size,
                                        spec.image_size, near_d, far_d);

        FrameBundle bundle;
        bundle.camera = camera;
        bundle.image = render_frame(mesh, camera, light_dir);
        bundle.gt_voxels = voxelize(mesh, {spec.voxel_resolution, spec.voxel_resolution,
                                           spec.voxel_resolution}, seq.bounds);
        bundle.gt_mesh = std::move(mesh);
        seq.frames.push_back(std::move(bundle));
        seq.bone_transforms.push_back(std::move(transforms));
    }
    return seq;
}

Image render_frame(const TriMesh& mesh, const Camera& camera, const Vec3& light_dir) {
    Image img(camera.width, camera.height);
    img.mask.assign(static_cast<std::size_t>(camera.width) * camera.height, 0);
    std::vector<double> zbuf(img.mask.size(), std::numeric_limits<double>::infinity());

    std::vector<Vec3> normals = mesh.vertex_normals();
    Vec3 l = normalized(light_dir);
    const double ambient = 0.15;

    struct Projected {
        double x, y, z;
        bool ok;
    };
    std::vector<Projected> proj(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        Vec3 c = camera.to_camera(mesh.vertices[v]);
        if (c.z <= camera.near_depth) {
            proj[v] = {0, 0, 0, false};
        } else {
            proj[v] = {camera.cx + camera.fx * c.x / c.z, camera.cy + camera.fy * c.y / c.z, c.z,
                       true};
        }
    }

    bool colored = mesh.has_colors();
    for (const auto& t : mesh.triangles) {
        const Projected &p0 = proj[t[0]], &p1 = proj[t[1]], &p2 = proj[t[2]];
        if (!p0.ok || !p1.ok || !p2.ok) continue;
        double area2 = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
        if (std::abs(area2) < 1e-12) continue;
        int xmin = std::max(0, static_cast<int>(std::ceil(std::min({p0.x, p1.x, p2.x}))));
        int xmax = std::min(camera.width - 1,
                            static_cast<int>(std::floor(std::max({p0.x, p1.x, p2.x}))));
        int ymin = std::max(0, static_cast<int>(std::ceil(std::min({p0.y, p1.y, p2.y}))));
        int ymax = std::min(camera.height - 1,
                            static_cast<int>(std::floor(std::max({p0.y, p1.y, p2.y}))));
        for (int y = ymin; y <= ymax; ++y)
            for (int x = xmin; x <= xmax; ++x) {
                double w0 = ((p1.x - x) * (p2.y - y) - (p1.y - y) * (p2.x - x)) / area2;
                double w1 = ((p2.x - x) * (p0.y - y) - (p2.y - y) * (p0.x - x)) / area2;
                double w2 = 1.0 - w0 - w1;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                double inv_z = w0 / p0.z + w1 / p1.z + w2 / p2.z;
                double z = 1.0 / inv_z;
                std::size_t pix = static_cast<std::size_t>(y) * camera.width + x;
                if (z >= zbuf[pix]) continue;
                zbuf[pix] = z;
                // Perspective-correct attribute blending.
                auto blend = [&](const Vec3& a0, const Vec3& a1, const Vec3& a2) {
                    return (a0 * (w0 / p0.z) + a1 * (w1 / p1.z) + a2 * (w2 / p2.z)) * z;
                };
                Vec3 albedo = colored ? blend(mesh.vertex_colors[t[0]], mesh.vertex_colors[t[1]],
                                              mesh.vertex_colors[t[2]])
                                      : Vec3{0.8, 0.8, 0.8};
                Vec3 n = normalized(blend(normals[t[0]], normals[t[1]], normals[t[2]]));
                double brightness = ambient + (1.0 - ambient) * std::max(0.0, dot(n, -l));
                img.set_color(x, y, albedo * brightness);
                img.mask[pix] = 1;
            }
    }

    // Snap to the 8-bit levels the PPM container stores.
    for (double& v : img.rgb) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    return img;
}

namespace {

std::string frame_tag(int f) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", f);
    return buf;
}

std::vector<double> camera_to_numbers(const Camera& c) {
    std::vector<double> v = {c.fx, c.fy, c.cx, c.cy, static_cast<double>(c.width),
                             static_cast<double>(c.height), c.near_depth, c.far_depth};
    v.insert(v.end(), c.rotation.m.begin(), c.rotation.m.end());
    v.push_back(c.translation.x);
    v.push_back(c.translation.y);
    v.push_back(c.translation.z);
    return v;
}

Camera camera_from_numbers(const std::vector<double>& v) {
    if (v.size() != 20) throw IoError("camera record must have 20 numbers");
    Mat3 r;
    std::copy(v.begin() + 8, v.begin() + 17, r.m.begin());
    return Camera(v[0], v[1], v[2], v[3], static_cast<int>(v[4]), static_cast<int>(v[5]), r,
                  {v[17], v[18], v[19]}, v[6], v[7]);
}

} // namespace

void export_dataset(const Sequence& seq, const std::string& directory) {
    fs::create_directories(fs::path(directory) / "frames");
    KeyValueFile kv;
    kv.set_int("manifest_version", 1);
    kv.set_int("frame_count", seq.frame_count());
    kv.set_int("seed", static_cast<long long>(seq.spec.seed));
    kv.set_double("motion_amplitude", seq.spec.motion_amplitude);
    const BodyDims& d = seq.spec.dims;
    kv.set_doubles("dims", {d.torso_radius, d.torso_length, d.head_radius, d.upper_arm_radius,
                            d.upper_arm_length, d.forearm_radius, d.forearm_length,
                            d.thigh_radius, d.thigh_length, d.shin_radius, d.shin_length});
    std::vector<double> colors;
    for (const Vec3& c : seq.spec.region_colors) {
        colors.push_back(c.x);
        colors.push_back(c.y);
        colors.push_back(c.z);
    }
    kv.set_doubles("region_colors", colors);
    kv.set_double("orbit_radius", seq.spec.orbit_radius);
    kv.set_double("orbit_height", seq.spec.orbit_height);
    kv.set_double("orbit_start_angle", seq.spec.orbit_start_angle);
    kv.set_double("orbit_step", seq.spec.orbit_step);
    kv.set_int("image_size", seq.spec.image_size);
    kv.set_int("voxel_resolution", seq.spec.voxel_resolution);
    kv.set_int("mesh_resolution", seq.spec.mesh_resolution);
    kv.set_doubles("bounds", {seq.bounds.lo.x, seq.bounds.lo.y, seq.bounds.lo.z, seq.bounds.hi.x,
                              seq.bounds.hi.y, seq.bounds.hi.z});

    for (int f = 0; f < seq.frame_count(); ++f) {
        const FrameBundle& fb = seq.frames[f];
        std::string tag = frame_tag(f), rel = "frames/" + tag;
        std::string prefix = "frame." + std::to_string(f) + ".";
        save_obj(fb.gt_mesh, (fs::path(directory) / (rel + ".obj")).string());
        save_ppm(fb.image, (fs::path(directory) / (rel + ".ppm")).string());
        save_pgm(fb.image.mask, fb.image.width, fb.image.height,
                 (fs::path(directory) / (rel + ".pgm")).string());
        save_grid(fb.gt_voxels, (fs::path(directory) / (rel + ".grid")).string());
        kv.set(prefix + "obj", rel + ".obj");
        kv.set(prefix + "image", rel + ".ppm");
        kv.set(prefix + "mask", rel + ".pgm");
        kv.set(prefix + "grid", rel + ".grid");
        kv.set_doubles(prefix + "camera", camera_to_numbers(fb.camera));
        std::vector<double> bones;
        for (const RigidTransform& t : seq.bone_transforms[f]) {
            bones.insert(bones.end(), t.r.m.begin(), t.r.m.end());
            bones.push_back(t.t.x);
            bones.push_back(t.t.y);
            bones.push_back(t.t.z);
        }
        kv.set_doubles(prefix + "bones", bones);
    }
    kv.save((fs::path(directory) / "manifest.txt").string());
}

Sequence load_dataset(const std::string& directory) {
    KeyValueFile kv = KeyValueFile::load((fs::path(directory) / "manifest.txt").string());
    if (!kv.has("manifest_version") || kv.get_int("manifest_version") != 1)
        throw IoError("manifest version mismatch in " + directory);

    Sequence seq;
    SequenceSpec& spec = seq.spec;
    spec.frame_count = static_cast<int>(kv.get_int("frame_count"));
    spec.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
    spec.motion_amplitude = kv.get_double("motion_amplitude");
    std::vector<double> d = kv.get_doubles("dims");
    if (d.size() != 11) throw IoError("malformed dims record");
    spec.dims = {d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7], d[8], d[9], d[10]};
    std::vector<double> colors = kv.get_doubles("region_colors");
    if (colors.size() != 3 * kBodyPartCount) throw IoError("malformed region_colors record");
    spec.region_colors.clear();
    for (int i = 0; i < kBodyPartCount; ++i)
        spec.region_colors.push_back({colors[3 * i], colors[3 * i + 1], colors[3 * i + 2]});
    spec.orbit_radius = kv.get_double("orbit_radius");
    spec.orbit_height = kv.get_double("orbit_height");
    spec.orbit_start_angle = kv.get_double("orbit_start_angle");
    spec.orbit_step = kv.get_double("orbit_step");
    spec.image_size = static_cast<int>(kv.get_int("image_size"));
    spec.voxel_resolution = static_cast<int>(kv.get_int("voxel_resolution"));
    spec.mesh_resolution = static_cast<int>(kv.get_int("mesh_resolution"));
    std::vector<double> b = kv.get_doubles("bounds");
    if (b.size() != 6) throw IoError("malformed bounds record");
    seq.bounds = {{b[0], b[1], b[2]}, {b[3], b[4], b[5]}};
    seq.rig = BodyRig::build(spec.dims);

    for (int f = 0; f < spec.frame_count; ++f) {
        std::string prefix = "frame." + std::to_string(f) + ".";
        FrameBundle fb;
        fb.gt_mesh = load_obj((fs::path(directory) / kv.get(prefix + "obj")).string());
        fb.gt_mesh.vertex_ids.resize(fb.gt_mesh.vertices.size());
        for (std::size_t v = 0; v < fb.gt_mesh.vertices.size(); ++v)
            fb.gt_mesh.vertex_ids[v] = static_cast<std::int64_t>(v);
        fb.image = load_ppm((fs::path(directory) / kv.get(prefix + "image")).string());
        int mw = 0, mh = 0;
        fb.image.mask = load_pgm((fs::path(directory) / kv.get(prefix + "mask")).string(), mw, mh);
        if (mw != fb.image.width || mh != fb.image.height)
            throw IoError("mask dimensions disagree with image for frame " + std::to_string(f));
        fb.gt_voxels = load_grid((fs::path(directory) / kv.get(prefix + "grid")).string());
        fb.camera = camera_from_numbers(kv.get_doubles(prefix + "camera"));
        std::vector<double> bones = kv.get_doubles(prefix + "bones");
        if (bones.size() != 12 * seq.rig.rest_capsules.size())
            throw IoError("malformed bones record for frame " + std::to_string(f));
        std::vector<RigidTransform> transforms(seq.rig.rest_capsules.size());
        for (std::size_t bone = 0; bone < transforms.size(); ++bone) {
            RigidTransform t;
            std::copy(bones.begin() + 12 * bone, bones.begin() + 12 * bone + 9, t.r.m.begin());
            t.t = {bones[12 * bone + 9], bones[12 * bone + 10], bones[12 * bone + 11]};
            transforms[bone] = t;
        }
        seq.frames.push_back(std::move(fb));
        seq.bone_transforms.push_back(std::move(transforms));
    }
    return seq;
}

} // namespace tcr
