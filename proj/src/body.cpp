#include "tcr/body.hpp"

#include <algorithm>
#include <cmath>

#include "tcr/error.hpp"
#include "tcr/marching_cubes.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

double capsule_sdf(const Capsule& c, const Vec3& p) {
    Vec3 ab = c.b - c.a;
    double t = dot(p - c.a, ab) / std::max(norm2(ab), 1e-30);
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (c.a + ab * t)) - c.radius;
}

double capsule_union_sdf(std::span<const Capsule> capsules, const Vec3& p) {
    double d = std::numeric_limits<double>::infinity();
    for (const Capsule& c : capsules) d = std::min(d, capsule_sdf(c, p));
    return d;
}

Aabb capsules_bounds(std::span<const Capsule> capsules) {
    Aabb box{capsules[0].a, capsules[0].a};
    for (const Capsule& c : capsules) {
        Vec3 r{c.radius, c.radius, c.radius};
        box.lo = min(box.lo, min(c.a - r, c.b - r));
        box.hi = max(box.hi, max(c.a + r, c.b + r));
    }
    return box;
}

BodyRig BodyRig::build(const BodyDims& d) {
    BodyRig rig;
    rig.rest_capsules.resize(kBodyPartCount);
    rig.parent.assign(kBodyPartCount, -1);
    rig.pivot.assign(kBodyPartCount, {});
    rig.axis.assign(kBodyPartCount, {1, 0, 0});
    rig.amplitude_scale.assign(kBodyPartCount, 1.0);

    double shoulder_y = d.torso_length * 0.92;
    double shoulder_x = d.torso_radius + 0.02;
    double hip_y = -0.05, hip_x = d.torso_radius * 0.58;

    rig.rest_capsules[kTorso] = {{0, 0, 0}, {0, d.torso_length, 0}, d.torso_radius};
    rig.rest_capsules[kHead] = {{0, d.torso_length + d.torso_radius * 0.6, 0},
                                {0, d.torso_length + d.torso_radius * 0.6 + 0.16, 0},
                                d.head_radius};

    auto arm = [&](double side, int upper, int fore) {
        Vec3 shoulder{side * shoulder_x, shoulder_y, 0};
        Vec3 elbow = shoulder + Vec3{side * d.upper_arm_length, 0, 0};
        Vec3 wrist = elbow + Vec3{side * d.forearm_length, 0, 0};
        rig.rest_capsules[upper] = {shoulder, elbow, d.upper_arm_radius};
        rig.rest_capsules[fore] = {elbow, wrist, d.forearm_radius};
        rig.parent[upper] = kTorso;
        rig.parent[fore] = upper;
        rig.pivot[upper] = shoulder;
        rig.pivot[fore] = elbow;
        rig.axis[upper] = {0, 0, 1};
        rig.axis[fore] = {0, 0, 1};
        rig.amplitude_scale[upper] = 1.0;
        rig.amplitude_scale[fore] = 1.3;
    };
    arm(+1.0, kLeftUpperArm, kLeftForearm);
    arm(-1.0, kRightUpperArm, kRightForearm);

    auto leg = [&](double side, int thigh, int shin) {
        Vec3 hip{side * hip_x, hip_y, 0};
        Vec3 knee = hip + Vec3{side * 0.03, -d.thigh_length, 0};
        Vec3 ankle = knee + Vec3{0, -d.shin_length, 0};
        rig.rest_capsules[thigh] = {hip, knee, d.thigh_radius};
        rig.rest_capsules[shin] = {knee, ankle, d.shin_radius};
        rig.parent[thigh] = kTorso;
        rig.parent[shin] = thigh;
        rig.pivot[thigh] = hip;
        rig.pivot[shin] = knee;
        rig.axis[thigh] = {1, 0, 0};
        rig.axis[shin] = {1, 0, 0};
        rig.amplitude_scale[thigh] = 0.8;
        rig.amplitude_scale[shin] = 1.1;
    };
    leg(+1.0, kLeftThigh, kLeftShin);
    leg(-1.0, kRightThigh, kRightShin);

    rig.parent[kTorso] = -1;
    rig.parent[kHead] = kTorso;
    rig.pivot[kTorso] = {0, 0, 0};
    rig.pivot[kHead] = {0, d.torso_length + d.torso_radius * 0.35, 0};
    rig.axis[kTorso] = {1, 0, 0};
    rig.axis[kHead] = {1, 0, 0};
    rig.amplitude_scale[kTorso] = 0.25;
    rig.amplitude_scale[kHead] = 0.5;
    return rig;
}

namespace {

Mat3 axis_angle(const Vec3& axis, double angle) {
    Vec3 u = normalized(axis);
    double c = std::cos(angle), s = std::sin(angle), ic = 1.0 - c;
    Mat3 r;
    r.m = {c + u.x * u.x * ic,       u.x * u.y * ic - u.z * s, u.x * u.z * ic + u.y * s,
           u.y * u.x * ic + u.z * s, c + u.y * u.y * ic,       u.y * u.z * ic - u.x * s,
           u.z * u.x * ic - u.y * s, u.z * u.y * ic + u.x * s, c + u.z * u.z * ic};
    return r;
}

} // namespace

std::vector<RigidTransform> BodyRig::pose(std::span<const double> angles) const {
    if (angles.size() != rest_capsules.size())
        throw ShapeError("pose: expected one angle per bone");
    std::vector<RigidTransform> world(rest_capsules.size());
    for (std::size_t b = 0; b < rest_capsules.size(); ++b) {
        Mat3 r = axis_angle(axis[b], angles[b]);
        RigidTransform local{r, pivot[b] - r * pivot[b]}; // rotate about the pivot
        world[b] = parent[b] < 0 ? local : world[parent[b]] * local;
    }
    return world;
}

std::vector<Capsule> BodyRig::posed_capsules(std::span<const RigidTransform> transforms) const {
    std::vector<Capsule> out(rest_capsules.size());
    for (std::size_t b = 0; b < rest_capsules.size(); ++b)
        out[b] = {transforms[b] * rest_capsules[b].a, transforms[b] * rest_capsules[b].b,
                  rest_capsules[b].radius};
    return out;
}

SkinnedBody SkinnedBody::build(const BodyDims& dims, int mesh_resolution,
                               std::span<const Vec3> region_colors, double blend) {
    SkinnedBody body;
    body.rig = BodyRig::build(dims);
    if (region_colors.size() != body.rig.rest_capsules.size())
        throw ShapeError("SkinnedBody: one region color per capsule required");

    Aabb bounds = capsules_bounds(body.rig.rest_capsules).expanded(0.06);
    VoxelGrid field = VoxelGrid::from_cell_bounds(
        bounds, {mesh_resolution, mesh_resolution, mesh_resolution}, GridValueType::occupancy);
    for (int k = 0; k < field.res[2]; ++k)
        for (int j = 0; j < field.res[1]; ++j)
            for (int i = 0; i < field.res[0]; ++i)
                field.at(i, j, k) = -capsule_union_sdf(body.rig.rest_capsules,
                                                       field.node_pos(i, j, k));
    body.rest_mesh = marching_cubes(field, 0.0);
    body.mesh_cell = std::max({field.spacing.x, field.spacing.y, field.spacing.z});
    if (!body.rest_mesh.is_watertight())
        throw GeometryError("rest body surface extraction produced a non-watertight mesh");

    std::size_t nb = body.rig.rest_capsules.size();
    body.weights.resize(body.rest_mesh.vertices.size());
    body.rest_mesh.vertex_colors.resize(body.rest_mesh.vertices.size());
    body.rest_mesh.vertex_ids.resize(body.rest_mesh.vertices.size());
    for (std::size_t v = 0; v < body.rest_mesh.vertices.size(); ++v) {
        const Vec3& p = body.rest_mesh.vertices[v];
        std::vector<float> w(nb, 0.0f);
        double dmin = std::numeric_limits<double>::infinity();
        std::size_t argmin = 0;
        std::vector<double> dist(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            dist[b] = capsule_sdf(body.rig.rest_capsules[b], p);
            if (dist[b] < dmin) {
                dmin = dist[b];
                argmin = b;
            }
        }
        double total = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            double excess = dist[b] - dmin;
            if (excess < 4.0 * blend) {
                w[b] = static_cast<float>(std::exp(-excess / blend));
                total += w[b];
            }
        }
        for (float& x : w) x = static_cast<float>(x / total);
        body.weights[v] = std::move(w);
        body.rest_mesh.vertex_colors[v] = region_colors[argmin];
        body.rest_mesh.vertex_ids[v] = static_cast<std::int64_t>(v);
    }
    return body;
}

TriMesh SkinnedBody::posed_mesh(std::span<const RigidTransform> transforms) const {
    TriMesh mesh = rest_mesh;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        Vec3 acc{0, 0, 0};
        const Vec3& rest = rest_mesh.vertices[v];
        const auto& w = weights[v];
        for (std::size_t b = 0; b < w.size(); ++b)
            if (w[b] != 0.0f) acc += (transforms[b] * rest) * static_cast<double>(w[b]);
        mesh.vertices[v] = acc;
    }
    return mesh;
}

} // namespace tcr
