#pragma once

#include <span>
#include <vector>

#include "tcr/rng.hpp"
#include "tcr/trimesh.hpp"
#include "tcr/vec3.hpp"

namespace tcr {

struct Capsule {
    Vec3 a, b;
    double radius = 0.1;
};

// Signed distance to the capsule surface, negative inside.
double capsule_sdf(const Capsule& c, const Vec3& p);

// Union of capsules (min of member distances).
double capsule_union_sdf(std::span<const Capsule> capsules, const Vec3& p);

Aabb capsules_bounds(std::span<const Capsule> capsules);

// Ten-segment articulated figure: torso, head, upper/lower arm and leg pairs.
// One bone per capsule; joints rotate about fixed axes at rest-pose pivots.
struct BodyDims {
    double torso_radius = 0.17, torso_length = 0.52;
    double head_radius = 0.11;
    double upper_arm_radius = 0.060, upper_arm_length = 0.26;
    double forearm_radius = 0.050, forearm_length = 0.25;
    double thigh_radius = 0.085, thigh_length = 0.43;
    double shin_radius = 0.060, shin_length = 0.42;
};

enum BodyPart {
    kTorso = 0,
    kHead,
    kLeftUpperArm,
    kLeftForearm,
    kRightUpperArm,
    kRightForearm,
    kLeftThigh,
    kLeftShin,
    kRightThigh,
    kRightShin,
    kBodyPartCount
};

struct BodyRig {
    std::vector<Capsule> rest_capsules;         // one per part
    std::vector<int> parent;                    // bone hierarchy
    std::vector<Vec3> pivot;                    // joint pivot in rest coordinates
    std::vector<Vec3> axis;                     // joint rotation axis
    std::vector<double> amplitude_scale;        // per-joint mobility factor

    static BodyRig build(const BodyDims& dims);

    // Forward kinematics: world transform per bone for the given joint angles.
    std::vector<RigidTransform> pose(std::span<const double> angles) const;

    std::vector<Capsule> posed_capsules(std::span<const RigidTransform> transforms) const;
};

// Rest surface plus linear-blend skinning state. The surface is extracted
// once from the capsule-union field, so every posed mesh shares one
// topology and vertex ids are a frame-to-frame bijection for free.
struct SkinnedBody {
    BodyRig rig;
    TriMesh rest_mesh;                       // colored per region
    std::vector<std::vector<float>> weights; // per vertex: one weight per bone
    double mesh_cell = 0;                    // extraction lattice spacing

    // Blend distance controls how far skinning influence bleeds across
    // region boundaries.
    static SkinnedBody build(const BodyDims& dims, int mesh_resolution,
                             std::span<const Vec3> region_colors, double blend = 0.04);

    TriMesh posed_mesh(std::span<const RigidTransform> transforms) const;
};

} // namespace tcr
