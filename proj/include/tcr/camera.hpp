#pragma once

#include "tcr/vec3.hpp"

namespace tcr {

// Pinhole camera. Camera frame: +z forward along the optical axis, +x
// right, +y down, matching image rows growing downward. Pixel coordinates
// are continuous with pixel (i,j) centered at (i,j); the principal point
// defaults to the image center (w-1)/2, (h-1)/2.
struct Camera {
    double fx = 1, fy = 1;
    double cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rotation;    // world -> camera
    Vec3 translation; // world -> camera
    double near_depth = 0.01, far_depth = 100.0;

    Camera() = default;
    Camera(double fx_, double fy_, double cx_, double cy_, int w, int h, Mat3 r, Vec3 t,
           double near_d, double far_d);

    Vec3 to_camera(const Vec3& X) const { return rotation * X + translation; }
    double depth_of(const Vec3& X) const { return to_camera(X).z; }

    struct Projection {
        double px = 0, py = 0;
        double depth = 0;
    };

    // Continuous pixel coordinate and depth along the optical axis.
    // Throws GeometryError for points at or behind the near plane.
    Projection project(const Vec3& X) const;

    // Inverse of project: the world point on the pixel ray at given depth.
    Vec3 backproject(double px, double py, double depth) const;

    // Normalized depth (depth-near)/(far-near), clamped to [0,1].
    double normalized_depth(double depth) const;

    // Camera on the sphere around `target`, looking at it, world +y up.
    static Camera look_at(const Vec3& eye, const Vec3& target, double fx, double fy, int w, int h,
                          double near_d, double far_d);
};

} // namespace tcr
