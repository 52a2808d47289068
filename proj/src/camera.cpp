#include "tcr/camera.hpp"

#include "tcr/error.hpp"

namespace tcr {

Camera::Camera(double fx_, double fy_, double cx_, double cy_, int w, int h, Mat3 r, Vec3 t,
               double near_d, double far_d)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h), rotation(r), translation(t),
      near_depth(near_d), far_depth(far_d) {
    if (width <= 0 || height <= 0) throw GeometryError("camera image size must be positive");
    if (fx <= 0 || fy <= 0) throw GeometryError("camera focal length must be positive");
    if (!(near_depth > 0) || !(far_depth > near_depth))
        throw GeometryError("camera depth range must satisfy 0 < near < far");
    if (rotation.orthonormality_error() > 1e-9)
        throw GeometryError("camera rotation is not orthonormal");
}

Camera::Projection Camera::project(const Vec3& X) const {
    Vec3 c = to_camera(X);
    if (c.z <= near_depth)
        throw GeometryError("point outside the camera frustum (behind the near plane)");
    return {cx + fx * c.x / c.z, cy + fy * c.y / c.z, c.z};
}

Vec3 Camera::backproject(double px, double py, double depth) const {
    Vec3 c{(px - cx) / fx * depth, (py - cy) / fy * depth, depth};
    return rotation.transposed() * (c - translation);
}

double Camera::normalized_depth(double depth) const {
    double d = (depth - near_depth) / (far_depth - near_depth);
    return d < 0.0 ? 0.0 : (d > 1.0 ? 1.0 : d);
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, double fx, double fy, int w, int h,
                       double near_d, double far_d) {
    Vec3 forward = normalized(target - eye);
    Vec3 world_up{0, 1, 0};
    Vec3 right = cross(forward, world_up);
    if (norm(right) < 1e-9) right = cross(forward, Vec3{1, 0, 0});
    right = normalized(right);
    Vec3 down = cross(forward, right); // +y down in camera frame
    Mat3 r;
    r.m = {right.x,   right.y,   right.z,
           down.x,    down.y,    down.z,
           forward.x, forward.y, forward.z};
    Vec3 t = -(r * eye);
    return Camera(fx, fy, (w - 1) * 0.5, (h - 1) * 0.5, w, h, r, t, near_d, far_d);
}

} // namespace tcr
