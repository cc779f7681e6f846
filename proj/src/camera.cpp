// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/camera.hpp"

#include "splatstyle/errors.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>

namespace splatstyle {

Eigen::Vector3d Camera::to_camera(const Eigen::Vector3d& world) const {
    return world_rotation() * (world - center());
}

Eigen::Vector3d Camera::to_world(const Eigen::Vector3d& camera) const { return rotation() * camera + center(); }

Eigen::Vector2d Camera::project(const Eigen::Vector3d& world, double* depth) const {
    const Eigen::Vector3d p = to_camera(world);
    const double d = -p.z();
    if (depth != nullptr) {
        *depth = d;
    }
    return {cx + fx * p.x() / d, cy - fy * p.y() / d};
}

Eigen::Vector3d Camera::unproject(double u, double v, double depth) const {
    const Eigen::Vector3d p((u - cx) * depth / fx, -(v - cy) * depth / fy, -depth);
    return to_world(p);
}

void Camera::validate() const {
    const Eigen::Matrix3d r = rotation();
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    const double det = r.determinant();
    std::ostringstream msg;
    if (!camera_to_world.allFinite()) {
        throw ValidationError("camera transform has non-finite entries");
    }
    if (ortho > 1e-4 || std::abs(det - 1.0) > 1e-4) {
        msg << "camera rotation is not a proper rotation (orthonormality error " << ortho << ", det " << det << ")";
        throw ValidationError(msg.str());
    }
    const Eigen::RowVector4d last = camera_to_world.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
        throw ValidationError("camera transform bottom row must be (0, 0, 0, 1)");
    }
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw ValidationError("focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw ValidationError("image size must be positive");
    }
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
        msg << "principal point (" << cx << ", " << cy << ") outside the " << width << "x" << height << " image";
        throw ValidationError(msg.str());
    }
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                       double focal, int width, int height) {
    const Eigen::Vector3d back = (eye - target).normalized();
    const Eigen::Vector3d right = up.cross(back).normalized();
    const Eigen::Vector3d true_up = back.cross(right);
    Camera cam;
    cam.camera_to_world.setIdentity();
    cam.camera_to_world.block<3, 1>(0, 0) = right;
    cam.camera_to_world.block<3, 1>(0, 1) = true_up;
    cam.camera_to_world.block<3, 1>(0, 2) = back;
    cam.camera_to_world.block<3, 1>(0, 3) = eye;
    cam.fx = focal;
    cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    return cam;
}

} // namespace splatstyle
