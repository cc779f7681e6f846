// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>

namespace splatstyle {

/// Pinhole camera. Right-handed camera frame: x right, y up, the camera looks down -z.
/// Pixel (0, 0) is the top-left pixel and its center sits at image coordinates (0.5, 0.5).
struct Camera {
    Eigen::Matrix4d camera_to_world = Eigen::Matrix4d::Identity();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    [[nodiscard]] Eigen::Matrix3d rotation() const { return camera_to_world.topLeftCorner<3, 3>(); }
    [[nodiscard]] Eigen::Vector3d center() const { return camera_to_world.topRightCorner<3, 1>(); }
    /// World-to-camera rotation (transpose of the camera-to-world block).
    [[nodiscard]] Eigen::Matrix3d world_rotation() const { return rotation().transpose(); }

    [[nodiscard]] Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const;
    [[nodiscard]] Eigen::Vector3d to_world(const Eigen::Vector3d& camera) const;

    /// Image-plane position (continuous pixel units) and positive depth along the view axis.
    /// Only meaningful for points with depth > 0.
    [[nodiscard]] Eigen::Vector2d project(const Eigen::Vector3d& world, double* depth = nullptr) const;
    /// World point at the given depth behind image position (u, v).
    [[nodiscard]] Eigen::Vector3d unproject(double u, double v, double depth) const;

    /// Throws ValidationError unless the rotation is orthonormal (1e-4) with determinant +1,
    /// focal lengths are positive and the principal point lies inside the image.
    void validate() const;

    /// Camera at `eye` looking at `target`, with `up` resolving the roll.
    static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                          double focal, int width, int height);
};

} // namespace splatstyle
