/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/transform.cpp
 *
 * Copyright 2026 The shapewarp authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "shapewarp/transform.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace shapewarp {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& a) {
    Eigen::Matrix3d m;
    m << 0.0, -a.z(), a.y(),
         a.z(), 0.0, -a.x(),
         -a.y(), a.x(), 0.0;
    return m;
}

RotationMatrix axis_angle_to_matrix(const Eigen::Vector3d& r) {
    const double angle = r.norm();
    if (angle < kZeroRotationThreshold) return RotationMatrix::Identity();
    const Eigen::Vector3d axis = r / angle;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return c * Eigen::Matrix3d::Identity() + s * cross_matrix(axis) +
           (1.0 - c) * (axis * axis.transpose());
}

std::array<Eigen::Matrix3d, 3> axis_angle_jacobian(const Eigen::Vector3d& r) {
    std::array<Eigen::Matrix3d, 3> jac;
    const double angle = r.norm();
    if (angle < kZeroRotationThreshold) {
        for (int i = 0; i < 3; ++i) jac[i] = cross_matrix(Eigen::Vector3d::Unit(i));
        return jac;
    }
    const RotationMatrix rotation = axis_angle_to_matrix(r);
    const Eigen::Matrix3d rx = cross_matrix(r);
    const Eigen::Matrix3d eye_minus_r = Eigen::Matrix3d::Identity() - rotation;
    const double sq = angle * angle;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d v = r.cross(eye_minus_r.col(i));
        jac[i] = ((r(i) * rx + cross_matrix(v)) / sq) * rotation;
    }
    return jac;
}

ShapeInstance rotate_points(const RotationMatrix& rotation, const ShapeInstance& points) {
    return rotation * points;
}

std::pair<Eigen::Matrix3d, ShapeInstance> rotate_points_backward(const RotationMatrix& rotation,
                                                                 const ShapeInstance& points,
                                                                 const ShapeInstance& grad_out) {
    if (grad_out.cols() != points.cols())
        throw std::invalid_argument("rotate_points_backward: gradient shape mismatch");
    return {grad_out * points.transpose(), rotation.transpose() * grad_out};
}

SampleGrid project_ortho(const ShapeInstance& points) { return points.topRows<2>(); }

ShapeInstance project_ortho_backward(const SampleGrid& grad_out) {
    ShapeInstance grad = ShapeInstance::Zero(3, grad_out.cols());
    grad.topRows<2>() = grad_out;
    return grad;
}

double exp_scale(double log_scale) { return std::exp(log_scale); }

SampleGrid scale_points(double scale, const SampleGrid& points) {
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    return scale * points;
}

std::pair<double, SampleGrid> scale_points_backward(double scale, const SampleGrid& points,
                                                    const SampleGrid& grad_out) {
    if (grad_out.cols() != points.cols())
        throw std::invalid_argument("scale_points_backward: gradient shape mismatch");
    const double grad_scale = (grad_out.array() * points.array()).sum();
    return {grad_scale, scale * grad_out};
}

SampleGrid translate_points(const Eigen::Vector2d& translation, const SampleGrid& points) {
    return points.colwise() + translation;
}

std::pair<Eigen::Vector2d, SampleGrid> translate_points_backward(const SampleGrid& grad_out) {
    return {grad_out.rowwise().sum(), grad_out};
}

SampleGrid grid_generate(const MorphableModel& model, const PoseShapeParams& theta) {
    return grid_generate_cached(model, theta).points;
}

GridGenCache grid_generate_cached(const MorphableModel& model, const PoseShapeParams& theta) {
    GridGenCache cache;
    cache.shape = synthesize_shape(model, theta.alpha);
    cache.rotation = axis_angle_to_matrix(theta.rotation);
    cache.rotated = rotate_points(cache.rotation, cache.shape);
    cache.projected = project_ortho(cache.rotated);
    cache.scale = exp_scale(theta.log_scale);
    cache.points = translate_points(theta.translation, scale_points(cache.scale, cache.projected));
    return cache;
}

ThetaGradient grid_generate_backward(const MorphableModel& model, const PoseShapeParams& theta,
                                     const GridGenCache& cache, const SampleGrid& grad_points) {
    if (grad_points.cols() != model.num_vertices())
        throw std::invalid_argument("grid_generate_backward: gradient shape mismatch");
    ThetaGradient grad;

    auto [grad_t, grad_scaled] = translate_points_backward(grad_points);
    grad.translation = grad_t;

    auto [grad_scale, grad_projected] = scale_points_backward(cache.scale, cache.projected,
                                                              grad_scaled);
    grad.log_scale = grad_scale * cache.scale;  // chain through s = exp(logs)

    const ShapeInstance grad_rotated = project_ortho_backward(grad_projected);
    auto [grad_rotation, grad_shape] = rotate_points_backward(cache.rotation, cache.shape,
                                                              grad_rotated);
    grad.alpha = shape_backward(model, grad_shape);

    const auto jac = axis_angle_jacobian(theta.rotation);
    for (int i = 0; i < 3; ++i)
        grad.rotation(i) = (grad_rotation.array() * jac[i].array()).sum();
    return grad;
}

}  // namespace shapewarp
