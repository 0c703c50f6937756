/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/transform.hpp
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
#pragma once

#include "shapewarp/model.hpp"
#include "shapewarp/types.hpp"

#include <array>
#include <utility>

namespace shapewarp {

/// Below this rotation magnitude the Rodrigues derivative switches to its
/// exact r = 0 limit; the general formula divides by |r|^2 and loses all
/// precision there.
constexpr double kZeroRotationThreshold = 1e-12;

/// [a]x, the 3x3 cross-product matrix of a.
Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& a);

/// Rodrigues rotation: cos(t) I + sin(t) [r^]x + (1 - cos(t)) r^ r^T with
/// t = |r|. Returns the identity for |r| = 0.
RotationMatrix axis_angle_to_matrix(const Eigen::Vector3d& r);

/// Partial derivatives dR/dr_i, i = 0..2. At r = 0 these are exactly the
/// cross-product matrices [e_i]x; elsewhere the closed form
/// (r_i [r]x + [r x (I - R) e_i]x) / |r|^2 * R.
std::array<Eigen::Matrix3d, 3> axis_angle_jacobian(const Eigen::Vector3d& r);

/// X' = R X.
ShapeInstance rotate_points(const RotationMatrix& rotation, const ShapeInstance& points);

/// Adjoints of rotate_points: (grad wrt R, grad wrt X) = (G X^T, R^T G).
std::pair<Eigen::Matrix3d, ShapeInstance> rotate_points_backward(const RotationMatrix& rotation,
                                                                 const ShapeInstance& points,
                                                                 const ShapeInstance& grad_out);

/// Orthographic projection along +z: keeps rows 1-2, drops row 3.
SampleGrid project_ortho(const ShapeInstance& points);

/// Scatters a 2xN gradient into rows 1-2 of a 3xN gradient, zero in row 3.
ShapeInstance project_ortho_backward(const SampleGrid& grad_out);

/// s = exp(logs); ds/dlogs = s.
double exp_scale(double log_scale);

/// Y' = s Y, s > 0.
SampleGrid scale_points(double scale, const SampleGrid& points);

/// Adjoints of scale_points: grad wrt s = <G, Y>, grad wrt Y = s G.
std::pair<double, SampleGrid> scale_points_backward(double scale, const SampleGrid& points,
                                                    const SampleGrid& grad_out);

/// Y'' = Y' + t broadcast over columns.
SampleGrid translate_points(const Eigen::Vector2d& translation, const SampleGrid& points);

/// Adjoints of translate_points: grad wrt t = row sums of G, grad wrt Y' = G.
std::pair<Eigen::Vector2d, SampleGrid> translate_points_backward(const SampleGrid& grad_out);

/// Forward intermediates of the grid-generator chain, kept for the backward
/// pass.
struct GridGenCache {
    ShapeInstance shape;       ///< X(alpha)
    RotationMatrix rotation;   ///< R(r)
    ShapeInstance rotated;     ///< R X
    SampleGrid projected;      ///< P R X
    double scale = 1.0;        ///< exp(logs)
    SampleGrid points;         ///< final sample grid Y''
};

/// Full chain: translate(t, scale(exp(logs), project(rotate(R(r), X(alpha))))).
SampleGrid grid_generate(const MorphableModel& model, const PoseShapeParams& theta);

GridGenCache grid_generate_cached(const MorphableModel& model, const PoseShapeParams& theta);

/// Pulls a gradient on the sample grid back to every component of theta.
ThetaGradient grid_generate_backward(const MorphableModel& model, const PoseShapeParams& theta,
                                     const GridGenCache& cache, const SampleGrid& grad_points);

}  // namespace shapewarp
