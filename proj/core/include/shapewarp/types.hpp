/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/types.hpp
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

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace shapewarp {

/// 3xN vertex positions, one column per vertex, in model units.
using ShapeInstance = Eigen::Matrix3Xd;

/// 3x3 rotation matrix (orthonormal, det +1).
using RotationMatrix = Eigen::Matrix3d;

/// 2xN per-vertex sample coordinates in source-image pixel space.
/// Pixel centres sit on integer coordinates, (1,1) is the top-left pixel,
/// x runs along columns and y increases downward.
using SampleGrid = Eigen::Matrix2Xd;

/// Pose and shape parameter vector theta = (r, t, logs, alpha).
///
/// rotation is an axis-angle vector (angle = |r|, axis = r/|r|), translation
/// is in source-image pixels, log_scale is the natural log of the
/// pixels-per-model-unit factor and alpha holds the shape coefficients.
struct PoseShapeParams {
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    double log_scale = 0.0;
    Eigen::VectorXd alpha;

    /// Packs theta into a flat vector [r(3), t(2), logs, alpha(D)].
    Eigen::VectorXd pack() const;
    static PoseShapeParams unpack(const Eigen::VectorXd& packed);

    int num_coefficients() const { return static_cast<int>(alpha.size()); }
};

/// Gradient of a scalar loss with respect to every component of theta.
/// Shares the packing layout of PoseShapeParams.
struct ThetaGradient {
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    double log_scale = 0.0;
    Eigen::VectorXd alpha;

    Eigen::VectorXd pack() const;
    static ThetaGradient unpack(const Eigen::VectorXd& packed);

    ThetaGradient& operator+=(const ThetaGradient& other);
};

/// Thrown when a linear solve or an optimisation loop fails numerically.
/// Input-contract violations throw std::invalid_argument instead.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline Eigen::VectorXd PoseShapeParams::pack() const {
    Eigen::VectorXd out(6 + alpha.size());
    out.segment<3>(0) = rotation;
    out.segment<2>(3) = translation;
    out(5) = log_scale;
    if (alpha.size() > 0) out.tail(alpha.size()) = alpha;
    return out;
}

inline PoseShapeParams PoseShapeParams::unpack(const Eigen::VectorXd& packed) {
    if (packed.size() < 6) throw std::invalid_argument("packed theta must have at least 6 entries");
    PoseShapeParams p;
    p.rotation = packed.segment<3>(0);
    p.translation = packed.segment<2>(3);
    p.log_scale = packed(5);
    p.alpha = packed.tail(packed.size() - 6);
    return p;
}

inline Eigen::VectorXd ThetaGradient::pack() const {
    Eigen::VectorXd out(6 + alpha.size());
    out.segment<3>(0) = rotation;
    out.segment<2>(3) = translation;
    out(5) = log_scale;
    if (alpha.size() > 0) out.tail(alpha.size()) = alpha;
    return out;
}

inline ThetaGradient ThetaGradient::unpack(const Eigen::VectorXd& packed) {
    if (packed.size() < 6) throw std::invalid_argument("packed gradient must have at least 6 entries");
    ThetaGradient g;
    g.rotation = packed.segment<3>(0);
    g.translation = packed.segment<2>(3);
    g.log_scale = packed(5);
    g.alpha = packed.tail(packed.size() - 6);
    return g;
}

inline ThetaGradient& ThetaGradient::operator+=(const ThetaGradient& other) {
    rotation += other.rotation;
    translation += other.translation;
    log_scale += other.log_scale;
    if (alpha.size() == 0) {
        alpha = other.alpha;
    } else if (other.alpha.size() > 0) {
        if (alpha.size() != other.alpha.size())
            throw std::invalid_argument("theta gradient coefficient counts differ");
        alpha += other.alpha;
    }
    return *this;
}

}  // namespace shapewarp
