/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/losses.hpp
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

#include "shapewarp/image.hpp"
#include "shapewarp/model.hpp"
#include "shapewarp/sampler.hpp"
#include "shapewarp/types.hpp"

#include <filesystem>
#include <utility>
#include <vector>

namespace shapewarp {

/// Detected 2D landmarks with per-point confidences; invisible landmarks
/// carry confidence 0.
struct LandmarkSet {
    Eigen::Matrix2Xd points;       ///< source-image pixel positions
    Eigen::VectorXd confidences;   ///< non-negative weights

    int size() const { return static_cast<int>(points.cols()); }
    void validate() const;
};

/// Non-negative loss value plus the gradients it produces. Unused slots stay
/// empty (size 0); total_loss combines matching slots linearly.
struct LossValue {
    double value = 0.0;
    FlatImage grad_sampled;       ///< N x C, first sampled image
    FlatImage grad_sampled_b;     ///< N x C, second sampled image (multiview)
    SampleGrid grad_grid;         ///< 2 x N sample-grid gradient
    Eigen::VectorXd grad_alpha;   ///< D shape-coefficient gradient
};

/// Asymmetry of the sampled texture over jointly visible mirror pairs:
///   sum_i sum_c M_i M_sym(i) (V_i^c - V_sym(i)^c)^2.
/// The sum runs over all i, so each unordered pair is counted twice.
LossValue symmetry_loss(const FlatImage& sampled, const OcclusionMask& mask,
                        const std::vector<int>& sym_index);

/// Jointly visible squared differences of two sampled views; symmetric in
/// (A, B), with gradients to both images.
LossValue multiview_loss(const FlatImage& sampled_a, const OcclusionMask& mask_a,
                         const FlatImage& sampled_b, const OcclusionMask& mask_b);

/// Parameters that generate the horizontally reflected view of the same
/// scene: r -> (r1, -r2, -r3), t_x -> W + 1 - t_x, and alpha mapped through
/// the basis symmetry signs. An involution.
PoseShapeParams reflect_params(const PoseShapeParams& theta, double image_width,
                               const std::vector<int>& symmetry_sign);

/// Pulls a gradient on reflect_params output back to theta (the map is
/// affine with a diagonal linear part, so this is the same sign pattern).
ThetaGradient reflect_params_backward(const ThetaGradient& grad_reflected,
                                      const std::vector<int>& symmetry_sign);

/// Weighted Euclidean landmark loss sum_i c_i |Y''_sel(i) - l_i|^2 over the
/// model's landmark vertices.
LossValue landmark_loss(const SampleGrid& grid, const MorphableModel& model,
                        const LandmarkSet& landmarks);

/// |alpha|^2 with gradient 2 alpha.
LossValue prior_loss(const Eigen::VectorXd& alpha);

/// Weighted sum of loss components; values and gradients combine linearly.
/// Weights must be non-negative.
LossValue total_loss(const std::vector<std::pair<LossValue, double>>& components);

/// Landmark text files: one record per landmark, "index x y confidence"
/// (1-based indices). Missing records imply confidence 0.
LandmarkSet read_landmarks(const std::filesystem::path& path, int expected_count);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);

}  // namespace shapewarp
