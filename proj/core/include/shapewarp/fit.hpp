/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/fit.hpp
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

#include "shapewarp/losses.hpp"
#include "shapewarp/model.hpp"
#include "shapewarp/sampler.hpp"
#include "shapewarp/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace shapewarp {

struct LossWeights {
    double landmark = 1.0;
    double symmetry = 0.1;
    double multiview = 0.1;
    double prior = 0.01;
};

enum class InitMode { zeros, landmark_box, explicit_theta };

/// Configuration of the first-order fitter. step_size is the initial Adam
/// step; it decays as 1/sqrt(1 + iter/step_decay_iters) so the iterates can
/// settle well below the step scale.
struct FitConfig {
    int max_iterations = 3000;
    double step_size = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double tolerance = 1e-10;           ///< relative loss decrease over 20 iterations
    double step_decay_iters = 100.0;
    LossWeights weights;
    InitMode init = InitMode::landmark_box;
    std::optional<PoseShapeParams> initial_theta;  ///< used by InitMode::explicit_theta

    void validate() const;
};

/// One trace row per iteration: component losses and the packed theta.
struct TraceRow {
    int iteration = 0;
    double total = 0.0;
    double landmark = 0.0;
    double symmetry = 0.0;
    double multiview = 0.0;
    double prior = 0.0;
    Eigen::VectorXd theta;
};

struct FitResult {
    PoseShapeParams theta;
    std::vector<TraceRow> trace;
    int iterations = 0;
    bool converged = false;
};

/// Rendered ground-truth scene: image, the pose/shape that produced it, and
/// landmark observations (occluded landmarks carry confidence 0).
struct SyntheticScene {
    Image image;
    PoseShapeParams true_theta;
    LandmarkSet landmarks;
};

/// Rasterises the deformed, posed model with a smooth bilaterally symmetric
/// procedural texture. Landmarks are the projected landmark vertices,
/// optionally perturbed by Gaussian noise of the given std; visibility comes
/// from the depth-query rasteriser. Deterministic per seed. Throws
/// std::invalid_argument when the shape leaves the image rectangle.
SyntheticScene render_synthetic_scene(const MorphableModel& model, const PoseShapeParams& theta,
                                      std::uint64_t texture_seed, int image_height,
                                      int image_width, double landmark_noise_std = 0.0);

/// Similarity initialisation from confident landmarks (>= 2 required):
/// r = 0, alpha = 0, scale from the bounding-box diagonal ratio, translation
/// from the centroid difference.
PoseShapeParams init_from_landmarks(const LandmarkSet& landmarks, const MorphableModel& model);

/// Total weighted loss at theta together with its theta gradient. The
/// multiview component compares the sample of `image` under theta with the
/// sample of the horizontally flipped image under reflect_params(theta).
struct FitLossResult {
    double total = 0.0;
    double landmark = 0.0;
    double symmetry = 0.0;
    double multiview = 0.0;
    double prior = 0.0;
    ThetaGradient gradient;
};

FitLossResult evaluate_fit_loss(const Image& image, const LandmarkSet& landmarks,
                                const MorphableModel& model, const PoseShapeParams& theta,
                                const LossWeights& weights);

/// Adaptive-moment gradient descent over theta. The trace records every
/// iteration; the loop stops at max_iterations or when the relative decrease
/// of the running-best loss over 20 iterations falls below tolerance.
/// Throws NumericalError (with the iteration index) on non-finite values.
FitResult fit_params(const Image& image, const LandmarkSet& landmarks,
                     const MorphableModel& model, const FitConfig& config);

/// Geodesic distance between two rotations, in radians.
double rotation_geodesic_angle(const Eigen::Vector3d& r_a, const Eigen::Vector3d& r_b);

}  // namespace shapewarp
