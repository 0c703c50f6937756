/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/localiser.hpp
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

#include "shapewarp/fit.hpp"

#include <cstdint>
#include <vector>

namespace shapewarp {

/// Two-hidden-layer fully connected regressor on a downscaled grayscale
/// input, predicting the packed pose/shape vector. The output layer is
/// initialised with a small gain so initial rotations stay near zero.
struct ToyLocaliser {
    int input_size = 32;
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
    PoseShapeParams predict(const Image& image) const;

    /// Flattened weights, useful for bit-exact comparisons.
    Eigen::VectorXd pack() const;
};

struct LocaliserConfig {
    int input_size = 32;
    int hidden1 = 256;
    int hidden2 = 64;
    double output_gain = 1e-2;
    double learning_rate = 1e-3;
    double last_layer_lr_multiplier = 1.0;  ///< exposed, no convergence claim
    double step_decay_iters = 500.0;        ///< inverse-sqrt step decay horizon
    double beta1 = 0.9;
    double beta2 = 0.999;
    int epochs = 50;
    int batch_size = 8;
    std::uint64_t seed = 1;
    LossWeights weights;

    void validate() const;
};

struct LocaliserTrainResult {
    ToyLocaliser localiser;
    double initial_loss = 0.0;          ///< mean scene loss before training
    std::vector<double> epoch_losses;   ///< mean scene loss per epoch
};

/// Area-averaged grayscale downscale to size x size, flattened row-major.
Eigen::VectorXd downscale_to_input(const Image& image, int size);

/// Trains the regressor end to end through the grid generator, sampler and
/// geometric losses. Deterministic per config.seed. Throws NumericalError if
/// the loss diverges past 1e3 times the initial loss.
LocaliserTrainResult train_toy_localiser(const std::vector<SyntheticScene>& scenes,
                                         const MorphableModel& model,
                                         const LocaliserConfig& config);

}  // namespace shapewarp
