/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/localiser.cpp
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
#include "shapewarp/localiser.hpp"

#include "shapewarp/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shapewarp {

namespace {

struct AdamState {
    Eigen::VectorXd m1, m2;
    explicit AdamState(Eigen::Index n)
        : m1(Eigen::VectorXd::Zero(n)), m2(Eigen::VectorXd::Zero(n)) {}

    // The comparatively large epsilon keeps converged parameters put: once
    // gradients vanish, updates scale with the gradient instead of drifting
    // at the step size.
    void step(Eigen::Map<Eigen::VectorXd> params, const Eigen::VectorXd& grad, double lr,
              double beta1, double beta2, int t) {
        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double bias1 = 1.0 - std::pow(beta1, t);
        const double bias2 = 1.0 - std::pow(beta2, t);
        params.array() -=
            lr * (m1.array() / bias1) / ((m2.array() / bias2).sqrt() + 1e-6);
    }
};

}  // namespace

Eigen::VectorXd ToyLocaliser::forward(const Eigen::VectorXd& input) const {
    const Eigen::VectorXd h1 = (w1 * input + b1).array().tanh();
    const Eigen::VectorXd h2 = (w2 * h1 + b2).array().tanh();
    return w3 * h2 + b3;
}

PoseShapeParams ToyLocaliser::predict(const Image& image) const {
    return PoseShapeParams::unpack(forward(downscale_to_input(image, input_size)));
}

Eigen::VectorXd ToyLocaliser::pack() const {
    Eigen::VectorXd out(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size());
    Eigen::Index off = 0;
    for (const Eigen::MatrixXd* m : {&w1, &w2, &w3}) {
        out.segment(off, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
        off += m->size();
    }
    for (const Eigen::VectorXd* v : {&b1, &b2, &b3}) {
        out.segment(off, v->size()) = *v;
        off += v->size();
    }
    return out;
}

void LocaliserConfig::validate() const {
    if (input_size < 4) throw std::invalid_argument("localiser input size too small");
    if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden sizes must be positive");
    if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be non-negative");
    if (epochs < 1 || batch_size < 1)
        throw std::invalid_argument("epochs and batch size must be positive");
}

Eigen::VectorXd downscale_to_input(const Image& image, int size) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size) * size);
    for (int a = 0; a < size; ++a) {
        const int r0 = a * image.height / size;
        const int r1 = std::max(r0 + 1, (a + 1) * image.height / size);
        for (int b = 0; b < size; ++b) {
            const int c0 = b * image.width / size;
            const int c1 = std::max(c0 + 1, (b + 1) * image.width / size);
            double sum = 0.0;
            for (int j = r0; j < r1; ++j)
                for (int k = c0; k < c1; ++k)
                    for (int c = 0; c < image.channels; ++c) sum += image.at(j, k, c);
            out(static_cast<Eigen::Index>(a) * size + b) =
                sum / (static_cast<double>(r1 - r0) * (c1 - c0) * image.channels);
        }
    }
    return out;
}

LocaliserTrainResult train_toy_localiser(const std::vector<SyntheticScene>& scenes,
                                         const MorphableModel& model,
                                         const LocaliserConfig& config) {
    config.validate();
    if (scenes.size() < 1) throw std::invalid_argument("training needs at least one scene");

    const int inputs = config.input_size * config.input_size;
    const int outputs = 6 + model.num_modes();
    Rng rng(config.seed);

    LocaliserTrainResult result;
    ToyLocaliser& net = result.localiser;
    net.input_size = config.input_size;
    auto init_layer = [&rng](Eigen::MatrixXd& w, Eigen::VectorXd& b, int rows, int cols,
                             double gain) {
        w.resize(rows, cols);
        const double scale = gain / std::sqrt(static_cast<double>(cols));
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
        b = Eigen::VectorXd::Zero(rows);
    };
    init_layer(net.w1, net.b1, config.hidden1, inputs, 1.0);
    init_layer(net.w2, net.b2, config.hidden2, config.hidden1, 1.0);
    init_layer(net.w3, net.b3, outputs, config.hidden2, config.output_gain);
    // Small outputs around a neutral pose. A raw zero bias would predict the
    // shape at pixel (0,0) with unit scale, from where the landmark loss
    // collapses the scale; bias the output layer at the mean landmark-box
    // pose of a few training scenes instead (zero rotation, zero shape).
    {
        Eigen::Vector2d translation = Eigen::Vector2d::Zero();
        double log_scale = 0.0;
        int used = 0;
        for (std::size_t s = 0; s < scenes.size() && used < 10; ++s) {
            try {
                const PoseShapeParams guess =
                    init_from_landmarks(scenes[s].landmarks, model);
                translation += guess.translation;
                log_scale += guess.log_scale;
                ++used;
            } catch (const std::invalid_argument&) {
                continue;  // too few confident landmarks in this scene
            }
        }
        if (used > 0) {
            net.b3(3) = translation.x() / used;
            net.b3(4) = translation.y() / used;
            net.b3(5) = log_scale / used;
        } else {
            net.b3(3) = (scenes.front().image.width + 1.0) / 2.0;
            net.b3(4) = (scenes.front().image.height + 1.0) / 2.0;
        }
    }

    std::vector<Eigen::VectorXd> cached_inputs;
    cached_inputs.reserve(scenes.size());
    for (const auto& scene : scenes)
        cached_inputs.push_back(downscale_to_input(scene.image, config.input_size));

    auto scene_loss_and_grad = [&](int index, Eigen::VectorXd* grad_output) {
        const Eigen::VectorXd& input = cached_inputs[index];
        const Eigen::VectorXd z1 = net.w1 * input + net.b1;
        const Eigen::VectorXd h1 = z1.array().tanh();
        const Eigen::VectorXd z2 = net.w2 * h1 + net.b2;
        const Eigen::VectorXd h2 = z2.array().tanh();
        const Eigen::VectorXd out = net.w3 * h2 + net.b3;
        const PoseShapeParams theta = PoseShapeParams::unpack(out);
        const FitLossResult loss = evaluate_fit_loss(scenes[index].image,
                                                     scenes[index].landmarks, model, theta,
                                                     config.weights);
        if (grad_output) *grad_output = loss.gradient.pack();
        return std::make_tuple(loss.total, h1, h2);
    };

    // Mean loss with the initial weights; the divergence guard and the
    // convergence contract are both relative to it.
    double initial = 0.0;
    for (std::size_t i = 0; i < scenes.size(); ++i)
        initial += std::get<0>(scene_loss_and_grad(static_cast<int>(i), nullptr));
    initial /= static_cast<double>(scenes.size());
    result.initial_loss = initial;

    AdamState adam_w1(net.w1.size()), adam_b1(net.b1.size());
    AdamState adam_w2(net.w2.size()), adam_b2(net.b2.size());
    AdamState adam_w3(net.w3.size()), adam_b3(net.b3.size());
    int step_count = 0;

    std::vector<int> order(scenes.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Deterministic Fisher-Yates shuffle.
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(0, i)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            Eigen::MatrixXd gw1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
            Eigen::MatrixXd gw2 = Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols());
            Eigen::MatrixXd gw3 = Eigen::MatrixXd::Zero(net.w3.rows(), net.w3.cols());
            Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(net.b1.size());
            Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(net.b2.size());
            Eigen::VectorXd gb3 = Eigen::VectorXd::Zero(net.b3.size());
            for (std::size_t s = start; s < stop; ++s) {
                const int index = order[s];
                Eigen::VectorXd grad_out;
                const auto [loss, h1, h2] = scene_loss_and_grad(index, &grad_out);
                epoch_loss += loss;
                if (!std::isfinite(loss) || loss > 1e3 * std::max(initial, 1e-300))
                    throw NumericalError("localiser training diverged at epoch " +
                                         std::to_string(epoch));
                gw3 += grad_out * h2.transpose();
                gb3 += grad_out;
                const Eigen::VectorXd dh2 = net.w3.transpose() * grad_out;
                const Eigen::VectorXd dz2 =
                    dh2.array() * (1.0 - h2.array().square());
                gw2 += dz2 * h1.transpose();
                gb2 += dz2;
                const Eigen::VectorXd dh1 = net.w2.transpose() * dz2;
                const Eigen::VectorXd dz1 =
                    dh1.array() * (1.0 - h1.array().square());
                gw1 += dz1 * cached_inputs[index].transpose();
                gb1 += dz1;
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            ++step_count;
            const double lr = config.learning_rate /
                              std::sqrt(1.0 + step_count / config.step_decay_iters);
            const double lr_last = lr * config.last_layer_lr_multiplier;
            auto flat = [](Eigen::MatrixXd& m) {
                return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
            };
            auto flat_v = [](Eigen::VectorXd& v) {
                return Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
            };
            adam_w1.step(flat(net.w1),
                         Eigen::Map<Eigen::VectorXd>(gw1.data(), gw1.size()) * inv, lr,
                         config.beta1, config.beta2, step_count);
            adam_b1.step(flat_v(net.b1), gb1 * inv, lr, config.beta1, config.beta2, step_count);
            adam_w2.step(flat(net.w2),
                         Eigen::Map<Eigen::VectorXd>(gw2.data(), gw2.size()) * inv, lr,
                         config.beta1, config.beta2, step_count);
            adam_b2.step(flat_v(net.b2), gb2 * inv, lr, config.beta1, config.beta2, step_count);
            adam_w3.step(flat(net.w3),
                         Eigen::Map<Eigen::VectorXd>(gw3.data(), gw3.size()) * inv, lr_last,
                         config.beta1, config.beta2, step_count);
            adam_b3.step(flat_v(net.b3), gb3 * inv, lr_last, config.beta1, config.beta2,
                         step_count);
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(scenes.size()));
    }
    return result;
}

}  // namespace shapewarp
