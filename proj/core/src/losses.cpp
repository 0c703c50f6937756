/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/losses.cpp
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
#include "shapewarp/losses.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace shapewarp {

void LandmarkSet::validate() const {
    if (confidences.size() != points.cols())
        throw std::invalid_argument("landmark confidences must match point count");
    if ((confidences.array() < 0.0).any())
        throw std::invalid_argument("landmark confidences must be non-negative");
}

LossValue symmetry_loss(const FlatImage& sampled, const OcclusionMask& mask,
                        const std::vector<int>& sym_index) {
    const int n = static_cast<int>(sampled.rows());
    if (mask.size() != n || static_cast<int>(sym_index.size()) != n)
        throw std::invalid_argument("symmetry_loss: shape mismatch");
    LossValue out;
    out.grad_sampled = FlatImage::Zero(sampled.rows(), sampled.cols());
    for (int i = 0; i < n; ++i) {
        const int j = sym_index[i];
        const double joint = static_cast<double>(mask.bits[i]) * mask.bits[j];
        if (joint == 0.0) continue;
        for (int c = 0; c < sampled.cols(); ++c) {
            const double diff = sampled(i, c) - sampled(j, c);
            out.value += joint * diff * diff;
            // Term i contributes both to V_i and, mirrored, to V_sym(i); the
            // sum over all i yields 4 M M (V_i - V_sym) in total per pair.
            out.grad_sampled(i, c) += 2.0 * joint * diff;
            out.grad_sampled(j, c) -= 2.0 * joint * diff;
        }
    }
    return out;
}

LossValue multiview_loss(const FlatImage& sampled_a, const OcclusionMask& mask_a,
                         const FlatImage& sampled_b, const OcclusionMask& mask_b) {
    if (sampled_a.rows() != sampled_b.rows() || sampled_a.cols() != sampled_b.cols() ||
        mask_a.size() != sampled_a.rows() || mask_b.size() != sampled_b.rows())
        throw std::invalid_argument("multiview_loss: shape mismatch");
    LossValue out;
    out.grad_sampled = FlatImage::Zero(sampled_a.rows(), sampled_a.cols());
    out.grad_sampled_b = FlatImage::Zero(sampled_a.rows(), sampled_a.cols());
    for (int i = 0; i < sampled_a.rows(); ++i) {
        const double joint = static_cast<double>(mask_a.bits[i]) * mask_b.bits[i];
        if (joint == 0.0) continue;
        for (int c = 0; c < sampled_a.cols(); ++c) {
            const double diff = sampled_a(i, c) - sampled_b(i, c);
            out.value += joint * diff * diff;
            out.grad_sampled(i, c) = 2.0 * joint * diff;
            out.grad_sampled_b(i, c) = -2.0 * joint * diff;
        }
    }
    return out;
}

PoseShapeParams reflect_params(const PoseShapeParams& theta, double image_width,
                               const std::vector<int>& symmetry_sign) {
    if (static_cast<int>(symmetry_sign.size()) != theta.alpha.size())
        throw std::invalid_argument("reflect_params: symmetry sign count mismatch");
    PoseShapeParams out = theta;
    out.rotation(1) = -theta.rotation(1);
    out.rotation(2) = -theta.rotation(2);
    out.translation(0) = image_width + 1.0 - theta.translation(0);
    for (int k = 0; k < theta.alpha.size(); ++k)
        if (symmetry_sign[k] < 0) out.alpha(k) = -theta.alpha(k);
    return out;
}

ThetaGradient reflect_params_backward(const ThetaGradient& grad_reflected,
                                      const std::vector<int>& symmetry_sign) {
    if (static_cast<int>(symmetry_sign.size()) != grad_reflected.alpha.size())
        throw std::invalid_argument("reflect_params_backward: symmetry sign count mismatch");
    ThetaGradient out = grad_reflected;
    out.rotation(1) = -grad_reflected.rotation(1);
    out.rotation(2) = -grad_reflected.rotation(2);
    out.translation(0) = -grad_reflected.translation(0);
    for (int k = 0; k < grad_reflected.alpha.size(); ++k)
        if (symmetry_sign[k] < 0) out.alpha(k) = -grad_reflected.alpha(k);
    return out;
}

LossValue landmark_loss(const SampleGrid& grid, const MorphableModel& model,
                        const LandmarkSet& landmarks) {
    landmarks.validate();
    if (landmarks.size() != model.num_landmarks())
        throw std::invalid_argument("landmark_loss: landmark count mismatch");
    if (grid.cols() != model.num_vertices())
        throw std::invalid_argument("landmark_loss: grid size mismatch");
    LossValue out;
    out.grad_grid = SampleGrid::Zero(2, grid.cols());
    for (int i = 0; i < landmarks.size(); ++i) {
        const double c = landmarks.confidences(i);
        if (c == 0.0) continue;
        const int v = model.landmark_indices[i];
        const Eigen::Vector2d residual = grid.col(v) - landmarks.points.col(i);
        out.value += c * residual.squaredNorm();
        out.grad_grid.col(v) += 2.0 * c * residual;
    }
    return out;
}

LossValue prior_loss(const Eigen::VectorXd& alpha) {
    LossValue out;
    out.value = alpha.squaredNorm();
    out.grad_alpha = 2.0 * alpha;
    return out;
}

namespace {

void accumulate(FlatImage& into, const FlatImage& term, double weight) {
    if (term.size() == 0) return;
    if (into.size() == 0)
        into = weight * term;
    else
        into += weight * term;
}

void accumulate(Eigen::VectorXd& into, const Eigen::VectorXd& term, double weight) {
    if (term.size() == 0) return;
    if (into.size() == 0)
        into = weight * term;
    else
        into += weight * term;
}

}  // namespace

LossValue total_loss(const std::vector<std::pair<LossValue, double>>& components) {
    LossValue out;
    Eigen::MatrixXd grad_grid_acc;
    for (const auto& [component, weight] : components) {
        if (weight < 0.0) throw std::invalid_argument("total_loss: weights must be non-negative");
        out.value += weight * component.value;
        accumulate(out.grad_sampled, component.grad_sampled, weight);
        accumulate(out.grad_sampled_b, component.grad_sampled_b, weight);
        accumulate(grad_grid_acc, component.grad_grid, weight);
        accumulate(out.grad_alpha, component.grad_alpha, weight);
    }
    if (grad_grid_acc.size() > 0) out.grad_grid = grad_grid_acc;
    return out;
}

LandmarkSet read_landmarks(const std::filesystem::path& path, int expected_count) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open landmark file: " + path.string());
    LandmarkSet set;
    set.points = Eigen::Matrix2Xd::Zero(2, expected_count);
    set.confidences = Eigen::VectorXd::Zero(expected_count);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        int index;
        double x, y, confidence;
        if (!(row >> index >> x >> y >> confidence))
            throw std::invalid_argument("malformed landmark record: " + line);
        if (index < 1 || index > expected_count)
            throw std::invalid_argument("landmark index out of range in " + path.string());
        set.points(0, index - 1) = x;
        set.points(1, index - 1) = y;
        set.confidences(index - 1) = confidence;
    }
    set.validate();
    return set;
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write landmark file: " + path.string());
    out.precision(17);
    for (int i = 0; i < landmarks.size(); ++i)
        out << (i + 1) << ' ' << landmarks.points(0, i) << ' ' << landmarks.points(1, i) << ' '
            << landmarks.confidences(i) << '\n';
}

}  // namespace shapewarp
