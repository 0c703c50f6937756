/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/fit.cpp
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
#include "shapewarp/fit.hpp"

#include "shapewarp/random.hpp"
#include "shapewarp/raster.hpp"
#include "shapewarp/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapewarp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Smooth procedural texture, exactly even in the mirrored grid coordinate
// (right half copied from the left), normalised to [0.05, 0.95].
Eigen::VectorXd symmetric_texture(const MorphableModel& model, std::uint64_t seed) {
    const int h = model.grid_height, w = model.grid_width;
    Rng rng(seed);
    double amp[3], freq_u[3], freq_v[3], phase[3];
    for (int m = 0; m < 3; ++m) {
        amp[m] = rng.uniform(0.10, 0.30);
        freq_u[m] = 1 + rng.uniform_int(0, 2);
        freq_v[m] = 1 + rng.uniform_int(0, 2);
        phase[m] = rng.uniform(0.0, 2.0 * kPi);
    }
    Eigen::VectorXd tex(h * w);
    for (int a = 0; a < h; ++a) {
        const double v = static_cast<double>(2 * a - (h - 1)) / (h - 1);
        for (int b = 0; b < w; ++b) {
            const int idx = a * w + b;
            const int mb = w - 1 - b;
            if (b > mb) {
                tex(idx) = tex(a * w + mb);
                continue;
            }
            const double u = static_cast<double>(2 * b - (w - 1)) / (w - 1);
            double value = 0.0;
            for (int m = 0; m < 3; ++m)
                value += amp[m] * std::cos(freq_u[m] * kPi * u) *
                         std::cos(freq_v[m] * kPi * v + phase[m]);
            tex(idx) = value;
        }
    }
    const double lo = tex.minCoeff();
    const double hi = tex.maxCoeff();
    const double span = hi - lo;
    if (span < 1e-12) return Eigen::VectorXd::Constant(h * w, 0.5);
    return (0.05 + 0.9 * (tex.array() - lo) / span).matrix();
}

// Appends fan-centre attributes for the symmetric triangulation.
template <typename Derived>
Eigen::MatrixXd extend_columns(const Eigen::MatrixBase<Derived>& values,
                               const SymmetricTriangulation& triangulation) {
    Eigen::MatrixXd out(values.rows(), triangulation.num_vertices());
    out.leftCols(values.cols()) = values;
    for (std::size_t q = 0; q < triangulation.extra_quads.size(); ++q) {
        const auto& quad = triangulation.extra_quads[q];
        out.col(triangulation.num_grid_vertices + static_cast<int>(q)) =
            ((values.col(quad[0]) + values.col(quad[1])) +
             (values.col(quad[2]) + values.col(quad[3]))) /
            4.0;
    }
    return out;
}

std::vector<std::uint8_t> scene_vertex_visibility(const MorphableModel& model,
                                                  const GridGenCache& cache) {
    const SymmetricTriangulation tri =
        symmetric_grid_triangulation(model.grid_height, model.grid_width);
    const Eigen::MatrixXd projected = extend_columns(cache.projected, tri);
    const Eigen::MatrixXd depth_rows = extend_columns(cache.rotated.row(2), tri);
    const Eigen::VectorXd depth = depth_rows.transpose();
    const auto visible = zbuffer_vertex_visibility(projected, depth, tri.triangles,
                                                   model.grid_height, model.grid_width);
    return {visible.begin(), visible.begin() + model.num_vertices()};
}

}  // namespace

void FitConfig::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
    if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("moment decay rates must lie in [0, 1)");
    if (weights.landmark < 0.0 || weights.symmetry < 0.0 || weights.multiview < 0.0 ||
        weights.prior < 0.0)
        throw std::invalid_argument("loss weights must be non-negative");
    if (init == InitMode::explicit_theta && !initial_theta)
        throw std::invalid_argument("explicit initialisation requires initial_theta");
}

SyntheticScene render_synthetic_scene(const MorphableModel& model, const PoseShapeParams& theta,
                                      std::uint64_t texture_seed, int image_height,
                                      int image_width, double landmark_noise_std) {
    if (image_height < 2 || image_width < 2)
        throw std::invalid_argument("scene image dimensions too small");
    if (landmark_noise_std < 0.0)
        throw std::invalid_argument("landmark noise std must be non-negative");
    const GridGenCache cache = grid_generate_cached(model, theta);

    const double min_x = cache.points.row(0).minCoeff();
    const double max_x = cache.points.row(0).maxCoeff();
    const double min_y = cache.points.row(1).minCoeff();
    const double max_y = cache.points.row(1).maxCoeff();
    if (min_x < 1.0 || max_x > image_width || min_y < 1.0 || max_y > image_height)
        throw std::invalid_argument("pose places the shape outside the image");

    const Eigen::VectorXd texture = symmetric_texture(model, texture_seed);

    const SymmetricTriangulation tri =
        symmetric_grid_triangulation(model.grid_height, model.grid_width);
    const Eigen::MatrixXd screen = extend_columns(cache.points, tri);
    const Eigen::MatrixXd depth_rows = extend_columns(cache.rotated.row(2), tri);
    const Eigen::MatrixXd colors_rows = extend_columns(texture.transpose(), tri);

    SyntheticScene scene;
    scene.true_theta = theta;
    scene.image = rasterize_zbuffer(screen, depth_rows.transpose(), colors_rows.transpose(),
                                    tri.triangles, image_height, image_width);

    const auto visible = scene_vertex_visibility(model, cache);
    const int num_landmarks = model.num_landmarks();
    scene.landmarks.points.resize(2, num_landmarks);
    scene.landmarks.confidences.resize(num_landmarks);
    Rng noise_rng(texture_seed ^ 0x9e3779b97f4a7c15ull);
    for (int i = 0; i < num_landmarks; ++i) {
        const int v = model.landmark_indices[i];
        const double nx = noise_rng.normal();
        const double ny = noise_rng.normal();
        scene.landmarks.points(0, i) = cache.points(0, v) + landmark_noise_std * nx;
        scene.landmarks.points(1, i) = cache.points(1, v) + landmark_noise_std * ny;
        scene.landmarks.confidences(i) = visible[v] ? 1.0 : 0.0;
    }
    return scene;
}

PoseShapeParams init_from_landmarks(const LandmarkSet& landmarks, const MorphableModel& model) {
    landmarks.validate();
    if (landmarks.size() != model.num_landmarks())
        throw std::invalid_argument("landmark count does not match the model");
    std::vector<int> confident;
    for (int i = 0; i < landmarks.size(); ++i)
        if (landmarks.confidences(i) > 0.0) confident.push_back(i);
    if (confident.size() < 2)
        throw std::invalid_argument("need at least two confident landmarks to initialise");

    Eigen::Matrix2Xd observed(2, confident.size());
    Eigen::Matrix2Xd reference(2, confident.size());
    for (std::size_t i = 0; i < confident.size(); ++i) {
        const int lm = confident[i];
        observed.col(i) = landmarks.points.col(lm);
        const int v = model.landmark_indices[lm];
        reference(0, i) = model.mean_shape(3 * v + 0);
        reference(1, i) = model.mean_shape(3 * v + 1);
    }
    const double observed_diag =
        (observed.rowwise().maxCoeff() - observed.rowwise().minCoeff()).norm();
    const double reference_diag =
        (reference.rowwise().maxCoeff() - reference.rowwise().minCoeff()).norm();
    if (reference_diag <= 0.0 || observed_diag <= 0.0)
        throw std::invalid_argument("landmarks are degenerate, cannot estimate scale");
    const double scale = observed_diag / reference_diag;

    PoseShapeParams theta;
    theta.alpha = Eigen::VectorXd::Zero(model.num_modes());
    theta.log_scale = std::log(scale);
    theta.translation = observed.rowwise().mean() - scale * reference.rowwise().mean();
    return theta;
}

FitLossResult evaluate_fit_loss(const Image& image, const LandmarkSet& landmarks,
                                const MorphableModel& model, const PoseShapeParams& theta,
                                const LossWeights& weights) {
    FitLossResult result;
    result.gradient.alpha = Eigen::VectorXd::Zero(model.num_modes());

    const GridGenCache cache = grid_generate_cached(model, theta);
    SampleGrid grad_grid = SampleGrid::Zero(2, model.num_vertices());
    bool any_grid_grad = false;

    if (weights.landmark > 0.0) {
        const LossValue lv = landmark_loss(cache.points, model, landmarks);
        result.landmark = lv.value;
        grad_grid += weights.landmark * lv.grad_grid;
        any_grid_grad = true;
    }

    FlatImage sampled;
    OcclusionMask mask;
    const bool needs_sampling = weights.symmetry > 0.0 || weights.multiview > 0.0;
    if (needs_sampling) {
        sampled = bilinear_sample(image, cache.points);
        mask = compute_occlusion(model, cache.rotation, theta.alpha);
    }

    if (weights.symmetry > 0.0) {
        const LossValue lv = symmetry_loss(sampled, mask, model.sym_index);
        result.symmetry = lv.value;
        const BilinearGrads grads =
            bilinear_backward(image, cache.points, weights.symmetry * lv.grad_sampled);
        grad_grid += grads.grad_grid;
        any_grid_grad = true;
    }

    if (weights.multiview > 0.0) {
        const Image flipped = image.flipped_horizontal();
        const PoseShapeParams reflected =
            reflect_params(theta, image.width, model.symmetry_sign);
        const GridGenCache cache_b = grid_generate_cached(model, reflected);
        const FlatImage sampled_b = bilinear_sample(flipped, cache_b.points);
        const OcclusionMask mask_b =
            compute_occlusion(model, cache_b.rotation, reflected.alpha);
        const LossValue lv = multiview_loss(sampled, mask, sampled_b, mask_b);
        result.multiview = lv.value;

        const BilinearGrads grads_a =
            bilinear_backward(image, cache.points, weights.multiview * lv.grad_sampled);
        grad_grid += grads_a.grad_grid;
        any_grid_grad = true;

        const BilinearGrads grads_b =
            bilinear_backward(flipped, cache_b.points, weights.multiview * lv.grad_sampled_b);
        const ThetaGradient grad_reflected =
            grid_generate_backward(model, reflected, cache_b, grads_b.grad_grid);
        result.gradient += reflect_params_backward(grad_reflected, model.symmetry_sign);
    }

    if (any_grid_grad)
        result.gradient += grid_generate_backward(model, theta, cache, grad_grid);

    if (weights.prior > 0.0) {
        result.prior = theta.alpha.squaredNorm();
        result.gradient.alpha += weights.prior * 2.0 * theta.alpha;
    }

    result.total = weights.landmark * result.landmark + weights.symmetry * result.symmetry +
                   weights.multiview * result.multiview + weights.prior * result.prior;
    return result;
}

FitResult fit_params(const Image& image, const LandmarkSet& landmarks,
                     const MorphableModel& model, const FitConfig& config) {
    config.validate();
    landmarks.validate();

    PoseShapeParams theta;
    switch (config.init) {
        case InitMode::zeros:
            theta.alpha = Eigen::VectorXd::Zero(model.num_modes());
            break;
        case InitMode::landmark_box:
            theta = init_from_landmarks(landmarks, model);
            break;
        case InitMode::explicit_theta:
            theta = *config.initial_theta;
            if (theta.alpha.size() != model.num_modes())
                throw std::invalid_argument("initial theta coefficient count mismatch");
            break;
    }

    Eigen::VectorXd params = theta.pack();
    Eigen::VectorXd moment1 = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd moment2 = Eigen::VectorXd::Zero(params.size());
    constexpr double kAdamEps = 1e-8;
    constexpr int kWindow = 20;

    FitResult result;
    result.trace.reserve(config.max_iterations);
    std::vector<double> running_best;
    running_best.reserve(config.max_iterations + 1);

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        theta = PoseShapeParams::unpack(params);
        const FitLossResult loss = evaluate_fit_loss(image, landmarks, model, theta,
                                                     config.weights);
        const Eigen::VectorXd gradient = loss.gradient.pack();
        if (!std::isfinite(loss.total) || !gradient.allFinite())
            throw NumericalError("non-finite loss or gradient at iteration " +
                                 std::to_string(iter));

        TraceRow row;
        row.iteration = iter;
        row.total = loss.total;
        row.landmark = loss.landmark;
        row.symmetry = loss.symmetry;
        row.multiview = loss.multiview;
        row.prior = loss.prior;
        row.theta = params;
        result.trace.push_back(std::move(row));

        const double best =
            running_best.empty() ? loss.total : std::min(running_best.back(), loss.total);
        running_best.push_back(best);
        result.iterations = iter;
        if (iter > kWindow) {
            const double before = running_best[iter - 1 - kWindow];
            const double decrease = before - best;
            if (decrease < config.tolerance * std::max(before, 1e-300)) {
                result.converged = true;
                break;
            }
        }

        moment1 = config.beta1 * moment1 + (1.0 - config.beta1) * gradient;
        moment2 = config.beta2 * moment2 +
                  (1.0 - config.beta2) * gradient.cwiseProduct(gradient);
        const double bias1 = 1.0 - std::pow(config.beta1, iter);
        const double bias2 = 1.0 - std::pow(config.beta2, iter);
        const double step =
            config.step_size / std::sqrt(1.0 + iter / config.step_decay_iters);
        const Eigen::ArrayXd mhat = moment1.array() / bias1;
        const Eigen::ArrayXd vhat = moment2.array() / bias2;
        params.array() -= step * mhat / (vhat.sqrt() + kAdamEps);
    }

    // Report the best-loss iterate, not necessarily the last one.
    const auto best_row = std::min_element(
        result.trace.begin(), result.trace.end(),
        [](const TraceRow& a, const TraceRow& b) { return a.total < b.total; });
    result.theta = PoseShapeParams::unpack(best_row->theta);
    return result;
}

double rotation_geodesic_angle(const Eigen::Vector3d& r_a, const Eigen::Vector3d& r_b) {
    const RotationMatrix relative =
        axis_angle_to_matrix(r_a).transpose() * axis_angle_to_matrix(r_b);
    const double cos_angle = std::clamp((relative.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(cos_angle);
}

}  // namespace shapewarp
