/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tests/test_fit.cpp
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

#include "common/test_utils.hpp"
#include "shapewarp/gradcheck.hpp"
#include "shapewarp/localiser.hpp"
#include "shapewarp/sampler.hpp"
#include "shapewarp/transform.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace shapewarp;
using namespace shapewarp::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

PoseShapeParams frontal_theta(const MorphableModel& model, double image_size) {
    PoseShapeParams theta;
    theta.alpha = Eigen::VectorXd::Zero(model.num_modes());
    // The model spans ~100 units; fill ~72% of the frame. The odd factor
    // keeps the silhouette clear of pixel centres.
    theta.log_scale = std::log(0.00725 * image_size);
    theta.translation = Eigen::Vector2d(image_size / 2.0 + 0.5, image_size / 2.0 + 0.5);
    return theta;
}

double landmark_rmse(const MorphableModel& model, const PoseShapeParams& estimate,
                     const LandmarkSet& truth) {
    const SampleGrid grid = grid_generate(model, estimate);
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < truth.size(); ++i) {
        if (truth.confidences(i) == 0.0) continue;
        sum += (grid.col(model.landmark_indices[i]) - truth.points.col(i)).squaredNorm();
        ++count;
    }
    return std::sqrt(sum / std::max(1, count));
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("render_synthetic_scene noiseless landmarks are exact and seeded") {
    const MorphableModel model = make_synthetic_model(70, 24, 24, 4);
    Rng rng(500);
    PoseShapeParams theta = frontal_theta(model, 128.0);
    theta.rotation = Eigen::Vector3d(0.1, -0.15, 0.2);
    theta.alpha = random_vector(rng, 4) * 0.5;

    const SyntheticScene scene = render_synthetic_scene(model, theta, 9, 128, 128, 0.0);
    const SampleGrid grid = grid_generate(model, theta);
    for (int i = 0; i < model.num_landmarks(); ++i) {
        const int v = model.landmark_indices[i];
        CHECK(scene.landmarks.points(0, i) == grid(0, v));
        CHECK(scene.landmarks.points(1, i) == grid(1, v));
        CHECK(scene.landmarks.confidences(i) == 1.0);
    }

    const SyntheticScene again = render_synthetic_scene(model, theta, 9, 128, 128, 0.0);
    CHECK(scene.image.pixels == again.image.pixels);
    CHECK(scene.landmarks.points == again.landmarks.points);

    const SyntheticScene noisy = render_synthetic_scene(model, theta, 9, 128, 128, 1.0);
    CHECK((noisy.landmarks.points - scene.landmarks.points).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("render_synthetic_scene rejects out-of-frame poses") {
    const MorphableModel model = make_synthetic_model(70, 16, 16, 2);
    PoseShapeParams theta = frontal_theta(model, 64.0);
    theta.translation = Eigen::Vector2d(4.0, 32.0);  // pushes the left edge out
    CHECK_THROWS_AS(render_synthetic_scene(model, theta, 1, 64, 64, 0.0),
                    std::invalid_argument);
}

TEST_CASE("frontal symmetric scene has near-zero symmetry loss at the true theta") {
    // Odd grid width: the mirrored rasterisation pairs quads exactly.
    const MorphableModel model = make_synthetic_model(71, 63, 63, 4);
    const PoseShapeParams theta = frontal_theta(model, 128.0);
    const SyntheticScene scene = render_synthetic_scene(model, theta, 5, 128, 128, 0.0);

    const GridGenCache cache = grid_generate_cached(model, theta);
    const FlatImage sampled = bilinear_sample(scene.image, cache.points);
    const OcclusionMask mask = compute_occlusion(model, cache.rotation, theta.alpha);
    const LossValue loss = symmetry_loss(sampled, mask, model.sym_index);
    CHECK(loss.value < 1e-10);
}

TEST_CASE("sampling the flipped image under reflected parameters matches") {
    // Exactness needs a mirror-symmetric scene: the sampler equivariance
    // turns the flipped branch into V(sym(i)), so the residual is the scene's
    // own asymmetry. Frontal pose, symmetric deformation modes only.
    const MorphableModel model = make_synthetic_model(72, 33, 33, 4);
    Rng rng(501);
    PoseShapeParams theta = frontal_theta(model, 128.0);
    theta.alpha = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < 4; ++k)
        if (model.symmetry_sign[k] > 0) theta.alpha(k) = rng.uniform(-0.8, 0.8);
    const SyntheticScene scene = render_synthetic_scene(model, theta, 17, 128, 128, 0.0);

    const GridGenCache cache = grid_generate_cached(model, theta);
    const FlatImage sampled = bilinear_sample(scene.image, cache.points);
    const OcclusionMask mask = compute_occlusion(model, cache.rotation, theta.alpha);

    const PoseShapeParams reflected = reflect_params(theta, 128.0, model.symmetry_sign);
    const GridGenCache cache_b = grid_generate_cached(model, reflected);
    const Image flipped = scene.image.flipped_horizontal();
    const FlatImage sampled_b = bilinear_sample(flipped, cache_b.points);
    const OcclusionMask mask_b = compute_occlusion(model, cache_b.rotation, reflected.alpha);

    CHECK(multiview_loss(sampled, mask, sampled_b, mask_b).value < 1e-10);
}

TEST_CASE("init_from_landmarks recovers exact similarity placements") {
    const MorphableModel model = make_synthetic_model(73, 20, 20, 3);
    PoseShapeParams theta;
    theta.alpha = Eigen::VectorXd::Zero(3);
    const SampleGrid grid = grid_generate(model, theta);

    LandmarkSet landmarks;
    landmarks.points.resize(2, model.num_landmarks());
    landmarks.confidences = Eigen::VectorXd::Ones(model.num_landmarks());
    for (int i = 0; i < model.num_landmarks(); ++i)
        landmarks.points.col(i) =
            grid.col(model.landmark_indices[i]) + Eigen::Vector2d(30.0, 40.0);

    const PoseShapeParams init = init_from_landmarks(landmarks, model);
    CHECK(std::abs(init.log_scale) < 1e-9);
    CHECK(std::abs(init.translation(0) - 30.0) < 1e-9);
    CHECK(std::abs(init.translation(1) - 40.0) < 1e-9);

    // Scaling all landmarks by 2 about their centroid doubles the scale.
    const Eigen::Vector2d centroid = landmarks.points.rowwise().mean();
    LandmarkSet scaled = landmarks;
    for (int i = 0; i < landmarks.size(); ++i)
        scaled.points.col(i) = centroid + 2.0 * (landmarks.points.col(i) - centroid);
    CHECK(init_from_landmarks(scaled, model).log_scale ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));

    LandmarkSet degenerate = landmarks;
    degenerate.confidences.setZero();
    degenerate.confidences(0) = 1.0;
    CHECK_THROWS_AS(init_from_landmarks(degenerate, model), std::invalid_argument);
}

TEST_CASE("fit stays at the optimum when initialised with the truth") {
    const MorphableModel model = make_synthetic_model(74, 24, 24, 4);
    Rng rng(502);
    PoseShapeParams theta = frontal_theta(model, 128.0);
    theta.rotation = Eigen::Vector3d(0.05, -0.1, 0.12);
    theta.alpha = random_vector(rng, 4) * 0.3;
    const SyntheticScene scene = render_synthetic_scene(model, theta, 3, 128, 128, 0.0);

    FitConfig config;
    config.weights = {1.0, 0.0, 0.0, 0.0};
    config.init = InitMode::explicit_theta;
    config.initial_theta = theta;
    config.max_iterations = 100;
    const FitResult result = fit_params(scene.image, scene.landmarks, model, config);
    for (const TraceRow& row : result.trace) CHECK(row.total <= 1e-9);
    CHECK(result.converged);
}

TEST_CASE("overwhelming prior weight drives alpha to zero") {
    const MorphableModel model = make_synthetic_model(75, 16, 16, 4);
    Rng rng(503);
    PoseShapeParams start = frontal_theta(model, 96.0);
    start.alpha = random_vector(rng, 4);
    const SyntheticScene scene =
        render_synthetic_scene(model, frontal_theta(model, 96.0), 4, 96, 96, 0.0);

    FitConfig config;
    config.weights = {0.0, 0.0, 0.0, 1e6};
    config.init = InitMode::explicit_theta;
    config.initial_theta = start;
    config.max_iterations = 2000;
    config.tolerance = 1e-14;
    const FitResult result = fit_params(scene.image, scene.landmarks, model, config);
    CHECK(result.theta.alpha.norm() < 1e-3);
}

TEST_CASE("noiseless landmark fit recovers the pose") {
    const MorphableModel model = make_synthetic_model(76, 32, 32, 6, /*convex=*/false);
    Rng rng(504);
    for (int trial = 0; trial < 2; ++trial) {
        PoseShapeParams truth;
        truth.rotation = random_bounded_rotation(rng, 0.3, 0.3, 0.3);
        truth.log_scale = std::log(rng.uniform(0.82, 0.92));
        truth.translation =
            Eigen::Vector2d(64.5 + rng.uniform(-5, 5), 64.5 + rng.uniform(-5, 5));
        truth.alpha = random_vector(rng, 6).cwiseMax(-1.0).cwiseMin(1.0);
        const SyntheticScene scene =
            render_synthetic_scene(model, truth, 100 + trial, 128, 128, 0.0);

        FitConfig config;
        config.weights = {1.0, 0.0, 0.0, 0.0};
        const FitResult result = fit_params(scene.image, scene.landmarks, model, config);

        CHECK(landmark_rmse(model, result.theta, scene.landmarks) < 0.5);
        CHECK(rotation_geodesic_angle(result.theta.rotation, truth.rotation) <
              2.0 * kPi / 180.0);
        CHECK(std::abs(result.theta.log_scale - truth.log_scale) < 0.01);
        CHECK((result.theta.translation - truth.translation).norm() < 0.5);
    }
}

TEST_CASE("fitting the flipped image yields the reflected parameters") {
    const MorphableModel model = make_synthetic_model(77, 32, 32, 4, /*convex=*/false);
    Rng rng(505);
    PoseShapeParams truth = frontal_theta(model, 128.0);
    truth.rotation = random_bounded_rotation(rng, 0.25, 0.25, 0.25);
    truth.alpha = random_vector(rng, 4) * 0.5;
    const SyntheticScene scene = render_synthetic_scene(model, truth, 11, 128, 128, 0.0);

    // Flip the scene. Mirroring swaps landmark identities: the flipped
    // detector sees, in slot i, the mirrored projection of vertex sym(v_i).
    const SampleGrid truth_grid = grid_generate(model, truth);
    LandmarkSet flipped_landmarks = scene.landmarks;
    for (int i = 0; i < flipped_landmarks.size(); ++i) {
        const int mirrored_vertex = model.sym_index[model.landmark_indices[i]];
        flipped_landmarks.points(0, i) = 129.0 - truth_grid(0, mirrored_vertex);
        flipped_landmarks.points(1, i) = truth_grid(1, mirrored_vertex);
    }

    FitConfig config;
    config.weights = {1.0, 0.0, 0.0, 0.0};
    const FitResult flipped_fit =
        fit_params(scene.image.flipped_horizontal(), flipped_landmarks, model, config);
    const PoseShapeParams back =
        reflect_params(flipped_fit.theta, 128.0, model.symmetry_sign);
    CHECK(rotation_geodesic_angle(back.rotation, truth.rotation) < 2.0 * kPi / 180.0);
    CHECK(std::abs(back.log_scale - truth.log_scale) < 0.01);
    CHECK((back.translation - truth.translation).norm() < 0.5);
}

TEST_CASE("fit aborts with a diagnostic on non-finite loss") {
    const MorphableModel model = make_synthetic_model(78, 16, 16, 2);
    const SyntheticScene scene =
        render_synthetic_scene(model, frontal_theta(model, 96.0), 2, 96, 96, 0.0);
    LandmarkSet poisoned = scene.landmarks;
    poisoned.points(0, 0) = std::numeric_limits<double>::quiet_NaN();
    FitConfig config;
    config.weights = {1.0, 0.0, 0.0, 0.0};
    config.init = InitMode::explicit_theta;
    config.initial_theta = frontal_theta(model, 96.0);
    CHECK_THROWS_AS(fit_params(scene.image, poisoned, model, config), NumericalError);
}

TEST_CASE("fit is deterministic") {
    const MorphableModel model = make_synthetic_model(79, 16, 16, 3);
    PoseShapeParams truth = frontal_theta(model, 96.0);
    truth.rotation = Eigen::Vector3d(0.1, 0.05, -0.08);
    const SyntheticScene scene = render_synthetic_scene(model, truth, 6, 96, 96, 0.0);
    FitConfig config;
    config.max_iterations = 60;
    config.weights = {1.0, 0.1, 0.1, 0.01};
    const FitResult a = fit_params(scene.image, scene.landmarks, model, config);
    const FitResult b = fit_params(scene.image, scene.landmarks, model, config);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].total == b.trace[i].total);
        CHECK(a.trace[i].theta == b.trace[i].theta);
    }
}

TEST_CASE("localiser: zero learning rate leaves parameters bit-identical") {
    const MorphableModel model = make_synthetic_model(80, 16, 16, 2);
    std::vector<SyntheticScene> scenes;
    for (int i = 0; i < 3; ++i) {
        PoseShapeParams theta = frontal_theta(model, 64.0);
        theta.rotation = Eigen::Vector3d(0.02 * i, -0.03 * i, 0.0);
        scenes.push_back(render_synthetic_scene(model, theta, 20 + i, 64, 64, 0.0));
    }
    LocaliserConfig config;
    config.epochs = 3;
    config.batch_size = 2;
    config.seed = 5;
    config.weights = {1.0, 0.0, 0.0, 0.01};

    LocaliserConfig frozen = config;
    frozen.learning_rate = 0.0;
    const LocaliserTrainResult trained = train_toy_localiser(scenes, model, frozen);

    // Re-derive the untouched initial weights with the same seed.
    LocaliserConfig zero_epochs = frozen;
    zero_epochs.epochs = 1;
    const LocaliserTrainResult reference = train_toy_localiser(scenes, model, zero_epochs);
    CHECK(trained.localiser.pack() == reference.localiser.pack());
}

TEST_CASE("localiser output gradient matches finite differences through the stack") {
    const MorphableModel model = make_synthetic_model(81, 16, 16, 3);
    PoseShapeParams truth = frontal_theta(model, 64.0);
    truth.rotation = Eigen::Vector3d(0.05, 0.1, -0.05);
    const SyntheticScene scene = render_synthetic_scene(model, truth, 30, 64, 64, 0.0);

    Rng rng(506);
    PoseShapeParams probe = frontal_theta(model, 64.0);
    probe.rotation = random_bounded_rotation(rng, 0.2, 0.2, 0.2);
    probe.translation += Eigen::Vector2d(rng.uniform(-2, 2), rng.uniform(-2, 2));
    probe.alpha = random_vector(rng, 3) * 0.3;

    const LossWeights weights{1.0, 0.1, 0.1, 0.01};
    const FitLossResult loss = evaluate_fit_loss(scene.image, scene.landmarks, model, probe,
                                                 weights);
    const Eigen::VectorXd analytic = loss.gradient.pack();
    const Eigen::VectorXd packed = probe.pack();
    const Eigen::VectorXd direction = random_vector(rng, packed.size());
    const double numeric = central_diff(
        [&](double t) {
            return evaluate_fit_loss(scene.image, scene.landmarks, model,
                                     PoseShapeParams::unpack(packed + t * direction), weights)
                .total;
        },
        1e-5);
    CHECK(rel_error(analytic.dot(direction), numeric) < 1e-5);
}

TEST_CASE("localiser training halves the loss on a scene set") {
    const MorphableModel model = make_synthetic_model(82, 16, 16, 2);
    Rng rng(507);
    std::vector<SyntheticScene> scenes;
    for (int i = 0; i < 100; ++i) {
        PoseShapeParams theta = frontal_theta(model, 48.0);
        theta.rotation = random_bounded_rotation(rng, 0.15, 0.15, 0.15);
        theta.translation += Eigen::Vector2d(rng.uniform(-2, 2), rng.uniform(-2, 2));
        theta.log_scale += rng.uniform(-0.05, 0.05);
        scenes.push_back(render_synthetic_scene(model, theta, 1000 + i, 48, 48, 0.0));
    }
    LocaliserConfig config;
    config.epochs = 20;
    config.batch_size = 10;
    config.learning_rate = 3e-3;
    config.seed = 2;
    config.weights = {1.0, 0.0, 0.0, 0.01};
    const LocaliserTrainResult result = train_toy_localiser(scenes, model, config);

    const int tail = std::max(1, config.epochs / 10);
    double tail_mean = 0.0;
    for (int e = config.epochs - tail; e < config.epochs; ++e)
        tail_mean += result.epoch_losses[e];
    tail_mean /= tail;
    CHECK(tail_mean < 0.5 * result.initial_loss);
}

TEST_CASE("grad_check_all reports sub-1e-5 errors on every op") {
    const GradCheckReport report = grad_check_all(123, 10);
    CHECK(report.entries.size() >= 10);
    for (const auto& entry : report.entries) {
        INFO(entry.op);
        CHECK(entry.max_rel_error < 1e-5);
        CHECK(entry.failures.empty());
    }
    CHECK_THROWS_AS(grad_check_all(1, 0), std::invalid_argument);

    // Seeded reports are identical.
    const GradCheckReport again = grad_check_all(123, 10);
    for (std::size_t i = 0; i < report.entries.size(); ++i)
        CHECK(report.entries[i].max_rel_error == again.entries[i].max_rel_error);
}

}  // TEST_SUITE
