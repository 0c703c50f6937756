/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tests/test_sampler.cpp
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
#include "shapewarp/sampler.hpp"

#include "common/test_utils.hpp"
#include "shapewarp/raster.hpp"
#include "shapewarp/transform.hpp"

#include <doctest.h>

using namespace shapewarp;
using namespace shapewarp::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Back-face mask vs the depth-query rasteriser on the model's own grid mesh.
std::pair<int, int> occlusion_mismatch(const MorphableModel& model,
                                       const Eigen::Vector3d& rotation_vector,
                                       const Eigen::VectorXd& alpha) {
    const RotationMatrix rotation = axis_angle_to_matrix(rotation_vector);
    const OcclusionMask mask = compute_occlusion(model, rotation, alpha);
    const ShapeInstance rotated = rotation * synthesize_shape(model, alpha);
    const auto oracle = zbuffer_vertex_visibility(
        rotated.topRows<2>(), rotated.row(2).transpose(),
        grid_triangles(model.grid_height, model.grid_width), model.grid_height,
        model.grid_width);
    int mismatches = 0;
    for (int v = 0; v < model.num_vertices(); ++v)
        if (mask.bits[v] != oracle[v]) ++mismatches;
    return {mismatches, model.num_vertices()};
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("bilinear_sample at integer coordinates is bit-exact") {
    Rng rng(200);
    const Image image = random_image(rng, 7, 9, 2);
    SampleGrid grid(2, 63);
    int i = 0;
    for (int j = 1; j <= 7; ++j)
        for (int k = 1; k <= 9; ++k) grid.col(i++) = Eigen::Vector2d(k, j);
    const FlatImage sampled = bilinear_sample(image, grid);
    i = 0;
    for (int j = 1; j <= 7; ++j)
        for (int k = 1; k <= 9; ++k, ++i)
            for (int c = 0; c < 2; ++c) CHECK(sampled(i, c) == image.at(j - 1, k - 1, c));
}

TEST_CASE("bilinear_sample at half coordinates averages four pixels") {
    Rng rng(201);
    const Image image = random_image(rng, 6, 6, 1);
    SampleGrid grid(2, 1);
    grid << 3.5, 4.5;
    const FlatImage sampled = bilinear_sample(image, grid);
    const double expected = 0.25 * (image.at(3, 2, 0) + image.at(3, 3, 0) + image.at(4, 2, 0) +
                                    image.at(4, 3, 0));
    CHECK(sampled(0, 0) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("bilinear_sample far outside the image is zero") {
    Rng rng(202);
    const Image image = random_image(rng, 5, 5, 3);
    SampleGrid grid(2, 2);
    grid << -5.0, 11.0, -5.0, 3.0;
    const FlatImage sampled = bilinear_sample(image, grid);
    CHECK(sampled.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampling a power-of-two constant is exact; any constant is near-exact") {
    Rng rng(203);
    SampleGrid grid(2, 40);
    for (int i = 0; i < 40; ++i) {
        grid(0, i) = rng.uniform(1.0, 6.0);
        grid(1, i) = rng.uniform(1.0, 6.0);
    }
    Image half(6, 6, 1, 0.5);
    const FlatImage exact = bilinear_sample(half, grid);
    for (int i = 0; i < 40; ++i) CHECK(exact(i, 0) == 0.5);

    Image other(6, 6, 1, 0.37);
    const FlatImage near = bilinear_sample(other, grid);
    for (int i = 0; i < 40; ++i) CHECK(near(i, 0) == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("partition of unity for interior samples") {
    // fl((1 - f) + f) == 1 for every f in [0, 1).
    Rng rng(204);
    for (int trial = 0; trial < 1000; ++trial) {
        const double f = rng.uniform();
        const double w0 = 1.0 - f;
        CHECK(w0 + f == 1.0);
    }
}

TEST_CASE("reflection equivariance is exact on dyadic coordinates") {
    Rng rng(205);
    const Image image = random_image(rng, 8, 12, 2);
    const Image flipped = image.flipped_horizontal();
    const int width = image.width;
    SampleGrid grid(2, 200);
    for (int i = 0; i < 200; ++i) {
        grid(0, i) = rng.uniform_int(1, width - 1) + rng.uniform_int(0, 1023) / 1024.0;
        grid(1, i) = rng.uniform_int(1, image.height - 1) + rng.uniform_int(0, 1023) / 1024.0;
    }
    SampleGrid mirrored = grid;
    mirrored.row(0) = (width + 1.0) - grid.row(0).array();
    const FlatImage direct = bilinear_sample(image, grid);
    const FlatImage reflected = bilinear_sample(flipped, mirrored);
    CHECK(direct == reflected);
}

TEST_CASE("bilinear_backward zero gradient and constant image") {
    Rng rng(206);
    const Image image = random_image(rng, 6, 7, 1);
    SampleGrid grid(2, 5);
    for (int i = 0; i < 5; ++i)
        grid.col(i) = Eigen::Vector2d(rng.uniform(1.5, 6.2), rng.uniform(1.5, 5.2));

    const BilinearGrads zero = bilinear_backward(image, grid, FlatImage::Zero(5, 1));
    for (double p : zero.grad_image.pixels) CHECK(p == 0.0);
    CHECK(zero.grad_grid.cwiseAbs().maxCoeff() == 0.0);

    Image constant(6, 7, 1, 0.8);
    const FlatImage weights = random_matrix(rng, 5, 1);
    const BilinearGrads grads = bilinear_backward(constant, grid, weights);
    CHECK(grads.grad_grid.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bilinear_backward matches finite differences away from integers") {
    Rng rng(207);
    const Image image = random_image(rng, 9, 9, 2);
    SampleGrid grid(2, 12);
    for (int i = 0; i < 12; ++i) {
        grid(0, i) = rng.uniform_int(2, 7) + rng.uniform(0.2, 0.8);
        grid(1, i) = rng.uniform_int(2, 7) + rng.uniform(0.2, 0.8);
    }
    const FlatImage weights = random_matrix(rng, 12, 2);
    const BilinearGrads grads = bilinear_backward(image, grid, weights);

    const SampleGrid dir = random_matrix(rng, 2, 12);
    const double analytic = (grads.grad_grid.array() * dir.array()).sum();
    const double numeric = central_diff(
        [&](double t) {
            return (weights.array() * bilinear_sample(image, grid + t * dir).array()).sum();
        },
        1e-6);
    CHECK(rel_error(analytic, numeric) < 1e-6);

    Image image_dir = image;
    for (auto& p : image_dir.pixels) p = rng.normal();
    double analytic_image = 0.0;
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        analytic_image += grads.grad_image.pixels[i] * image_dir.pixels[i];
    const double numeric_image = central_diff(
        [&](double t) {
            Image shifted = image;
            for (std::size_t i = 0; i < shifted.pixels.size(); ++i)
                shifted.pixels[i] += t * image_dir.pixels[i];
            return (weights.array() * bilinear_sample(shifted, grid).array()).sum();
        },
        1e-6);
    CHECK(rel_error(analytic_image, numeric_image) < 1e-6);
}

TEST_CASE("backward conserves gradient mass for interior points") {
    Rng rng(208);
    const Image image = random_image(rng, 10, 10, 1);
    SampleGrid grid(2, 30);
    for (int i = 0; i < 30; ++i)
        grid.col(i) = Eigen::Vector2d(rng.uniform(2.0, 9.0), rng.uniform(2.0, 9.0));
    const FlatImage weights = random_matrix(rng, 30, 1);
    const BilinearGrads grads = bilinear_backward(image, grid, weights);
    double image_sum = 0.0;
    for (double p : grads.grad_image.pixels) image_sum += p;
    // Interior points have total kernel weight exactly 1.
    CHECK(image_sum == doctest::Approx(weights.sum()).epsilon(1e-12));
}

TEST_CASE("occlusion on the convex model matches the depth oracle exactly") {
    const MorphableModel model = make_synthetic_model(31, 24, 24, 4, /*convex=*/true);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Zero(4);
    Rng rng(209);
    SUBCASE("identity rotation") {
        const auto [mism, total] = occlusion_mismatch(model, Eigen::Vector3d::Zero(), alpha);
        CHECK(mism == 0);
    }
    SUBCASE("random rotations up to 75 degree pitch/yaw") {
        for (int trial = 0; trial < 12; ++trial) {
            const Eigen::Vector3d r = random_bounded_rotation(
                rng, 75.0 * kPi / 180.0, 75.0 * kPi / 180.0, kPi);
            const auto [mism, total] = occlusion_mismatch(model, r, alpha);
            CHECK(mism == 0);
        }
    }
    SUBCASE("random axis-angle rotations below 60 degrees") {
        for (int trial = 0; trial < 12; ++trial) {
            Eigen::Vector3d axis = random_vector(rng, 3);
            while (axis.norm() < 1e-6) axis = random_vector(rng, 3);
            const Eigen::Vector3d r =
                rng.uniform(0.0, 60.0 * kPi / 180.0) * axis.normalized();
            const auto [mism, total] = occlusion_mismatch(model, r, alpha);
            CHECK(mism == 0);
        }
    }
}

TEST_CASE("in-plane half-turn cannot change facing") {
    const MorphableModel model = make_synthetic_model(32, 16, 16, 4, /*convex=*/false);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(4);
    alpha(1) = 0.7;
    const OcclusionMask base =
        compute_occlusion(model, RotationMatrix::Identity(), alpha);
    const OcclusionMask turned =
        compute_occlusion(model, axis_angle_to_matrix(Eigen::Vector3d(0, 0, kPi)), alpha);
    CHECK(base.bits == turned.bits);
}

TEST_CASE("concave model at 45 degree yaw mislabels fewer than 10% of vertices") {
    const MorphableModel model = make_synthetic_model(33, 32, 32, 4, /*convex=*/false);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Zero(4);
    const auto [mism, total] =
        occlusion_mismatch(model, Eigen::Vector3d(0.0, kPi / 4.0, 0.0), alpha);
    CHECK(mism > 0);  // the bump genuinely occludes
    CHECK(static_cast<double>(mism) / total < 0.10);
}

TEST_CASE("mask_sample basics and backward") {
    Rng rng(210);
    const FlatImage sampled = random_matrix(rng, 20, 3);
    OcclusionMask ones;
    ones.bits.assign(20, 1);
    CHECK((mask_sample(sampled, ones) - sampled).cwiseAbs().maxCoeff() == 0.0);
    OcclusionMask zeros;
    zeros.bits.assign(20, 0);
    CHECK(mask_sample(sampled, zeros).cwiseAbs().maxCoeff() == 0.0);

    OcclusionMask mixed;
    mixed.bits.resize(20);
    for (auto& b : mixed.bits) b = rng.uniform() < 0.5 ? 1 : 0;
    const FlatImage weights = random_matrix(rng, 20, 3);
    const auto [grad_sampled, grad_mask] = mask_sample_backward(sampled, mixed, weights);
    const FlatImage dir = random_matrix(rng, 20, 3);
    const double analytic = (grad_sampled.array() * dir.array()).sum();
    const double numeric = central_diff(
        [&](double t) {
            return (weights.array() * mask_sample(sampled + t * dir, mixed).array()).sum();
        },
        1e-6);
    CHECK(rel_error(analytic, numeric) < 1e-8);
    // grad wrt M is defined even though the pipeline never uses it.
    for (int i = 0; i < 20; ++i)
        CHECK(grad_mask(i) == doctest::Approx(weights.row(i).dot(sampled.row(i))));
}

TEST_CASE("degenerate normals are occluded and counted") {
    MorphableModel model = make_synthetic_model(34, 8, 8, 1);
    // Collapse one grid row onto the previous one: the shared vertices get
    // zero-area stars only if all incident faces degenerate, so collapse all
    // of row 0 and 1 to a single point.
    for (int b = 0; b < 8; ++b) {
        for (int i = 0; i < 3; ++i) {
            model.mean_shape(3 * b + i) = 0.0;
            model.mean_shape(3 * (8 + b) + i) = 0.0;
        }
    }
    const OcclusionMask mask =
        compute_occlusion(model, RotationMatrix::Identity(), Eigen::VectorXd::Zero(1));
    CHECK(mask.degenerate_count > 0);
    for (int b = 1; b < 7; ++b) CHECK(mask.bits[b] == 0);
}

}  // TEST_SUITE
