/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tests/test_model.cpp
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
#include "shapewarp/model.hpp"

#include "common/test_utils.hpp"
#include "shapewarp/transform.hpp"

#include <doctest.h>

#include <Eigen/SVD>

using namespace shapewarp;
using namespace shapewarp::testing;

TEST_SUITE("model") {

TEST_CASE("synthesize_shape zero and unit coefficients") {
    const MorphableModel model = make_synthetic_model(1, 8, 8, 3);
    const int n = model.num_vertices();

    const ShapeInstance mean = synthesize_shape(model, Eigen::VectorXd::Zero(3));
    for (int v = 0; v < n; ++v)
        for (int i = 0; i < 3; ++i) CHECK(mean(i, v) == model.mean_shape(3 * v + i));

    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1(0) = 1.0;
    const ShapeInstance moved = synthesize_shape(model, e1);
    for (int v = 0; v < n; ++v)
        for (int i = 0; i < 3; ++i)
            CHECK(moved(i, v) ==
                  doctest::Approx(model.mean_shape(3 * v + i) + model.basis(3 * v + i, 0))
                      .epsilon(1e-15));

    CHECK_THROWS_AS(synthesize_shape(model, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("synthesize_shape is linear") {
    const MorphableModel model = make_synthetic_model(2, 9, 11, 6);
    Rng rng(100);
    const Eigen::VectorXd alpha = random_vector(rng, 6);
    const Eigen::VectorXd delta = random_vector(rng, 6);
    const ShapeInstance difference =
        synthesize_shape(model, alpha + delta) - synthesize_shape(model, alpha);
    const Eigen::VectorXd stacked = model.basis * delta;
    const ShapeInstance expected =
        Eigen::Map<const ShapeInstance>(stacked.data(), 3, model.num_vertices());
    CHECK((difference - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesize_shape affine-map identity") {
    const MorphableModel model = make_synthetic_model(2, 9, 11, 6);
    Rng rng(101);
    const Eigen::VectorXd a1 = random_vector(rng, 6);
    const Eigen::VectorXd a2 = random_vector(rng, 6);
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    const ShapeInstance lhs = synthesize_shape(model, a * a1 + b * a2);
    const ShapeInstance rhs = a * synthesize_shape(model, a1) + b * synthesize_shape(model, a2) +
                              (1.0 - a - b) * synthesize_shape(model, Eigen::VectorXd::Zero(6));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shape_backward selector and zero cases") {
    const MorphableModel model = make_synthetic_model(4, 8, 8, 4);
    const int n = model.num_vertices();
    CHECK(shape_backward(model, ShapeInstance::Zero(3, n)).cwiseAbs().maxCoeff() == 0.0);

    ShapeInstance single = ShapeInstance::Zero(3, n);
    const int vertex = 13;
    const int component = 1;
    single(component, vertex) = 2.5;
    const Eigen::VectorXd grad = shape_backward(model, single);
    const Eigen::VectorXd expected = 2.5 * model.basis.row(3 * vertex + component).transpose();
    CHECK((grad - expected).cwiseAbs().maxCoeff() < 1e-15);

    CHECK_THROWS_AS(shape_backward(model, ShapeInstance::Zero(3, n + 1)),
                    std::invalid_argument);
}

TEST_CASE("shape_backward matches finite differences through a scalar loss") {
    const MorphableModel model = make_synthetic_model(4, 8, 10, 5);
    Rng rng(102);
    const Eigen::VectorXd alpha = random_vector(rng, 5);
    const Eigen::MatrixXd weights = random_matrix(rng, 3, model.num_vertices());
    const Eigen::VectorXd grad = shape_backward(model, weights);
    for (int k = 0; k < 5; ++k) {
        const double numeric = central_diff(
            [&](double t) {
                Eigen::VectorXd shifted = alpha;
                shifted(k) += t;
                return (weights.array() * synthesize_shape(model, shifted).array()).sum();
            },
            1e-5);
        CHECK(rel_error(grad(k), numeric) < 1e-7);
    }
}

TEST_CASE("shape adjoint identity") {
    const MorphableModel model = make_synthetic_model(5, 10, 8, 5);
    Rng rng(103);
    const Eigen::VectorXd alpha = random_vector(rng, 5);
    const Eigen::VectorXd delta = random_vector(rng, 5);
    const Eigen::MatrixXd weights = random_matrix(rng, 3, model.num_vertices());
    const ShapeInstance diff =
        synthesize_shape(model, alpha + delta) - synthesize_shape(model, alpha);
    const double lhs = (weights.array() * diff.array()).sum();
    const double rhs = shape_backward(model, weights).dot(delta);
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("whiten_basis") {
    const MorphableModel model = make_synthetic_model(6, 8, 8, 4);
    const MorphableModel unchanged = whiten_basis(model, Eigen::VectorXd::Ones(4));
    CHECK((unchanged.basis - model.basis).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd devs = Eigen::VectorXd::Ones(4);
    devs(0) = 2.0;
    const MorphableModel scaled = whiten_basis(model, devs);
    CHECK((scaled.basis.col(0) - 2.0 * model.basis.col(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((scaled.basis.rightCols(3) - model.basis.rightCols(3)).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(104);
    Eigen::VectorXd random_devs(4);
    for (int i = 0; i < 4; ++i) random_devs(i) = rng.uniform(0.3, 2.5);
    const MorphableModel whitened = whiten_basis(model, random_devs);
    const Eigen::VectorXd alpha = random_vector(rng, 4);
    const ShapeInstance lhs = synthesize_shape(whitened, alpha);
    const ShapeInstance rhs =
        synthesize_shape(model, random_devs.asDiagonal() * alpha);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::VectorXd bad = Eigen::VectorXd::Ones(4);
    bad(2) = 0.0;
    CHECK_THROWS_AS(whiten_basis(model, bad), std::invalid_argument);
}

TEST_CASE("whiten_basis preserves the column span") {
    const MorphableModel model = make_synthetic_model(6, 8, 8, 4);
    Rng rng(105);
    Eigen::VectorXd devs(4);
    for (int i = 0; i < 4; ++i) devs(i) = rng.uniform(0.2, 3.0);
    const MorphableModel whitened = whiten_basis(model, devs);
    // Each whitened column must lie in the original span and vice versa.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.basis, Eigen::ComputeThinU);
    const Eigen::MatrixXd projector = svd.matrixU() * svd.matrixU().transpose();
    const Eigen::MatrixXd residual = whitened.basis - projector * whitened.basis;
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("make_synthetic_model determinism and validation") {
    const MorphableModel a = make_synthetic_model(42, 12, 16, 7);
    const MorphableModel b = make_synthetic_model(42, 12, 16, 7);
    CHECK(a.mean_shape == b.mean_shape);
    CHECK(a.basis == b.basis);
    CHECK(a.sym_index == b.sym_index);
    CHECK(a.landmark_indices == b.landmark_indices);

    const MorphableModel c = make_synthetic_model(43, 12, 16, 7);
    CHECK((a.basis - c.basis).cwiseAbs().maxCoeff() > 0.0);

    CHECK_THROWS_AS(make_synthetic_model(1, 4, 16, 7), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic_model(1, 16, 7, 7), std::invalid_argument);
    CHECK_THROWS_AS(make_synthetic_model(1, 16, 16, 0), std::invalid_argument);
}

TEST_CASE("synthetic mean is bilaterally symmetric, exactly") {
    for (int width : {8, 9, 16}) {
        const MorphableModel model = make_synthetic_model(3, 10, width, 4);
        const Eigen::VectorXd mirrored = model.mirror_stacked(model.mean_shape);
        CHECK((mirrored - model.mean_shape).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("synthetic basis modes have exact symmetry signs") {
    const MorphableModel model = make_synthetic_model(9, 12, 13, 8);
    for (int k = 0; k < model.num_modes(); ++k) {
        const Eigen::VectorXd mirrored = model.mirror_stacked(model.basis.col(k));
        const Eigen::VectorXd expected =
            static_cast<double>(model.symmetry_sign[k]) * model.basis.col(k);
        CHECK((mirrored - expected).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("synthetic basis has full column rank") {
    const MorphableModel model = make_synthetic_model(10, 16, 16, 10);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.basis);
    CHECK(svd.singularValues()(9) > 1e-6 * svd.singularValues()(0));
}

TEST_CASE("sym_index is an involution and maps grid columns") {
    const MorphableModel model = make_synthetic_model(11, 9, 14, 3);
    const int w = model.grid_width;
    for (int v = 0; v < model.num_vertices(); ++v) {
        CHECK(model.sym_index[model.sym_index[v]] == v);
        CHECK(model.sym_index[v] / w == v / w);
        CHECK(model.sym_index[v] % w == w - 1 - (v % w));
    }
}

}  // TEST_SUITE
