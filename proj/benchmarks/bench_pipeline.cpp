/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: benchmarks/bench_pipeline.cpp
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
#include "shapewarp/flatten.hpp"
#include "shapewarp/mesh.hpp"
#include "shapewarp/model.hpp"
#include "shapewarp/sampler.hpp"
#include "shapewarp/transform.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace shapewarp;

PoseShapeParams bench_theta(const MorphableModel& model) {
    PoseShapeParams theta;
    theta.rotation = Eigen::Vector3d(0.2, -0.3, 0.1);
    theta.translation = Eigen::Vector2d(64.5, 64.5);
    theta.log_scale = -0.05;
    theta.alpha = Eigen::VectorXd::LinSpaced(model.num_modes(), -0.8, 0.9);
    return theta;
}

void BM_GridGenerate(benchmark::State& state) {
    const MorphableModel model =
        make_synthetic_model(1, static_cast<int>(state.range(0)),
                             static_cast<int>(state.range(0)), 10);
    const PoseShapeParams theta = bench_theta(model);
    for (auto _ : state) benchmark::DoNotOptimize(grid_generate(model, theta));
}
BENCHMARK(BM_GridGenerate)->Arg(64)->Arg(128);

void BM_GridGenerateBackward(benchmark::State& state) {
    const MorphableModel model =
        make_synthetic_model(1, static_cast<int>(state.range(0)),
                             static_cast<int>(state.range(0)), 10);
    const PoseShapeParams theta = bench_theta(model);
    const GridGenCache cache = grid_generate_cached(model, theta);
    const SampleGrid grad = SampleGrid::Ones(2, model.num_vertices());
    for (auto _ : state)
        benchmark::DoNotOptimize(grid_generate_backward(model, theta, cache, grad));
}
BENCHMARK(BM_GridGenerateBackward)->Arg(64)->Arg(128);

void BM_BilinearSample(benchmark::State& state) {
    const MorphableModel model = make_synthetic_model(1, 64, 64, 10);
    const PoseShapeParams theta = bench_theta(model);
    const SampleGrid grid = grid_generate(model, theta);
    Image image(128, 128, 1, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(bilinear_sample(image, grid));
}
BENCHMARK(BM_BilinearSample);

void BM_BilinearBackward(benchmark::State& state) {
    const MorphableModel model = make_synthetic_model(1, 64, 64, 10);
    const PoseShapeParams theta = bench_theta(model);
    const SampleGrid grid = grid_generate(model, theta);
    Image image(128, 128, 1, 0.5);
    const FlatImage grad = FlatImage::Ones(model.num_vertices(), 1);
    for (auto _ : state) benchmark::DoNotOptimize(bilinear_backward(image, grid, grad));
}
BENCHMARK(BM_BilinearBackward);

void BM_ComputeOcclusion(benchmark::State& state) {
    const MorphableModel model = make_synthetic_model(1, 64, 64, 10, /*convex=*/false);
    const PoseShapeParams theta = bench_theta(model);
    const RotationMatrix rotation = axis_angle_to_matrix(theta.rotation);
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_occlusion(model, rotation, theta.alpha));
}
BENCHMARK(BM_ComputeOcclusion);

void BM_TutteEmbed(benchmark::State& state) {
    const TriangleMesh mesh =
        make_half_dome_mesh(static_cast<int>(state.range(0)), 2 * static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(tutte_embed(mesh, WeightScheme::uniform));
}
BENCHMARK(BM_TutteEmbed)->Arg(16)->Arg(32);

void BM_FitLossEvaluation(benchmark::State& state) {
    const MorphableModel model = make_synthetic_model(1, 64, 64, 10);
    const PoseShapeParams theta = bench_theta(model);
    const SyntheticScene scene = render_synthetic_scene(model, theta, 3, 128, 128, 0.0);
    const LossWeights weights{1.0, 0.1, 0.1, 0.01};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            evaluate_fit_loss(scene.image, scene.landmarks, model, theta, weights));
}
BENCHMARK(BM_FitLossEvaluation);

}  // namespace

BENCHMARK_MAIN();
