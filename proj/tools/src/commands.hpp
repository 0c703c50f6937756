/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tools/src/commands.hpp
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
#include "shapewarp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shapewarp::cli {

/// Exit code 0 on success, 1 on input errors, 2 on numerical failures.
/// A nonzero exit leaves no partial artifacts behind: every file is staged
/// and renamed into place only after its contents were fully written.
struct CommandResult {
    int exit_code = 0;
    std::string summary;
    std::vector<std::string> artifacts;
};

struct GenModelOptions {
    std::uint64_t seed = 1;
    int height = 64;
    int width = 64;
    int modes = 10;
    bool convex = true;
    std::filesystem::path output;
};
CommandResult cmd_gen_model(const GenModelOptions& options);

struct FlattenOptions {
    std::filesystem::path mesh_path;
    std::filesystem::path sidecar_path;
    std::string weights = "uniform";  // uniform | cotangent
    int height = 64;
    int width = 64;
    std::filesystem::path output;
    std::string viz_prefix;  // empty disables visualisation PNGs
};
CommandResult cmd_flatten(const FlattenOptions& options);

struct GradCheckOptions {
    std::uint64_t seed = 1;
    int probes = 100;
};
CommandResult cmd_gradcheck(const GradCheckOptions& options);

struct FitOptions {
    std::filesystem::path image_path;
    std::filesystem::path landmarks_path;
    std::filesystem::path model_path;
    std::filesystem::path output_dir;
    FitConfig config;
    std::string init = "landmarks";  // zeros | landmarks
    int threads = 0;
};
CommandResult cmd_fit(const FitOptions& options);

struct AverageOptions {
    std::vector<std::filesystem::path> inputs;  ///< image, mask, image, mask, ...
    std::filesystem::path output;
    std::filesystem::path coverage;  ///< optional coverage map
};
CommandResult cmd_average(const AverageOptions& options);

struct SynthDataOptions {
    std::filesystem::path model_path;
    int count = 50;
    std::uint64_t seed = 7;
    double noise_std = 0.0;
    std::filesystem::path output_dir;
    int image_size = 128;
    double max_angle = 0.25;   ///< per pitch/yaw/roll component, radians
    double max_shift = 6.0;    ///< pixels around the image centre
    double min_scale = 0.8;
    double max_scale = 0.95;
    int threads = 0;
};
CommandResult cmd_synth_data(const SynthDataOptions& options);

/// Pose/shape text files shared by fit and synth-data.
void write_theta(const std::filesystem::path& path, const PoseShapeParams& theta);
PoseShapeParams read_theta(const std::filesystem::path& path);

}  // namespace shapewarp::cli
