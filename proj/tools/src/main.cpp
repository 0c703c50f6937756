/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tools/src/main.cpp
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
#include "commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace shapewarp;
using namespace shapewarp::cli;

namespace {

// Applies a key=value configuration file with flags-beat-file semantics:
// "--config FILE" is stripped from the argument list and every key that is
// not already present as a --key option is appended as "--key=value".
std::vector<std::string> merge_config_file(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + i);
            break;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto equals = line.find('=');
        if (equals == std::string::npos)
            throw std::invalid_argument("malformed config line: " + line);
        const std::string key = line.substr(0, equals);
        const std::string flag = "--" + key;
        bool on_command_line = false;
        for (const std::string& arg : args)
            if (arg == flag || arg.rfind(flag + "=", 0) == 0) on_command_line = true;
        if (!on_command_line) args.push_back(flag + "=" + line.substr(equals + 1));
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shapewarp - differentiable morphable-shape warping toolkit"};
    app.require_subcommand(1);

    std::function<CommandResult()> command;

    // gen-model
    auto gen_options = std::make_shared<GenModelOptions>();
    {
        CLI::App* sub = app.add_subcommand("gen-model", "Generate a synthetic shape model");
        sub->add_option("--seed", gen_options->seed, "Random seed");
        sub->add_option("--height", gen_options->height, "Grid height H'");
        sub->add_option("--width", gen_options->width, "Grid width W'");
        sub->add_option("--modes", gen_options->modes, "Number of deformation modes D");
        sub->add_flag("--convex,!--nose-bump", gen_options->convex,
                      "Convex dome (default) or concave nose-bump variant");
        sub->add_option("--output", gen_options->output, "Model container output path")
            ->required();
        sub->callback([&command, gen_options] {
            command = [gen_options] { return cmd_gen_model(*gen_options); };
        });
    }

    // flatten
    auto flatten_options = std::make_shared<FlattenOptions>();
    {
        CLI::App* sub =
            app.add_subcommand("flatten", "Flatten a mesh and remesh it over a regular grid");
        sub->add_option("--mesh", flatten_options->mesh_path, "Wavefront OBJ input")
            ->required();
        sub->add_option("--sidecar", flatten_options->sidecar_path,
                        "Boundary/symmetry sidecar file")
            ->required();
        sub->add_option("--weights", flatten_options->weights,
                        "Laplacian weights: uniform | cotangent");
        sub->add_option("--height", flatten_options->height, "Grid height H'");
        sub->add_option("--width", flatten_options->width, "Grid width W'");
        sub->add_option("--output", flatten_options->output, "Model container output path")
            ->required();
        sub->add_option("--viz-prefix", flatten_options->viz_prefix,
                        "Write 16-bit coordinate PNGs with this prefix");
        sub->callback([&command, flatten_options] {
            command = [flatten_options] { return cmd_flatten(*flatten_options); };
        });
    }

    // gradcheck
    auto gradcheck_options = std::make_shared<GradCheckOptions>();
    {
        CLI::App* sub = app.add_subcommand(
            "gradcheck", "Verify analytic gradients against finite differences");
        sub->add_option("--seed", gradcheck_options->seed, "Random seed");
        sub->add_option("--probes", gradcheck_options->probes, "Probes per operation");
        sub->callback([&command, gradcheck_options] {
            command = [gradcheck_options] { return cmd_gradcheck(*gradcheck_options); };
        });
    }

    // fit
    auto fit_options = std::make_shared<FitOptions>();
    {
        CLI::App* sub = app.add_subcommand("fit", "Fit pose and shape to a single image");
        sub->add_option("--image", fit_options->image_path, "Input image (png/ppm)")
            ->required();
        sub->add_option("--landmarks", fit_options->landmarks_path, "Landmark text file")
            ->required();
        sub->add_option("--model", fit_options->model_path, "Model container")->required();
        sub->add_option("--output-dir", fit_options->output_dir, "Artifact directory")
            ->required();
        sub->add_option("--landmark-weight", fit_options->config.weights.landmark,
                        "Landmark loss weight");
        sub->add_option("--symmetry-weight", fit_options->config.weights.symmetry,
                        "Symmetry loss weight");
        sub->add_option("--multiview-weight", fit_options->config.weights.multiview,
                        "Multiview loss weight");
        sub->add_option("--prior-weight", fit_options->config.weights.prior,
                        "Prior loss weight");
        sub->add_option("--step", fit_options->config.step_size, "Initial step size");
        sub->add_option("--max-iters", fit_options->config.max_iterations,
                        "Iteration limit");
        sub->add_option("--tolerance", fit_options->config.tolerance,
                        "Relative loss-decrease stop tolerance");
        sub->add_option("--init", fit_options->init, "Initialisation: zeros | landmarks");
        sub->add_option("--threads", fit_options->threads, "Worker thread cap (0 = auto)");
        sub->callback([&command, fit_options] {
            command = [fit_options] { return cmd_fit(*fit_options); };
        });
    }

    // average
    auto average_options = std::make_shared<AverageOptions>();
    {
        CLI::App* sub = app.add_subcommand(
            "average", "Mask-weighted mean of flattened images (image mask pairs)");
        sub->add_option("inputs", average_options->inputs,
                        "Alternating flattened image and mask paths")
            ->required();
        sub->add_option("--output", average_options->output, "Mean image output path")
            ->required();
        sub->add_option("--coverage", average_options->coverage,
                        "Optional coverage-map output path");
        sub->callback([&command, average_options] {
            command = [average_options] { return cmd_average(*average_options); };
        });
    }

    // synth-data
    auto synth_options = std::make_shared<SynthDataOptions>();
    {
        CLI::App* sub =
            app.add_subcommand("synth-data", "Render ground-truth synthetic scenes");
        sub->add_option("--model", synth_options->model_path, "Model container")->required();
        sub->add_option("--count", synth_options->count, "Number of scenes");
        sub->add_option("--seed", synth_options->seed, "Random seed");
        sub->add_option("--noise-std", synth_options->noise_std,
                        "Landmark noise std (pixels)");
        sub->add_option("--output-dir", synth_options->output_dir, "Scene directory")
            ->required();
        sub->add_option("--image-size", synth_options->image_size, "Square image size");
        sub->add_option("--max-angle", synth_options->max_angle,
                        "Max pitch/yaw/roll (radians)");
        sub->add_option("--max-shift", synth_options->max_shift,
                        "Max translation from centre (pixels)");
        sub->add_option("--min-scale", synth_options->min_scale, "Minimum scale");
        sub->add_option("--max-scale", synth_options->max_scale, "Maximum scale");
        sub->add_option("--threads", synth_options->threads, "Worker thread cap (0 = auto)");
        sub->callback([&command, synth_options] {
            command = [synth_options] { return cmd_synth_data(*synth_options); };
        });
    }

    for (CLI::App* sub : app.get_subcommands({}))
        sub->add_option("--config",
                        "key=value configuration file; explicit flags win");

    std::vector<std::string> merged_args;
    try {
        merged_args = merge_config_file(argc, argv);
    } catch (const std::invalid_argument& error) {
        std::cerr << "input error: " << error.what() << '\n';
        return 1;
    }
    std::vector<const char*> arg_pointers;
    arg_pointers.reserve(merged_args.size());
    for (const std::string& arg : merged_args) arg_pointers.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(arg_pointers.size()),
                  const_cast<char**>(arg_pointers.data()));
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        app.exit(error);
        return 1;
    }

    try {
        const CommandResult result = command();
        std::cout << result.summary << '\n';
        for (const auto& artifact : result.artifacts)
            std::cout << "wrote " << artifact << '\n';
        return result.exit_code;
    } catch (const std::invalid_argument& error) {
        std::cerr << "input error: " << error.what() << '\n';
        return 1;
    } catch (const NumericalError& error) {
        std::cerr << "numerical failure: " << error.what() << '\n';
        return 2;
    } catch (const std::exception& error) {
        std::cerr << "failure: " << error.what() << '\n';
        return 2;
    }
}
