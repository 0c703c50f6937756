/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tools/src/commands.cpp
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

#include "shapewarp/flatten.hpp"
#include "shapewarp/gradcheck.hpp"
#include "shapewarp/image_io.hpp"
#include "shapewarp/mesh.hpp"
#include "shapewarp/model.hpp"
#include "shapewarp/model_io.hpp"
#include "shapewarp/parallel.hpp"
#include "shapewarp/random.hpp"
#include "shapewarp/sampler.hpp"
#include "shapewarp/transform.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace shapewarp::cli {

namespace fs = std::filesystem;

namespace {

// Stage-and-rename so a failed command never leaves a partial artifact.
template <typename Writer>
void atomic_write(const fs::path& path, Writer&& writer) {
    const fs::path staged = path.string() + ".tmp";
    try {
        writer(staged);
        fs::rename(staged, path);
    } catch (...) {
        std::error_code ignored;
        fs::remove(staged, ignored);
        throw;
    }
}

std::string format_double(double value) {
    std::ostringstream out;
    out << std::setprecision(17) << value;
    return out.str();
}

Eigen::Vector3d sample_bounded_rotation(Rng& rng, double max_angle) {
    const double pitch = rng.uniform(-max_angle, max_angle);
    const double yaw = rng.uniform(-max_angle, max_angle);
    const double roll = rng.uniform(-max_angle, max_angle);
    const RotationMatrix rotation = axis_angle_to_matrix(Eigen::Vector3d(0, 0, roll)) *
                                    axis_angle_to_matrix(Eigen::Vector3d(pitch, 0, 0)) *
                                    axis_angle_to_matrix(Eigen::Vector3d(0, yaw, 0));
    const double cos_angle = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
    const double angle = std::acos(cos_angle);
    if (angle < 1e-12) return Eigen::Vector3d::Zero();
    Eigen::Vector3d axis(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                         rotation(1, 0) - rotation(0, 1));
    return angle * axis / (2.0 * std::sin(angle));
}

OcclusionMask mask_from_image(const Image& image) {
    OcclusionMask mask;
    mask.bits.resize(static_cast<std::size_t>(image.height) * image.width);
    for (int j = 0; j < image.height; ++j)
        for (int k = 0; k < image.width; ++k)
            mask.bits[static_cast<std::size_t>(j) * image.width + k] =
                image.at(j, k, 0) > 0.5 ? 1 : 0;
    return mask;
}

}  // namespace

void write_theta(const fs::path& path, const PoseShapeParams& theta) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write theta file: " + path.string());
    out << std::setprecision(17);
    out << "rotation " << theta.rotation(0) << ' ' << theta.rotation(1) << ' '
        << theta.rotation(2) << '\n';
    out << "translation " << theta.translation(0) << ' ' << theta.translation(1) << '\n';
    out << "log_scale " << theta.log_scale << '\n';
    out << "alpha";
    for (int k = 0; k < theta.alpha.size(); ++k) out << ' ' << theta.alpha(k);
    out << '\n';
}

PoseShapeParams read_theta(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open theta file: " + path.string());
    PoseShapeParams theta;
    std::string line;
    std::vector<double> alpha;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string tag;
        if (!(row >> tag)) continue;
        if (tag == "rotation") {
            row >> theta.rotation(0) >> theta.rotation(1) >> theta.rotation(2);
        } else if (tag == "translation") {
            row >> theta.translation(0) >> theta.translation(1);
        } else if (tag == "log_scale") {
            row >> theta.log_scale;
        } else if (tag == "alpha") {
            double value;
            while (row >> value) alpha.push_back(value);
        } else {
            throw std::invalid_argument("unknown theta record: " + tag);
        }
        if (row.fail() && tag != "alpha")
            throw std::invalid_argument("malformed theta record: " + line);
    }
    theta.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), alpha.size());
    return theta;
}

CommandResult cmd_gen_model(const GenModelOptions& options) {
    if (options.output.empty()) throw std::invalid_argument("gen-model requires --output");
    const MorphableModel model = make_synthetic_model(options.seed, options.height,
                                                      options.width, options.modes,
                                                      options.convex);
    atomic_write(options.output, [&](const fs::path& staged) { save_model(staged, model); });
    CommandResult result;
    result.summary = "synthetic model: N=" + std::to_string(model.num_vertices()) +
                     " (" + std::to_string(options.height) + "x" +
                     std::to_string(options.width) + "), D=" + std::to_string(options.modes) +
                     ", landmarks=" + std::to_string(model.num_landmarks()) +
                     (options.convex ? ", convex" : ", nose bump");
    result.artifacts.push_back(options.output.string());
    return result;
}

CommandResult cmd_flatten(const FlattenOptions& options) {
    if (options.output.empty()) throw std::invalid_argument("flatten requires --output");
    WeightScheme scheme;
    if (options.weights == "uniform")
        scheme = WeightScheme::uniform;
    else if (options.weights == "cotangent")
        scheme = WeightScheme::cotangent_clamped;
    else
        throw std::invalid_argument("unknown weight scheme: " + options.weights);

    TriangleMesh mesh = load_obj(options.mesh_path);
    load_sidecar(options.sidecar_path, mesh);
    mesh.validate();

    const Embedding embedding = tutte_embed(mesh, scheme);
    const int flipped = count_flipped_triangles(mesh, embedding);
    if (flipped > 0)
        throw NumericalError("embedding has " + std::to_string(flipped) +
                             " flipped triangles");

    std::ostringstream summary;
    summary << "embedded " << mesh.num_vertices() << " vertices, " << mesh.num_faces()
            << " faces; flipped triangles: " << flipped;

    // Planar meshes should flatten onto their own xy coordinates; report the
    // deviation when that applies.
    const double z_span =
        mesh.vertices.row(2).maxCoeff() - mesh.vertices.row(2).minCoeff();
    if (z_span < 1e-12) {
        double deviation = 0.0;
        for (int v = 0; v < mesh.num_vertices(); ++v)
            deviation = std::max(
                deviation, (embedding.uv.col(v) - mesh.vertices.col(v).head<2>()).norm());
        summary << "; planar mesh, max |uv - xy| = " << deviation;
    }

    GeometryImage geometry;
    std::vector<int> landmark_indices =
        default_landmark_indices(options.height, options.width);
    if (mesh.symmetry_line_on_boundary()) {
        const MirroredMesh full = mirror_embedding(embedding, mesh);
        geometry = remesh_to_grid(full.mesh, full.embedding, {full.mesh.vertices},
                                  options.height, options.width);
        summary << "; mirrored half mesh to " << full.mesh.num_vertices() << " vertices";
    } else {
        geometry = remesh_to_grid(mesh, embedding, {mesh.vertices}, options.height,
                                  options.width);
    }
    const MorphableModel model = assemble_model(geometry, landmark_indices);
    atomic_write(options.output, [&](const fs::path& staged) { save_model(staged, model); });

    CommandResult result;
    result.artifacts.push_back(options.output.string());
    if (!options.viz_prefix.empty()) {
        const char* channel_names[3] = {"x", "y", "z"};
        for (int channel = 0; channel < 3; ++channel) {
            Image viz(options.height, options.width, 1);
            const double lo = geometry.fields[0].row(channel).minCoeff();
            const double hi = geometry.fields[0].row(channel).maxCoeff();
            const double span = std::max(hi - lo, 1e-300);
            for (int node = 0; node < options.height * options.width; ++node)
                viz.pixels[node] = (geometry.fields[0](channel, node) - lo) / span;
            const fs::path path = options.viz_prefix + "_" + channel_names[channel] + ".png";
            atomic_write(path,
                         [&](const fs::path& staged) { write_png16_gray(staged, viz); });
            result.artifacts.push_back(path.string());
        }
    }
    result.summary = summary.str();
    return result;
}

CommandResult cmd_gradcheck(const GradCheckOptions& options) {
    if (options.probes < 1) throw std::invalid_argument("gradcheck requires probes >= 1");
    const GradCheckReport report = grad_check_all(options.seed, options.probes);
    std::ostringstream summary;
    summary << std::left << std::setw(26) << "operation" << std::setw(14) << "max rel err"
            << std::setw(8) << "probes" << "notes\n";
    for (const auto& entry : report.entries) {
        summary << std::left << std::setw(26) << entry.op << std::setw(14)
                << std::setprecision(3) << std::scientific << entry.max_rel_error
                << std::defaultfloat << std::setw(8) << entry.probes << entry.notes << '\n';
        for (const auto& failure : entry.failures) summary << "    " << failure << '\n';
    }
    summary << "worst: " << std::setprecision(3) << std::scientific << report.worst();
    CommandResult result;
    result.summary = summary.str();
    if (!report.all_below(1e-5)) {
        result.exit_code = 2;
        result.summary += "\ngradient check FAILED (bound 1e-5)";
    }
    return result;
}

CommandResult cmd_fit(const FitOptions& options) {
    if (options.output_dir.empty()) throw std::invalid_argument("fit requires --output-dir");
    set_worker_cap(options.threads);
    const MorphableModel model = load_model(options.model_path);
    const Image image = read_image(options.image_path);
    const LandmarkSet landmarks =
        read_landmarks(options.landmarks_path, model.num_landmarks());

    FitConfig config = options.config;
    if (options.init == "zeros")
        config.init = InitMode::zeros;
    else if (options.init == "landmarks")
        config.init = InitMode::landmark_box;
    else
        throw std::invalid_argument("unknown init mode: " + options.init);

    const FitResult fit = fit_params(image, landmarks, model, config);

    // Derived artifacts at the fitted pose.
    const GridGenCache cache = grid_generate_cached(model, fit.theta);
    const FlatImage sampled = bilinear_sample(image, cache.points);
    const OcclusionMask mask = compute_occlusion(model, cache.rotation, fit.theta.alpha);
    const FlatImage masked = mask_sample(sampled, mask);

    double rmse = 0.0;
    int confident = 0;
    for (int i = 0; i < landmarks.size(); ++i) {
        if (landmarks.confidences(i) == 0.0) continue;
        rmse += (cache.points.col(model.landmark_indices[i]) - landmarks.points.col(i))
                    .squaredNorm();
        ++confident;
    }
    rmse = std::sqrt(rmse / std::max(1, confident));

    fs::create_directories(options.output_dir);
    CommandResult result;
    auto emit = [&result](const fs::path& path, auto&& writer) {
        atomic_write(path, writer);
        result.artifacts.push_back(path.string());
    };
    emit(options.output_dir / "theta.txt",
         [&](const fs::path& p) { write_theta(p, fit.theta); });
    emit(options.output_dir / "trace.csv", [&](const fs::path& p) {
        std::ofstream out(p);
        if (!out) throw std::invalid_argument("cannot write trace: " + p.string());
        out << std::setprecision(17);
        out << "iteration,total,landmark,symmetry,multiview,prior";
        out << ",r0,r1,r2,tx,ty,log_scale";
        for (int k = 0; k < model.num_modes(); ++k) out << ",alpha" << k;
        out << '\n';
        for (const TraceRow& row : fit.trace) {
            out << row.iteration << ',' << row.total << ',' << row.landmark << ','
                << row.symmetry << ',' << row.multiview << ',' << row.prior;
            for (int k = 0; k < row.theta.size(); ++k) out << ',' << row.theta(k);
            out << '\n';
        }
    });
    emit(options.output_dir / "sampled.png", [&](const fs::path& p) {
        write_png(p, flat_to_image(sampled, model.grid_height, model.grid_width));
    });
    emit(options.output_dir / "mask.png", [&](const fs::path& p) {
        write_png_mask(p, mask, model.grid_height, model.grid_width);
    });
    emit(options.output_dir / "output.png", [&](const fs::path& p) {
        write_png(p, flat_to_image(masked, model.grid_height, model.grid_width));
    });

    std::ostringstream summary;
    summary << "fit finished after " << fit.iterations << " iterations ("
            << (fit.converged ? "converged" : "iteration limit") << ")\n"
            << "final total loss: " << format_double(fit.trace.back().total) << '\n'
            << "final landmark RMSE: " << format_double(rmse) << " px\n"
            << "|alpha| = " << format_double(fit.theta.alpha.norm());
    result.summary = summary.str();
    return result;
}

CommandResult cmd_average(const AverageOptions& options) {
    if (options.inputs.size() < 2 || options.inputs.size() % 2 != 0)
        throw std::invalid_argument("average requires image/mask path pairs");
    if (options.output.empty()) throw std::invalid_argument("average requires --output");

    Image accumulated;
    std::vector<double> counts;
    const int pairs = static_cast<int>(options.inputs.size()) / 2;
    for (int p = 0; p < pairs; ++p) {
        const Image image = read_image(options.inputs[2 * p]);
        const OcclusionMask mask = mask_from_image(read_image(options.inputs[2 * p + 1]));
        if (mask.size() != image.height * image.width)
            throw std::invalid_argument("mask dimensions do not match image " +
                                        options.inputs[2 * p].string());
        if (p == 0) {
            accumulated = Image(image.height, image.width, image.channels, 0.0);
            counts.assign(static_cast<std::size_t>(image.height) * image.width, 0.0);
        } else if (image.height != accumulated.height || image.width != accumulated.width ||
                   image.channels != accumulated.channels) {
            throw std::invalid_argument("image dimensions differ across inputs");
        }
        for (int j = 0; j < image.height; ++j) {
            for (int k = 0; k < image.width; ++k) {
                const double visible =
                    mask.bits[static_cast<std::size_t>(j) * image.width + k];
                counts[static_cast<std::size_t>(j) * image.width + k] += visible;
                for (int c = 0; c < image.channels; ++c)
                    accumulated.at(j, k, c) += visible * image.at(j, k, c);
            }
        }
    }

    Image mean = accumulated;
    OcclusionMask coverage;
    coverage.bits.resize(counts.size());
    int never_visible = 0;
    for (int j = 0; j < mean.height; ++j) {
        for (int k = 0; k < mean.width; ++k) {
            const double count = counts[static_cast<std::size_t>(j) * mean.width + k];
            const double denom = std::max(1.0, count);
            for (int c = 0; c < mean.channels; ++c) mean.at(j, k, c) /= denom;
            coverage.bits[static_cast<std::size_t>(j) * mean.width + k] = count > 0.0 ? 1 : 0;
            if (count == 0.0) ++never_visible;
        }
    }

    CommandResult result;
    atomic_write(options.output, [&](const fs::path& p) { write_png(p, mean); });
    result.artifacts.push_back(options.output.string());
    if (!options.coverage.empty()) {
        atomic_write(options.coverage, [&](const fs::path& p) {
            write_png_mask(p, coverage, mean.height, mean.width);
        });
        result.artifacts.push_back(options.coverage.string());
    }
    result.summary = "averaged " + std::to_string(pairs) + " images; " +
                     std::to_string(never_visible) + " pixels never visible";
    return result;
}

CommandResult cmd_synth_data(const SynthDataOptions& options) {
    if (options.output_dir.empty())
        throw std::invalid_argument("synth-data requires --output-dir");
    if (options.count < 1) throw std::invalid_argument("count must be positive");
    if (options.min_scale <= 0.0 || options.max_scale < options.min_scale)
        throw std::invalid_argument("invalid scale range");
    set_worker_cap(options.threads);
    const MorphableModel model = load_model(options.model_path);

    Rng rng(options.seed);
    fs::create_directories(options.output_dir);
    CommandResult result;
    for (int index = 0; index < options.count; ++index) {
        PoseShapeParams theta;
        theta.rotation = sample_bounded_rotation(rng, options.max_angle);
        theta.log_scale = std::log(rng.uniform(options.min_scale, options.max_scale));
        const double centre = (options.image_size + 1.0) / 2.0;
        theta.translation =
            Eigen::Vector2d(centre + rng.uniform(-options.max_shift, options.max_shift),
                            centre + rng.uniform(-options.max_shift, options.max_shift));
        theta.alpha.resize(model.num_modes());
        for (int k = 0; k < model.num_modes(); ++k)
            theta.alpha(k) = std::clamp(rng.normal(), -2.0, 2.0);

        const std::uint64_t scene_seed = options.seed * 0x100000001b3ull +
                                         static_cast<std::uint64_t>(index);
        SyntheticScene scene;
        try {
            scene = render_synthetic_scene(model, theta, scene_seed, options.image_size,
                                           options.image_size, options.noise_std);
        } catch (const std::invalid_argument& error) {
            throw std::invalid_argument("scene " + std::to_string(index) + ": " +
                                        error.what());
        }

        std::ostringstream name;
        name << "scene_" << std::setw(3) << std::setfill('0') << index;
        const fs::path scene_dir = options.output_dir / name.str();
        fs::create_directories(scene_dir);
        atomic_write(scene_dir / "image.png",
                     [&](const fs::path& p) { write_png(p, scene.image); });
        atomic_write(scene_dir / "landmarks.txt",
                     [&](const fs::path& p) { write_landmarks(p, scene.landmarks); });
        atomic_write(scene_dir / "theta.txt",
                     [&](const fs::path& p) { write_theta(p, scene.true_theta); });
        result.artifacts.push_back(scene_dir.string());
    }
    result.summary = "wrote " + std::to_string(options.count) + " scenes to " +
                     options.output_dir.string();
    return result;
}

}  // namespace shapewarp::cli
