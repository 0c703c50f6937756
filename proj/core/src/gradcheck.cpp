/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/gradcheck.cpp
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
#include "shapewarp/gradcheck.hpp"

#include "shapewarp/losses.hpp"
#include "shapewarp/model.hpp"
#include "shapewarp/random.hpp"
#include "shapewarp/sampler.hpp"
#include "shapewarp/transform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace shapewarp {

namespace {

double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

// Central finite difference of a scalar function along one direction.
double central_difference(const std::function<double(double)>& f, double h) {
    return (f(h) - f(-h)) / (2.0 * h);
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// Rotation probe away from the r = 0 branch and from pi flips.
Eigen::Vector3d random_rotation(Rng& rng) {
    Eigen::Vector3d axis = random_vector(rng, 3);
    while (axis.norm() < 1e-3) axis = random_vector(rng, 3);
    axis.normalize();
    return rng.uniform(0.1, 2.5) * axis;
}

struct Checker {
    GradCheckReport& report;
    int probes;

    void run(const std::string& name, const std::string& notes,
             const std::function<double(Rng&)>& probe_error, Rng& rng) {
        GradCheckEntry entry;
        entry.op = name;
        entry.probes = probes;
        entry.notes = notes;
        for (int p = 0; p < probes; ++p) {
            const double err = probe_error(rng);
            entry.max_rel_error = std::max(entry.max_rel_error, err);
            if (err > 1e-5)
                entry.failures.push_back("probe " + std::to_string(p) + ": rel error " +
                                         std::to_string(err));
        }
        report.entries.push_back(std::move(entry));
    }
};

}  // namespace

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_error);
    return w;
}

bool GradCheckReport::all_below(double bound) const {
    for (const auto& e : entries)
        if (!(e.max_rel_error < bound)) return false;
    return true;
}

GradCheckReport grad_check_all(std::uint64_t seed, int probes) {
    if (probes < 1) throw std::invalid_argument("probes must be >= 1");
    GradCheckReport report;
    Checker checker{report, probes};
    Rng rng(seed);
    const double h = 1e-5;

    // Small fixtures keep each probe cheap.
    const MorphableModel model = make_synthetic_model(7, 12, 12, 5);
    const int n = model.num_vertices();
    const int d = model.num_modes();

    Image image(24, 24, 2);
    {
        Rng tex(seed ^ 0xabcdef1234ull);
        for (auto& p : image.pixels) p = tex.uniform();
    }
    auto random_interior_grid = [&](Rng& r, int count) {
        SampleGrid g(2, count);
        for (int i = 0; i < count; ++i) {
            // Fractional offsets stay in [0.2, 0.8]: integer-coordinate
            // sample points are non-differentiable and excluded by design.
            g(0, i) = r.uniform_int(2, image.width - 2) + r.uniform(0.2, 0.8);
            g(1, i) = r.uniform_int(2, image.height - 2) + r.uniform(0.2, 0.8);
        }
        return g;
    };

    checker.run("shape_backward", "", [&](Rng& r) {
        const Eigen::VectorXd alpha = random_vector(r, d);
        const Eigen::MatrixXd weights = random_matrix(r, 3, n);
        const Eigen::VectorXd direction = random_vector(r, d);
        const Eigen::VectorXd analytic_grad = shape_backward(model, weights);
        const double analytic = analytic_grad.dot(direction);
        const double numeric = central_difference(
            [&](double t) {
                const ShapeInstance s = synthesize_shape(model, alpha + t * direction);
                return (weights.array() * s.array()).sum();
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("axis_angle_jacobian", "r = 0 probe checked exactly elsewhere", [&](Rng& r) {
        const Eigen::Vector3d rot = random_rotation(r);
        const auto jac = axis_angle_jacobian(rot);
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int row = 0; row < 3; ++row) {
                for (int col = 0; col < 3; ++col) {
                    const double numeric = central_difference(
                        [&](double t) {
                            Eigen::Vector3d shifted = rot;
                            shifted(i) += t;
                            return axis_angle_to_matrix(shifted)(row, col);
                        },
                        1e-6);
                    worst = std::max(worst, rel_error(jac[i](row, col), numeric));
                }
            }
        }
        return worst;
    }, rng);

    checker.run("rotate_points", "", [&](Rng& r) {
        const Eigen::Vector3d rot = random_rotation(r);
        const RotationMatrix rotation = axis_angle_to_matrix(rot);
        const ShapeInstance points = random_matrix(r, 3, 16);
        const ShapeInstance weights = random_matrix(r, 3, 16);
        const auto [grad_rotation, grad_points] = rotate_points_backward(rotation, points, weights);
        const ShapeInstance dir_points = random_matrix(r, 3, 16);
        const double analytic_points = (grad_points.array() * dir_points.array()).sum();
        const double numeric_points = central_difference(
            [&](double t) {
                return (weights.array() *
                        rotate_points(rotation, points + t * dir_points).array()).sum();
            },
            h);
        // grad wrt R probed along a random matrix direction (R unconstrained).
        const Eigen::Matrix3d dir_rotation = random_matrix(r, 3, 3);
        const double analytic_rotation = (grad_rotation.array() * dir_rotation.array()).sum();
        const double numeric_rotation = central_difference(
            [&](double t) {
                return (weights.array() *
                        ((rotation + t * dir_rotation) * points).array()).sum();
            },
            h);
        return std::max(rel_error(analytic_points, numeric_points),
                        rel_error(analytic_rotation, numeric_rotation));
    }, rng);

    checker.run("project_ortho", "", [&](Rng& r) {
        const ShapeInstance points = random_matrix(r, 3, 16);
        const SampleGrid weights = random_matrix(r, 2, 16);
        const ShapeInstance grad = project_ortho_backward(weights);
        const ShapeInstance direction = random_matrix(r, 3, 16);
        const double analytic = (grad.array() * direction.array()).sum();
        const double numeric = central_difference(
            [&](double t) {
                return (weights.array() * project_ortho(points + t * direction).array()).sum();
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("exp_scale", "", [&](Rng& r) {
        const double logs = r.uniform(-1.0, 1.0);
        const double analytic = exp_scale(logs);  // d exp / d logs = exp
        const double numeric = central_difference(
            [&](double t) { return exp_scale(logs + t); }, h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("scale_points", "", [&](Rng& r) {
        const double scale = std::exp(r.uniform(-1.0, 1.0));
        const SampleGrid points = random_matrix(r, 2, 16);
        const SampleGrid weights = random_matrix(r, 2, 16);
        const auto [grad_scale, grad_points] = scale_points_backward(scale, points, weights);
        const double numeric_scale = central_difference(
            [&](double t) {
                return (weights.array() * scale_points(scale + t, points).array()).sum();
            },
            h);
        const SampleGrid direction = random_matrix(r, 2, 16);
        const double analytic_points = (grad_points.array() * direction.array()).sum();
        const double numeric_points = central_difference(
            [&](double t) {
                return (weights.array() * scale_points(scale, points + t * direction).array())
                    .sum();
            },
            h);
        return std::max(rel_error(grad_scale, numeric_scale),
                        rel_error(analytic_points, numeric_points));
    }, rng);

    checker.run("translate_points", "", [&](Rng& r) {
        const SampleGrid points = random_matrix(r, 2, 16);
        const SampleGrid weights = random_matrix(r, 2, 16);
        const auto [grad_t, grad_points] = translate_points_backward(weights);
        const Eigen::Vector2d dir_t = random_vector(r, 2);
        const double analytic_t = grad_t.dot(dir_t);
        const double numeric_t = central_difference(
            [&](double t) {
                return (weights.array() *
                        translate_points(t * dir_t, points).array()).sum();
            },
            h);
        const SampleGrid direction = random_matrix(r, 2, 16);
        const double analytic_points = (grad_points.array() * direction.array()).sum();
        const double numeric_points = central_difference(
            [&](double t) {
                return (weights.array() *
                        translate_points(Eigen::Vector2d::Zero(), points + t * direction)
                            .array()).sum();
            },
            h);
        return std::max(rel_error(analytic_t, numeric_t),
                        rel_error(analytic_points, numeric_points));
    }, rng);

    checker.run("grid_generate", "full chain, every theta entry", [&](Rng& r) {
        PoseShapeParams theta;
        theta.rotation = random_rotation(r);
        theta.translation = random_vector(r, 2);
        theta.log_scale = r.uniform(-0.5, 0.5);
        theta.alpha = random_vector(r, d);
        const Eigen::MatrixXd weights = random_matrix(r, 2, n);
        const GridGenCache cache = grid_generate_cached(model, theta);
        const ThetaGradient grad = grid_generate_backward(model, theta, cache, weights);
        const Eigen::VectorXd packed_grad = grad.pack();
        const Eigen::VectorXd packed = theta.pack();
        const Eigen::VectorXd direction = random_vector(r, packed.size());
        const double analytic = packed_grad.dot(direction);
        const double numeric = central_difference(
            [&](double t) {
                const PoseShapeParams shifted =
                    PoseShapeParams::unpack(packed + t * direction);
                return (weights.array() * grid_generate(model, shifted).array()).sum();
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("bilinear_sample.grid", "integer-coordinate sample points excluded", [&](Rng& r) {
        const SampleGrid grid = random_interior_grid(r, 24);
        const FlatImage weights = random_matrix(r, 24, image.channels);
        const BilinearGrads grads = bilinear_backward(image, grid, weights);
        const SampleGrid direction = random_matrix(r, 2, 24);
        const double analytic = (grads.grad_grid.array() * direction.array()).sum();
        const double numeric = central_difference(
            [&](double t) {
                return (weights.array() *
                        bilinear_sample(image, grid + t * direction).array()).sum();
            },
            1e-6);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("bilinear_sample.image", "linear in the image", [&](Rng& r) {
        const SampleGrid grid = random_interior_grid(r, 24);
        const FlatImage weights = random_matrix(r, 24, image.channels);
        const BilinearGrads grads = bilinear_backward(image, grid, weights);
        Image direction = image;
        for (auto& p : direction.pixels) p = r.normal();
        double analytic = 0.0;
        for (std::size_t i = 0; i < image.pixels.size(); ++i)
            analytic += grads.grad_image.pixels[i] * direction.pixels[i];
        const double numeric = central_difference(
            [&](double t) {
                Image shifted = image;
                for (std::size_t i = 0; i < shifted.pixels.size(); ++i)
                    shifted.pixels[i] += t * direction.pixels[i];
                return (weights.array() * bilinear_sample(shifted, grid).array()).sum();
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("mask_sample", "mask held fixed", [&](Rng& r) {
        const FlatImage sampled = random_matrix(r, n, 2);
        OcclusionMask mask;
        mask.bits.resize(n);
        for (auto& b : mask.bits) b = r.uniform() < 0.7 ? 1 : 0;
        const FlatImage weights = random_matrix(r, n, 2);
        const auto [grad_sampled, grad_mask] = mask_sample_backward(sampled, mask, weights);
        const FlatImage direction = random_matrix(r, n, 2);
        const double analytic = (grad_sampled.array() * direction.array()).sum();
        const double numeric = central_difference(
            [&](double t) {
                return (weights.array() *
                        mask_sample(sampled + t * direction, mask).array()).sum();
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("symmetry_loss", "masks held fixed", [&](Rng& r) {
        const FlatImage sampled = random_matrix(r, n, 2);
        OcclusionMask mask;
        mask.bits.resize(n);
        for (auto& b : mask.bits) b = r.uniform() < 0.8 ? 1 : 0;
        const LossValue loss = symmetry_loss(sampled, mask, model.sym_index);
        const FlatImage direction = random_matrix(r, n, 2);
        const double analytic = (loss.grad_sampled.array() * direction.array()).sum();
        const double numeric = central_difference(
            [&](double t) {
                return symmetry_loss(sampled + t * direction, mask, model.sym_index).value;
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("multiview_loss", "masks held fixed", [&](Rng& r) {
        const FlatImage a = random_matrix(r, n, 2);
        const FlatImage b = random_matrix(r, n, 2);
        OcclusionMask mask_a, mask_b;
        mask_a.bits.resize(n);
        mask_b.bits.resize(n);
        for (auto& bit : mask_a.bits) bit = r.uniform() < 0.8 ? 1 : 0;
        for (auto& bit : mask_b.bits) bit = r.uniform() < 0.8 ? 1 : 0;
        const LossValue loss = multiview_loss(a, mask_a, b, mask_b);
        const FlatImage dir_a = random_matrix(r, n, 2);
        const FlatImage dir_b = random_matrix(r, n, 2);
        const double analytic = (loss.grad_sampled.array() * dir_a.array()).sum() +
                                (loss.grad_sampled_b.array() * dir_b.array()).sum();
        const double numeric = central_difference(
            [&](double t) {
                return multiview_loss(a + t * dir_a, mask_a, b + t * dir_b, mask_b).value;
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("landmark_loss", "", [&](Rng& r) {
        const SampleGrid grid = random_matrix(r, 2, n);
        LandmarkSet landmarks;
        landmarks.points = random_matrix(r, 2, model.num_landmarks());
        landmarks.confidences = Eigen::VectorXd::Zero(model.num_landmarks());
        for (int i = 0; i < model.num_landmarks(); ++i)
            landmarks.confidences(i) = r.uniform(0.0, 2.0);
        const LossValue loss = landmark_loss(grid, model, landmarks);
        const SampleGrid direction = random_matrix(r, 2, n);
        const double analytic = (loss.grad_grid.array() * direction.array()).sum();
        const double numeric = central_difference(
            [&](double t) {
                return landmark_loss(grid + t * direction, model, landmarks).value;
            },
            h);
        return rel_error(analytic, numeric);
    }, rng);

    checker.run("prior_loss", "", [&](Rng& r) {
        const Eigen::VectorXd alpha = random_vector(r, d);
        const LossValue loss = prior_loss(alpha);
        const Eigen::VectorXd direction = random_vector(r, d);
        const double analytic = loss.grad_alpha.dot(direction);
        const double numeric = central_difference(
            [&](double t) { return prior_loss(alpha + t * direction).value; }, h);
        return rel_error(analytic, numeric);
    }, rng);

    return report;
}

}  // namespace shapewarp
