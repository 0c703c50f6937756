/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/model.cpp
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

#include "shapewarp/random.hpp"

#include <cmath>
#include <set>

namespace shapewarp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// The synthetic face spans ~100 model units so that a unit scale maps it to
// ~100 px; see the scene generator.
constexpr double kHalfExtent = 50.0;

// Dome slopes are kept below tan(3.4 deg). Every vertex normal then stays
// front-facing for view tilts up to 86.5 deg, which makes the back-face
// visibility test exact on this model over the tested rotation range.
constexpr double kSlopeX = 0.040;
constexpr double kSlopeY = 0.035;
constexpr double kTiltY = 0.008;

// Central bump for the non-convex variant; slope reaches ~57 deg so oblique
// views genuinely self-occlude.
constexpr double kBumpHeight = 18.0;
constexpr double kBumpWidth = 10.0;
constexpr double kBumpOffsetY = 5.0;

double dome_height(double x, double y, bool convex) {
    double z = 0.5 * kSlopeX * (kHalfExtent - x * x / kHalfExtent) +
               0.5 * kSlopeY * (kHalfExtent - y * y / kHalfExtent) + kTiltY * y;
    if (!convex) {
        const double dy = y - kBumpOffsetY;
        z += kBumpHeight * std::exp(-(x * x + dy * dy) / (kBumpWidth * kBumpWidth));
    }
    return z;
}

}  // namespace

void MorphableModel::validate() const {
    const int n = num_vertices();
    if (grid_height <= 0 || grid_width <= 0)
        throw std::invalid_argument("model grid dimensions must be positive");
    if (mean_shape.size() != 3 * n)
        throw std::invalid_argument("mean_shape length must be 3*N");
    if (basis.rows() != 3 * n)
        throw std::invalid_argument("basis must have 3*N rows");
    if (basis.cols() >= 3 * n)
        throw std::invalid_argument("basis must have fewer modes than 3*N");
    if (uv_coords.cols() != n)
        throw std::invalid_argument("uv_coords must have one column per vertex");
    if (static_cast<int>(sym_index.size()) != n)
        throw std::invalid_argument("sym_index must cover all vertices");
    for (int i = 0; i < n; ++i) {
        const int j = sym_index[i];
        if (j < 0 || j >= n || sym_index[j] != i)
            throw std::invalid_argument("sym_index must be an involution over [0, N)");
    }
    std::set<int> seen;
    for (int idx : landmark_indices) {
        if (idx < 0 || idx >= n)
            throw std::invalid_argument("landmark index out of range");
        if (!seen.insert(idx).second)
            throw std::invalid_argument("landmark indices must be distinct");
    }
    if (static_cast<int>(symmetry_sign.size()) != num_modes())
        throw std::invalid_argument("symmetry_sign must have one entry per mode");
    for (int s : symmetry_sign)
        if (s != 1 && s != -1)
            throw std::invalid_argument("symmetry_sign entries must be +1 or -1");
}

Eigen::VectorXd MorphableModel::mirror_stacked(const Eigen::VectorXd& stacked) const {
    const int n = num_vertices();
    if (stacked.size() != 3 * n)
        throw std::invalid_argument("stacked vector length must be 3*N");
    Eigen::VectorXd out(3 * n);
    for (int i = 0; i < n; ++i) {
        const int j = sym_index[i];
        out(3 * i + 0) = -stacked(3 * j + 0);
        out(3 * i + 1) = stacked(3 * j + 1);
        out(3 * i + 2) = stacked(3 * j + 2);
    }
    return out;
}

ShapeInstance synthesize_shape(const MorphableModel& model, const Eigen::VectorXd& alpha) {
    if (alpha.size() != model.num_modes())
        throw std::invalid_argument("alpha length must match the number of modes");
    Eigen::VectorXd stacked = model.mean_shape;
    if (alpha.size() > 0) stacked.noalias() += model.basis * alpha;
    return Eigen::Map<const ShapeInstance>(stacked.data(), 3, model.num_vertices());
}

Eigen::VectorXd shape_backward(const MorphableModel& model, const ShapeInstance& grad_positions) {
    if (grad_positions.cols() != model.num_vertices())
        throw std::invalid_argument("grad_positions must have one column per vertex");
    const Eigen::Map<const Eigen::VectorXd> stacked(grad_positions.data(),
                                                    3 * model.num_vertices());
    return model.basis.transpose() * stacked;
}

MorphableModel whiten_basis(const MorphableModel& model,
                            const Eigen::VectorXd& coefficient_std_devs) {
    if (coefficient_std_devs.size() != model.num_modes())
        throw std::invalid_argument("std dev vector length must match the number of modes");
    if ((coefficient_std_devs.array() <= 0.0).any())
        throw std::invalid_argument("coefficient std devs must be strictly positive");
    MorphableModel out = model;
    for (int k = 0; k < model.num_modes(); ++k)
        out.basis.col(k) *= coefficient_std_devs(k);
    return out;
}

MorphableModel make_synthetic_model(std::uint64_t seed, int grid_height, int grid_width,
                                    int num_modes, bool convex) {
    if (grid_height < 8 || grid_width < 8)
        throw std::invalid_argument("synthetic model grid must be at least 8x8");
    if (num_modes < 1) throw std::invalid_argument("synthetic model needs at least one mode");

    const int h = grid_height, w = grid_width;
    const int n = h * w;
    MorphableModel model;
    model.grid_height = h;
    model.grid_width = w;
    model.mean_shape.resize(3 * n);
    model.basis.resize(3 * n, num_modes);
    model.uv_coords.resize(2, n);
    model.sym_index.resize(n);
    model.symmetry_sign.resize(num_modes);

    auto grid_u = [w](int b) { return static_cast<double>(2 * b - (w - 1)) / (w - 1); };
    auto grid_v = [h](int a) { return static_cast<double>(2 * a - (h - 1)) / (h - 1); };

    for (int a = 0; a < h; ++a) {
        for (int b = 0; b < w; ++b) {
            const int idx = a * w + b;
            model.sym_index[idx] = a * w + (w - 1 - b);
            model.uv_coords(0, idx) = b + 1;
            model.uv_coords(1, idx) = a + 1;
            const int mb = w - 1 - b;
            if (b > mb) {
                // Mirror-copy the left half so bilateral symmetry is exact.
                const int midx = a * w + mb;
                model.mean_shape(3 * idx + 0) = -model.mean_shape(3 * midx + 0);
                model.mean_shape(3 * idx + 1) = model.mean_shape(3 * midx + 1);
                model.mean_shape(3 * idx + 2) = model.mean_shape(3 * midx + 2);
                continue;
            }
            const double x = kHalfExtent * grid_u(b);
            const double y = kHalfExtent * grid_v(a);
            model.mean_shape(3 * idx + 0) = x;
            model.mean_shape(3 * idx + 1) = y;
            model.mean_shape(3 * idx + 2) = dome_height(x, y, convex);
        }
    }

    Rng rng(seed);
    for (int k = 0; k < num_modes; ++k) {
        const int sign = (k % 2 == 0) ? 1 : -1;
        model.symmetry_sign[k] = sign;
        const int mu = 1 + (k / 2) % 3;
        const int nv = 1 + ((k / 2) / 3) % 3;
        const double ax = rng.uniform(0.5, 1.2);
        const double ay = rng.uniform(0.5, 1.2);
        const double az = rng.uniform(0.15, 0.35);
        const double py = rng.uniform(0.0, 2.0 * kPi);
        const double pz = rng.uniform(0.0, 2.0 * kPi);
        for (int a = 0; a < h; ++a) {
            for (int b = 0; b < w; ++b) {
                const int idx = a * w + b;
                const int mb = w - 1 - b;
                if (b > mb) {
                    const int midx = a * w + mb;
                    // Enforce mode parity exactly by mirroring the left half:
                    // symmetric modes mirror like the mean, antisymmetric
                    // modes pick up a global sign flip.
                    model.basis(3 * idx + 0, k) = -sign * model.basis(3 * midx + 0, k);
                    model.basis(3 * idx + 1, k) = sign * model.basis(3 * midx + 1, k);
                    model.basis(3 * idx + 2, k) = sign * model.basis(3 * midx + 2, k);
                    continue;
                }
                const double u = grid_u(b);
                const double v = grid_v(a);
                const double even_u = std::cos(mu * kPi * u);
                const double odd_u = std::sin(mu * kPi * u);
                if (sign > 0) {
                    model.basis(3 * idx + 0, k) = ax * odd_u * std::cos(nv * kPi * v + py);
                    model.basis(3 * idx + 1, k) = ay * even_u * std::sin(nv * kPi * v + py);
                    model.basis(3 * idx + 2, k) = az * even_u * std::cos(nv * kPi * v + pz);
                } else {
                    model.basis(3 * idx + 0, k) = ax * even_u * std::cos(nv * kPi * v + py);
                    model.basis(3 * idx + 1, k) = ay * odd_u * std::sin(nv * kPi * v + py);
                    model.basis(3 * idx + 2, k) = az * odd_u * std::cos(nv * kPi * v + pz);
                }
            }
        }
    }

    model.landmark_indices = default_landmark_indices(h, w);

    model.validate();
    return model;
}

std::vector<int> default_landmark_indices(int grid_height, int grid_width) {
    const double frac_x[3] = {0.2, 0.5, 0.8};
    const double frac_y[5] = {0.15, 0.325, 0.5, 0.675, 0.85};
    std::vector<int> indices;
    indices.reserve(15);
    for (double fy : frac_y) {
        for (double fx : frac_x) {
            const int col = static_cast<int>(std::lround(fx * (grid_width - 1)));
            const int row = static_cast<int>(std::lround(fy * (grid_height - 1)));
            indices.push_back(row * grid_width + col);
        }
    }
    return indices;
}

}  // namespace shapewarp
