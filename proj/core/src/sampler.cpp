/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/sampler.cpp
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

#include "shapewarp/parallel.hpp"

#include <Eigen/Geometry>
#include "shapewarp/transform.hpp"

#include <array>
#include <cmath>

namespace shapewarp {

namespace {

// Reads pixel (j, k) in the 1-based sampling convention, zero outside.
inline double padded(const Image& image, long j, long k, int c) {
    if (j < 1 || j > image.height || k < 1 || k > image.width) return 0.0;
    return image.at(static_cast<int>(j - 1), static_cast<int>(k - 1), c);
}

}  // namespace

FlatImage bilinear_sample(const Image& image, const SampleGrid& grid) {
    const int n = static_cast<int>(grid.cols());
    const int channels = image.channels;
    FlatImage out(n, channels);
    // The weighted form below keeps two symmetries the losses rely on: terms
    // of a mirrored sample are the bit-identical products in swapped order,
    // and fl((1-f) + f) == 1 so weights always partition unity.
    parallel_for(0, n, [&](int i) {
        const double x = grid(0, i);
        const double y = grid(1, i);
        const long k0 = static_cast<long>(std::floor(x));
        const long j0 = static_cast<long>(std::floor(y));
        const double fx = x - static_cast<double>(k0);
        const double fy = y - static_cast<double>(j0);
        const double wx0 = 1.0 - fx, wx1 = fx;
        const double wy0 = 1.0 - fy, wy1 = fy;
        for (int c = 0; c < channels; ++c) {
            const double row0 = wx0 * padded(image, j0, k0, c) + wx1 * padded(image, j0, k0 + 1, c);
            const double row1 = wx0 * padded(image, j0 + 1, k0, c) +
                                wx1 * padded(image, j0 + 1, k0 + 1, c);
            out(i, c) = wy0 * row0 + wy1 * row1;
        }
    });
    return out;
}

BilinearGrads bilinear_backward(const Image& image, const SampleGrid& grid,
                                const FlatImage& grad_out) {
    const int n = static_cast<int>(grid.cols());
    if (grad_out.rows() != n || grad_out.cols() != image.channels)
        throw std::invalid_argument("bilinear_backward: grad_out shape mismatch");
    BilinearGrads grads;
    grads.grad_image = Image(image.height, image.width, image.channels, 0.0);
    grads.grad_grid = SampleGrid::Zero(2, n);
    // Serial scatter into grad_image keeps accumulation order fixed.
    for (int i = 0; i < n; ++i) {
        const double x = grid(0, i);
        const double y = grid(1, i);
        const long k0 = static_cast<long>(std::floor(x));
        const long j0 = static_cast<long>(std::floor(y));
        const double fx = x - static_cast<double>(k0);
        const double fy = y - static_cast<double>(j0);
        const double wx[2] = {1.0 - fx, fx};
        const double wy[2] = {1.0 - fy, fy};
        double gx = 0.0, gy = 0.0;
        for (int c = 0; c < image.channels; ++c) {
            const double g = grad_out(i, c);
            const double v00 = padded(image, j0, k0, c);
            const double v01 = padded(image, j0, k0 + 1, c);
            const double v10 = padded(image, j0 + 1, k0, c);
            const double v11 = padded(image, j0 + 1, k0 + 1, c);
            gx += g * (wy[0] * (v01 - v00) + wy[1] * (v11 - v10));
            gy += g * (wx[0] * (v10 - v00) + wx[1] * (v11 - v01));
            for (int dj = 0; dj < 2; ++dj) {
                const long j = j0 + dj;
                if (j < 1 || j > image.height) continue;
                for (int dk = 0; dk < 2; ++dk) {
                    const long k = k0 + dk;
                    if (k < 1 || k > image.width) continue;
                    grads.grad_image.at(static_cast<int>(j - 1), static_cast<int>(k - 1), c) +=
                        g * wy[dj] * wx[dk];
                }
            }
        }
        grads.grad_grid(0, i) = gx;
        grads.grad_grid(1, i) = gy;
    }
    return grads;
}

std::vector<std::array<int, 3>> grid_triangles(int grid_height, int grid_width) {
    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<std::size_t>(grid_height - 1) * (grid_width - 1) * 2);
    for (int a = 0; a + 1 < grid_height; ++a) {
        for (int b = 0; b + 1 < grid_width; ++b) {
            const int tl = a * grid_width + b;
            const int tr = tl + 1;
            const int bl = tl + grid_width;
            const int br = bl + 1;
            tris.push_back({tl, br, bl});
            tris.push_back({tl, tr, br});
        }
    }
    return tris;
}

Eigen::Matrix3Xd grid_vertex_normals(const ShapeInstance& positions, int grid_height,
                                     int grid_width, int* degenerate_count) {
    const int n = grid_height * grid_width;
    if (positions.cols() != n)
        throw std::invalid_argument("grid_vertex_normals: vertex count mismatch");
    const auto tris = grid_triangles(grid_height, grid_width);
    const int num_tris = static_cast<int>(tris.size());

    // Raw cross products carry twice the face area, which gives the
    // area-weighted average directly.
    Eigen::Matrix3Xd face_normals(3, num_tris);
    parallel_for(0, num_tris, [&](int f) {
        const auto& t = tris[f];
        const Eigen::Vector3d e1 = positions.col(t[1]) - positions.col(t[0]);
        const Eigen::Vector3d e2 = positions.col(t[2]) - positions.col(t[0]);
        face_normals.col(f) = e1.cross(e2);
    });

    Eigen::Matrix3Xd normals(3, n);
    std::vector<int> degenerate_flags(n, 0);
    parallel_for(0, n, [&](int idx) {
        const int a = idx / grid_width;
        const int b = idx % grid_width;
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        // Incident triangles, gathered per quad in row-major quad order.
        for (int qa = a - 1; qa <= a; ++qa) {
            if (qa < 0 || qa + 1 >= grid_height) continue;
            for (int qb = b - 1; qb <= b; ++qb) {
                if (qb < 0 || qb + 1 >= grid_width) continue;
                const int base = 2 * (qa * (grid_width - 1) + qb);
                for (int s = 0; s < 2; ++s) {
                    const auto& t = tris[base + s];
                    if (t[0] == idx || t[1] == idx || t[2] == idx) sum += face_normals.col(base + s);
                }
            }
        }
        const double len = sum.norm();
        if (len < 1e-300) {
            normals.col(idx).setZero();
            degenerate_flags[idx] = 1;
        } else {
            normals.col(idx) = sum / len;
        }
    });
    if (degenerate_count) {
        int count = 0;
        for (int flag : degenerate_flags) count += flag;
        *degenerate_count = count;
    }
    return normals;
}

OcclusionMask compute_occlusion(const MorphableModel& model, const RotationMatrix& rotation,
                                const Eigen::VectorXd& alpha) {
    const ShapeInstance shape = synthesize_shape(model, alpha);
    int degenerate = 0;
    const Eigen::Matrix3Xd normals =
        grid_vertex_normals(shape, model.grid_height, model.grid_width, &degenerate);
    const int n = model.num_vertices();
    OcclusionMask mask;
    mask.bits.assign(n, 0);
    mask.degenerate_count = degenerate;
    const Eigen::RowVector3d view_row = rotation.row(2);
    parallel_for(0, n, [&](int i) {
        // Ties (n_z == 0) and degenerate zero normals count as occluded:
        // profile-edge samples are unreliable.
        mask.bits[i] = view_row.dot(normals.col(i)) > 0.0 ? 1 : 0;
    });
    return mask;
}

FlatImage mask_sample(const FlatImage& sampled, const OcclusionMask& mask) {
    if (sampled.rows() != mask.size())
        throw std::invalid_argument("mask_sample: mask size mismatch");
    FlatImage out = sampled;
    for (int i = 0; i < out.rows(); ++i)
        if (!mask.bits[i]) out.row(i).setZero();
    return out;
}

std::pair<FlatImage, Eigen::VectorXd> mask_sample_backward(const FlatImage& sampled,
                                                           const OcclusionMask& mask,
                                                           const FlatImage& grad_out) {
    if (sampled.rows() != mask.size() || grad_out.rows() != sampled.rows() ||
        grad_out.cols() != sampled.cols())
        throw std::invalid_argument("mask_sample_backward: shape mismatch");
    FlatImage grad_sampled = grad_out;
    Eigen::VectorXd grad_mask(sampled.rows());
    for (int i = 0; i < sampled.rows(); ++i) {
        if (!mask.bits[i]) grad_sampled.row(i).setZero();
        grad_mask(i) = grad_out.row(i).dot(sampled.row(i));
    }
    return {std::move(grad_sampled), std::move(grad_mask)};
}

}  // namespace shapewarp
