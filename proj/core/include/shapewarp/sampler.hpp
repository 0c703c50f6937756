/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/sampler.hpp
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

#include "shapewarp/image.hpp"
#include "shapewarp/model.hpp"
#include "shapewarp/types.hpp"

#include <cstdint>
#include <vector>

namespace shapewarp {

/// Binary visibility over the output grid. Vertices whose normal could not be
/// computed (zero-area star) are marked occluded and counted.
struct OcclusionMask {
    std::vector<std::uint8_t> bits;
    int degenerate_count = 0;

    int size() const { return static_cast<int>(bits.size()); }
};

/// Bilinear sampling with zero padding:
///   V_i^c = sum_jk I_jk^c max(0, 1 - |x_i - k|) max(0, 1 - |y_i - j|).
/// Integer coordinates reproduce the pixel value bit-for-bit; points more
/// than one pixel outside the raster sample zero.
FlatImage bilinear_sample(const Image& image, const SampleGrid& grid);

struct BilinearGrads {
    Image grad_image;
    SampleGrid grad_grid;
};

/// Gradients of bilinear_sample with respect to both inputs. At integer
/// sample coordinates the subgradient from the interior of the current cell
/// [floor(x), floor(x)+1) is used.
BilinearGrads bilinear_backward(const Image& image, const SampleGrid& grid,
                                const FlatImage& grad_out);

/// Splits every grid quad along its top-left to bottom-right diagonal.
/// Faces are wound so a flat height field has +z normals.
std::vector<std::array<int, 3>> grid_triangles(int grid_height, int grid_width);

/// Area-weighted vertex normals of a grid mesh (grid_triangles topology).
/// Degenerate stars yield a zero normal and bump *degenerate_count.
Eigen::Matrix3Xd grid_vertex_normals(const ShapeInstance& positions, int grid_height,
                                     int grid_width, int* degenerate_count = nullptr);

/// Back-face visibility: vertex i is visible iff the z component of
/// R * n_i(alpha) is strictly positive (viewer at z = +inf looking down -z).
/// The occlusion function carries zero gradients by contract.
OcclusionMask compute_occlusion(const MorphableModel& model, const RotationMatrix& rotation,
                                const Eigen::VectorXd& alpha);

/// W_i^c = V_i^c * M_i.
FlatImage mask_sample(const FlatImage& sampled, const OcclusionMask& mask);

/// Gradients of mask_sample: (grad wrt V, grad wrt M). The mask gradient is
/// defined but receives zero upstream gradient in the pipeline.
std::pair<FlatImage, Eigen::VectorXd> mask_sample_backward(const FlatImage& sampled,
                                                           const OcclusionMask& mask,
                                                           const FlatImage& grad_out);

}  // namespace shapewarp
