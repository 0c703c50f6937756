/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/model.hpp
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

#include "shapewarp/types.hpp"

#include <cstdint>
#include <vector>

namespace shapewarp {

/// Linear statistical shape model over a regular H x W vertex grid.
///
/// Vertices are ordered row-major over the grid; the stacked shape vector
/// interleaves (x, y, z) per vertex, so vertex j (0-based) occupies entries
/// [3j, 3j+2]. A shape instance is mean_shape + basis * alpha.
struct MorphableModel {
    Eigen::VectorXd mean_shape;          ///< length 3N
    Eigen::MatrixXd basis;               ///< 3N x D, one deformation mode per column
    int grid_height = 0;                 ///< H
    int grid_width = 0;                  ///< W
    Eigen::Matrix2Xd uv_coords;          ///< 2xN output-grid coordinates (column, row), 1-based
    std::vector<int> sym_index;          ///< bilateral mirror map, an involution over [0, N)
    std::vector<int> landmark_indices;   ///< L distinct vertex indices
    std::vector<int> symmetry_sign;      ///< per mode: +1 mirror-symmetric, -1 antisymmetric

    int num_vertices() const { return grid_height * grid_width; }
    int num_modes() const { return static_cast<int>(basis.cols()); }
    int num_landmarks() const { return static_cast<int>(landmark_indices.size()); }

    /// Checks structural invariants (sizes, involution, distinct landmarks).
    /// Throws std::invalid_argument on violation.
    void validate() const;

    /// Applies the mirror operator to a stacked shape vector: permutes
    /// vertices by sym_index and negates x coordinates.
    Eigen::VectorXd mirror_stacked(const Eigen::VectorXd& stacked) const;
};

/// shape(alpha) = reshape(basis * alpha + mean), linear in alpha.
ShapeInstance synthesize_shape(const MorphableModel& model, const Eigen::VectorXd& alpha);

/// Adjoint of synthesize_shape: returns basis^T * vec(grad_positions) where
/// vec stacks columns in vertex order.
Eigen::VectorXd shape_backward(const MorphableModel& model, const ShapeInstance& grad_positions);

/// Scales basis column k by coefficient_std_devs[k] so that unit-variance
/// coefficients reproduce the original coefficient distribution.
MorphableModel whiten_basis(const MorphableModel& model,
                            const Eigen::VectorXd& coefficient_std_devs);

/// Builds a deterministic synthetic model: a gently sloped dome (convex
/// variant) or the same dome with a steep central bump (convex = false).
/// The mean is bilaterally symmetric by construction and each basis mode is a
/// smooth band-limited field that is either mirror-symmetric or antisymmetric
/// (recorded in symmetry_sign). The model carries 15 landmark vertices.
MorphableModel make_synthetic_model(std::uint64_t seed, int grid_height, int grid_width,
                                    int num_modes, bool convex = true);

/// The canonical 15-vertex landmark pattern (3 x 5 fractional grid
/// positions); distinct for grids of at least 8x8.
std::vector<int> default_landmark_indices(int grid_height, int grid_width);

}  // namespace shapewarp
