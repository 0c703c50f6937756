/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/raster.hpp
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
#include "shapewarp/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace shapewarp {

/// Splits grid quads so the triangulation maps onto itself under the
/// horizontal mirror: left-half quads use the TL-BR diagonal, right-half
/// quads the TR-BL diagonal, and for even widths the self-mirrored middle
/// quad becomes a four-triangle fan around its centroid. The fan centres are
/// synthesised vertices appended after the N grid vertices, returned in
/// extra_quads as (tl, tr, bl, br) so callers can average per-vertex
/// attributes for them. A mirrored shape therefore rasterises to a mirrored
/// image up to floating-point rounding.
struct SymmetricTriangulation {
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 4>> extra_quads;  ///< corner indices per fan centre
    int num_grid_vertices = 0;

    int num_vertices() const {
        return num_grid_vertices + static_cast<int>(extra_quads.size());
    }
};

SymmetricTriangulation symmetric_grid_triangulation(int grid_height, int grid_width);

/// Depth of the front surface at each vertex's own projected position.
///
/// Triangles are bucketed on a grid at oracle_scale times the output
/// resolution; for every vertex the covering triangles' plane depths are
/// evaluated at the exact projected point and the maximum kept (the viewer
/// sits at z = +inf). A vertex is visible when its own depth is within
/// depth_tolerance of that front depth.
std::vector<std::uint8_t> zbuffer_vertex_visibility(
    const Eigen::Matrix2Xd& projected, const Eigen::VectorXd& depth,
    const std::vector<std::array<int, 3>>& triangles, int grid_height, int grid_width,
    int oracle_scale = 4, double depth_tolerance = 1e-6);

/// Orthographic z-buffer rasteriser over integer pixel centres (1-based
/// sampling convention). Colours are interpolated barycentrically; the
/// background stays 0.
Image rasterize_zbuffer(const Eigen::Matrix2Xd& screen, const Eigen::VectorXd& depth,
                        const Eigen::MatrixXd& vertex_colors,
                        const std::vector<std::array<int, 3>>& triangles, int image_height,
                        int image_width);

}  // namespace shapewarp
