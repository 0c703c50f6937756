/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/flatten.hpp
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

#include "shapewarp/mesh.hpp"
#include "shapewarp/model.hpp"

#include <cstdint>
#include <vector>

namespace shapewarp {

/// Laplacian weighting for the harmonic solve. Uniform weights are positive
/// and keep Tutte's injectivity guarantee; cotangent weights approximate a
/// conformal flattening but can go negative, so they are clamped to 1e-6.
enum class WeightScheme { uniform, cotangent_clamped };

/// Planar coordinates in [0,1]^2, one column per mesh vertex.
struct Embedding {
    Eigen::Matrix2Xd uv;

    int size() const { return static_cast<int>(uv.cols()); }
};

/// Harmonic embedding with the boundary pinned to the unit square.
///
/// The two boundary arcs between the symmetry-line endpoints map
/// arc-length-proportionally onto the two halves of the square perimeter,
/// with the symmetry-line endpoints at the midpoints of the bottom and top
/// edges. Interior symmetry-line vertices are constrained to u = 1/2. When
/// the symmetry line runs along the boundary (a bilateral half mesh), the
/// mesh is embedded into its half of the square with the line pinned to the
/// u = 1/2 segment.
Embedding tutte_embed(const TriangleMesh& mesh, WeightScheme scheme);

/// Number of uv triangles with non-positive signed area (orientation
/// audit; zero means injective for a Tutte embedding).
int count_flipped_triangles(const TriangleMesh& mesh, const Embedding& embedding);

/// Full mesh assembled from one bilateral half: every non-symmetry-line
/// vertex gains a mirror partner with position (-x, y, z) and uv (1-u, v);
/// mirrored faces have reversed winding. sym_index is the resulting vertex
/// involution; source_vertex/is_mirrored map full vertices back to the half.
struct MirroredMesh {
    TriangleMesh mesh;
    Embedding embedding;
    std::vector<int> sym_index;
    std::vector<int> source_vertex;
    std::vector<std::uint8_t> is_mirrored;
};

MirroredMesh mirror_embedding(const Embedding& half_embedding, const TriangleMesh& half_mesh);

/// A surface (and optional deformation fields) resampled over a regular
/// grid in embedding space; fields[0] is the mean surface.
struct GeometryImage {
    int grid_height = 0;
    int grid_width = 0;
    std::vector<Eigen::Matrix3Xd> fields;  ///< each 3 x (H*W), row-major grid order
};

/// Barycentric resampling of per-vertex fields at the uniform grid nodes
/// uv(a, b) = (b/(W-1), a/(H-1)). Nodes that miss every triangle by rounding
/// are snapped to the nearest boundary point.
GeometryImage remesh_to_grid(const TriangleMesh& mesh, const Embedding& embedding,
                             const std::vector<Eigen::Matrix3Xd>& fields, int grid_height,
                             int grid_width);

/// Packs a geometry image into a MorphableModel: row-major vertex order,
/// column-mirror sym_index, grid uv coordinates, and per-mode symmetry signs
/// fitted from the basis fields.
MorphableModel assemble_model(const GeometryImage& geometry,
                              const std::vector<int>& landmark_indices);

}  // namespace shapewarp
