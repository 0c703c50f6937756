/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/mesh.hpp
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

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <vector>

namespace shapewarp {

/// Edge-manifold disk mesh with an annotated boundary cycle and a symmetry
/// line (a vertex path whose endpoints lie on the boundary). The symmetry
/// line may itself be part of the boundary, in which case the mesh is one
/// bilateral half.
struct TriangleMesh {
    Eigen::Matrix3Xd vertices;            ///< 3 x M positions, model units
    std::vector<std::array<int, 3>> faces;
    std::vector<int> boundary_loop;       ///< ordered simple cycle
    std::vector<int> symmetry_line;       ///< ordered path, boundary to boundary

    int num_vertices() const { return static_cast<int>(vertices.cols()); }
    int num_faces() const { return static_cast<int>(faces.size()); }

    /// Checks the disk invariants: valid indices, edge-manifold, Euler
    /// characteristic 1, boundary_loop a single simple cycle of all boundary
    /// edges, symmetry_line an edge path with boundary endpoints. Throws
    /// std::invalid_argument on violation.
    void validate() const;

    /// True when the symmetry line runs along the boundary (half mesh).
    bool symmetry_line_on_boundary() const;
};

/// Reads vertex and face records of a Wavefront OBJ file (v/f only).
/// Boundary and symmetry annotations come from a sidecar file.
TriangleMesh load_obj(const std::filesystem::path& obj_path);

/// Sidecar format:
///   boundary <count>
///   <count 1-based vertex indices, any line breaks>
///   symmetry <count>
///   <count indices>
void load_sidecar(const std::filesystem::path& sidecar_path, TriangleMesh& mesh);

void save_obj(const std::filesystem::path& obj_path, const TriangleMesh& mesh);
void save_sidecar(const std::filesystem::path& sidecar_path, const TriangleMesh& mesh);

/// Bilateral half of a dome over a semicircular disk (x <= 0 side), with the
/// straight diameter as the symmetry line. rings >= 2, segments >= 2 (arc
/// steps per ring); radius in model units.
TriangleMesh make_half_dome_mesh(int rings, int segments, double radius = 50.0,
                                 double height = 20.0);

}  // namespace shapewarp
