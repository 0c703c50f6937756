/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/flatten.cpp
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
#include "shapewarp/flatten.hpp"

#include "shapewarp/types.hpp"

#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace shapewarp {

namespace {

constexpr double kMinWeight = 1e-6;
constexpr double kSolveResidual = 1e-10;

using WeightMap = std::map<std::pair<int, int>, double>;

WeightMap edge_weights(const TriangleMesh& mesh, WeightScheme scheme) {
    WeightMap weights;
    auto add = [&weights](int a, int b, double w) {
        weights[{std::min(a, b), std::max(a, b)}] += w;
    };
    if (scheme == WeightScheme::uniform) {
        for (const auto& f : mesh.faces)
            for (int s = 0; s < 3; ++s) add(f[s], f[(s + 1) % 3], 0.0);
        for (auto& [edge, w] : weights) w = 1.0;
        return weights;
    }
    for (const auto& f : mesh.faces) {
        for (int s = 0; s < 3; ++s) {
            const int corner = f[s];
            const int a = f[(s + 1) % 3];
            const int b = f[(s + 2) % 3];
            const Eigen::Vector3d ea = mesh.vertices.col(a) - mesh.vertices.col(corner);
            const Eigen::Vector3d eb = mesh.vertices.col(b) - mesh.vertices.col(corner);
            const double cross_norm = ea.cross(eb).norm();
            const double cot = cross_norm > 1e-300 ? ea.dot(eb) / cross_norm : 0.0;
            add(a, b, 0.5 * cot);
        }
    }
    for (auto& [edge, w] : weights) w = std::max(w, kMinWeight);
    return weights;
}

// Reorders the boundary loop so consecutive pairs run in the direction their
// adjacent face winds them; the interior then sits on the left of travel.
std::vector<int> canonical_boundary(const TriangleMesh& mesh) {
    std::unordered_set<std::uint64_t> directed;
    for (const auto& f : mesh.faces)
        for (int s = 0; s < 3; ++s)
            directed.insert((static_cast<std::uint64_t>(
                                 static_cast<std::uint32_t>(f[s])) << 32) |
                            static_cast<std::uint32_t>(f[(s + 1) % 3]));
    std::vector<int> loop = mesh.boundary_loop;
    const std::uint64_t first_edge =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(loop[0])) << 32) |
        static_cast<std::uint32_t>(loop[1]);
    if (!directed.count(first_edge)) std::reverse(loop.begin() + 1, loop.end());
    return loop;
}

// Positions along one half of the square perimeter, parameterised by t in
// [0, total]. Each target coordinate on a square side is assigned exactly.
Eigen::Vector2d right_half_perimeter(double t, double total) {
    const double s = 2.0 * t / total;
    if (s <= 0.5) return {0.5 + s, 0.0};
    if (s <= 1.5) return {1.0, s - 0.5};
    return {2.5 - s, 1.0};
}

Eigen::Vector2d left_half_perimeter(double t, double total) {
    const double s = 2.0 * t / total;
    if (s <= 0.5) return {0.5 - s, 1.0};
    if (s <= 1.5) return {0.0, 1.5 - s};
    return {s - 1.5, 0.0};
}

std::vector<double> arc_lengths(const TriangleMesh& mesh, const std::vector<int>& path) {
    std::vector<double> cumulative(path.size(), 0.0);
    for (std::size_t i = 1; i < path.size(); ++i)
        cumulative[i] = cumulative[i - 1] +
                        (mesh.vertices.col(path[i]) - mesh.vertices.col(path[i - 1])).norm();
    return cumulative;
}

// Harmonic solve with Dirichlet constraints: interior vertices satisfy
// x_i = sum_j w_ij x_j / sum_j w_ij.
Eigen::VectorXd solve_harmonic(int num_vertices, const WeightMap& weights,
                               const std::unordered_map<int, double>& pinned) {
    std::vector<int> free_index(num_vertices, -1);
    std::vector<int> free_vertices;
    for (int v = 0; v < num_vertices; ++v) {
        if (!pinned.count(v)) {
            free_index[v] = static_cast<int>(free_vertices.size());
            free_vertices.push_back(v);
        }
    }
    Eigen::VectorXd solution(num_vertices);
    for (const auto& [v, value] : pinned) solution(v) = value;
    if (free_vertices.empty()) return solution;

    const int nf = static_cast<int>(free_vertices.size());
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(nf);
    for (const auto& [edge, w] : weights) {
        const auto [a, b] = edge;
        const int fa = free_index[a];
        const int fb = free_index[b];
        if (fa >= 0) diagonal(fa) += w;
        if (fb >= 0) diagonal(fb) += w;
        if (fa >= 0 && fb >= 0) {
            triplets.emplace_back(fa, fb, -w);
            triplets.emplace_back(fb, fa, -w);
        } else if (fa >= 0) {
            rhs(fa) += w * pinned.at(b);
        } else if (fb >= 0) {
            rhs(fb) += w * pinned.at(a);
        }
    }
    for (int i = 0; i < nf; ++i) triplets.emplace_back(i, i, diagonal(i));

    Eigen::SparseMatrix<double> laplacian(nf, nf);
    laplacian.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
    if (solver.info() != Eigen::Success)
        throw NumericalError("harmonic solve: factorisation failed");
    Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() != Eigen::Success) throw NumericalError("harmonic solve failed");
    const double residual = (laplacian * x - rhs).cwiseAbs().maxCoeff();
    if (residual > kSolveResidual * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
        // One step of iterative refinement before giving up.
        x += solver.solve(rhs - laplacian * x);
        const double retry = (laplacian * x - rhs).cwiseAbs().maxCoeff();
        if (retry > kSolveResidual * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
            throw NumericalError("harmonic solve residual too large");
    }
    for (int i = 0; i < nf; ++i) solution(free_vertices[i]) = x(i);
    return solution;
}

}  // namespace

Embedding tutte_embed(const TriangleMesh& mesh, WeightScheme scheme) {
    mesh.validate();
    const std::vector<int> loop = canonical_boundary(mesh);
    const int m = mesh.num_vertices();

    // Split the boundary at the symmetry-line endpoints.
    const int s0 = mesh.symmetry_line.front();
    const int s1 = mesh.symmetry_line.back();
    const auto pos0 = std::find(loop.begin(), loop.end(), s0) - loop.begin();
    const auto pos1 = std::find(loop.begin(), loop.end(), s1) - loop.begin();
    auto walk = [&loop](std::ptrdiff_t from, std::ptrdiff_t to) {
        std::vector<int> arc;
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(loop.size());
        for (std::ptrdiff_t i = from;; i = (i + 1) % n) {
            arc.push_back(loop[i]);
            if (i == to) break;
        }
        return arc;
    };
    const std::vector<int> arc_a = walk(pos0, pos1);  // s0 -> s1
    const std::vector<int> arc_b = walk(pos1, pos0);  // s1 -> s0

    // Half-mesh mode: the symmetry line is one of the boundary arcs.
    const bool half_mode = mesh.symmetry_line_on_boundary();
    bool sym_is_arc_a = false;
    if (half_mode) {
        std::vector<int> reversed(mesh.symmetry_line.rbegin(), mesh.symmetry_line.rend());
        if (arc_a == mesh.symmetry_line)
            sym_is_arc_a = true;
        else if (arc_b != reversed)
            throw std::invalid_argument(
                "symmetry line lies on the boundary but is not a boundary arc");
    }

    std::unordered_map<int, double> pinned_u;
    std::unordered_map<int, double> pinned_v;
    auto pin = [&](int v, const Eigen::Vector2d& target) {
        pinned_u[v] = target.x();
        pinned_v[v] = target.y();
    };
    auto pin_arc = [&](const std::vector<int>& arc, auto&& position) {
        const std::vector<double> t = arc_lengths(mesh, arc);
        const double total = t.back();
        if (!(total > 0.0)) throw std::invalid_argument("degenerate boundary arc");
        for (std::size_t i = 0; i < arc.size(); ++i) pin(arc[i], position(t[i], total));
    };

    if (!half_mode) {
        pin_arc(arc_a, right_half_perimeter);
        pin_arc(arc_b, left_half_perimeter);
        pin(s0, {0.5, 0.0});
        pin(s1, {0.5, 1.0});
        // Interior symmetry-line vertices: u pinned to the square midline.
        for (std::size_t i = 1; i + 1 < mesh.symmetry_line.size(); ++i)
            pinned_u[mesh.symmetry_line[i]] = 0.5;
    } else if (sym_is_arc_a) {
        // Outer arc (s1 -> s0) wraps the left half square; line on u = 1/2.
        pin_arc(arc_b, left_half_perimeter);
        pin_arc(arc_a, [](double t, double total) {
            return Eigen::Vector2d(0.5, t / total);
        });
        pin(s0, {0.5, 0.0});
        pin(s1, {0.5, 1.0});
    } else {
        // Outer arc (s0 -> s1) wraps the right half square.
        pin_arc(arc_a, right_half_perimeter);
        pin_arc(arc_b, [](double t, double total) {
            return Eigen::Vector2d(0.5, 1.0 - t / total);
        });
        pin(s0, {0.5, 0.0});
        pin(s1, {0.5, 1.0});
    }

    const WeightMap weights = edge_weights(mesh, scheme);
    const Eigen::VectorXd u = solve_harmonic(m, weights, pinned_u);
    const Eigen::VectorXd v = solve_harmonic(m, weights, pinned_v);
    Embedding embedding;
    embedding.uv.resize(2, m);
    embedding.uv.row(0) = u.transpose();
    embedding.uv.row(1) = v.transpose();
    return embedding;
}

int count_flipped_triangles(const TriangleMesh& mesh, const Embedding& embedding) {
    if (embedding.size() != mesh.num_vertices())
        throw std::invalid_argument("embedding size does not match mesh");
    int flipped = 0;
    for (const auto& f : mesh.faces) {
        const Eigen::Vector2d a = embedding.uv.col(f[0]);
        const Eigen::Vector2d b = embedding.uv.col(f[1]);
        const Eigen::Vector2d c = embedding.uv.col(f[2]);
        const double doubled_area =
            (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        if (doubled_area <= 0.0) ++flipped;
    }
    return flipped;
}

MirroredMesh mirror_embedding(const Embedding& half_embedding, const TriangleMesh& half_mesh) {
    half_mesh.validate();
    if (half_embedding.size() != half_mesh.num_vertices())
        throw std::invalid_argument("embedding size does not match mesh");
    if (!half_mesh.symmetry_line_on_boundary())
        throw std::invalid_argument("mirror_embedding expects a bilateral half mesh");
    for (int v : half_mesh.symmetry_line)
        if (std::abs(half_embedding.uv(0, v) - 0.5) > 1e-12)
            throw std::invalid_argument("symmetry-line vertices must sit at u = 1/2");

    const int m = half_mesh.num_vertices();
    std::unordered_set<int> on_line(half_mesh.symmetry_line.begin(),
                                    half_mesh.symmetry_line.end());
    std::vector<int> mirror_of(m, -1);
    int next = m;
    for (int v = 0; v < m; ++v) mirror_of[v] = on_line.count(v) ? v : next++;
    const int full_count = next;

    MirroredMesh out;
    out.mesh.vertices.resize(3, full_count);
    out.embedding.uv.resize(2, full_count);
    out.sym_index.assign(full_count, -1);
    out.source_vertex.assign(full_count, -1);
    out.is_mirrored.assign(full_count, 0);
    for (int v = 0; v < m; ++v) {
        out.mesh.vertices.col(v) = half_mesh.vertices.col(v);
        out.embedding.uv.col(v) = half_embedding.uv.col(v);
        out.sym_index[v] = mirror_of[v];
        out.source_vertex[v] = v;
        const int mv = mirror_of[v];
        if (mv == v) continue;
        out.mesh.vertices.col(mv) =
            Eigen::Vector3d(-half_mesh.vertices(0, v), half_mesh.vertices(1, v),
                            half_mesh.vertices(2, v));
        out.embedding.uv.col(mv) =
            Eigen::Vector2d(1.0 - half_embedding.uv(0, v), half_embedding.uv(1, v));
        out.sym_index[mv] = v;
        out.source_vertex[mv] = v;
        out.is_mirrored[mv] = 1;
    }

    out.mesh.faces = half_mesh.faces;
    for (const auto& f : half_mesh.faces)
        out.mesh.faces.push_back({mirror_of[f[0]], mirror_of[f[2]], mirror_of[f[1]]});

    // Full boundary: the outer arc plus its mirror image. The boundary loop
    // splits at the symmetry-line endpoints into the line itself and the
    // outer arc.
    std::vector<int> outer;
    {
        const std::vector<int>& loop = half_mesh.boundary_loop;
        const int n = static_cast<int>(loop.size());
        const int s0 = half_mesh.symmetry_line.front();
        const int s1 = half_mesh.symmetry_line.back();
        const int pos0 = static_cast<int>(
            std::find(loop.begin(), loop.end(), s0) - loop.begin());
        auto walk_until = [&](int step) {
            std::vector<int> arc{loop[pos0]};
            for (int i = (pos0 + step + n) % n; ; i = (i + step + n) % n) {
                arc.push_back(loop[i]);
                if (loop[i] == s1) break;
            }
            return arc;
        };
        const std::vector<int> forward = walk_until(+1);
        const std::vector<int> backward = walk_until(-1);
        auto is_line_arc = [&](const std::vector<int>& arc) {
            if (arc.size() != half_mesh.symmetry_line.size()) return false;
            for (int v : arc)
                if (!on_line.count(v)) return false;
            return true;
        };
        if (is_line_arc(forward))
            outer = backward;
        else if (is_line_arc(backward))
            outer = forward;
        else
            throw std::invalid_argument("symmetry line is not a contiguous boundary arc");
    }
    out.mesh.boundary_loop = outer;
    for (int i = static_cast<int>(outer.size()) - 2; i >= 1; --i)
        out.mesh.boundary_loop.push_back(mirror_of[outer[i]]);

    out.mesh.symmetry_line = half_mesh.symmetry_line;
    out.mesh.validate();
    return out;
}

GeometryImage remesh_to_grid(const TriangleMesh& mesh, const Embedding& embedding,
                             const std::vector<Eigen::Matrix3Xd>& fields, int grid_height,
                             int grid_width) {
    if (grid_height < 2 || grid_width < 2)
        throw std::invalid_argument("remesh grid must be at least 2x2");
    if (count_flipped_triangles(mesh, embedding) != 0)
        throw std::invalid_argument("embedding is not injective (flipped triangles)");
    for (const auto& field : fields)
        if (field.cols() != mesh.num_vertices())
            throw std::invalid_argument("field size does not match mesh");

    // Bucket triangles by uv bounding box for O(1) point location.
    const int cells = std::max(8, static_cast<int>(std::sqrt(mesh.num_faces())) + 1);
    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(cells) * cells);
    auto cell_of = [cells](double u, double v) {
        const int cu = std::clamp(static_cast<int>(u * cells), 0, cells - 1);
        const int cv = std::clamp(static_cast<int>(v * cells), 0, cells - 1);
        return std::make_pair(cu, cv);
    };
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto& face = mesh.faces[f];
        double min_u = 1.0, max_u = 0.0, min_v = 1.0, max_v = 0.0;
        for (int s = 0; s < 3; ++s) {
            min_u = std::min(min_u, embedding.uv(0, face[s]));
            max_u = std::max(max_u, embedding.uv(0, face[s]));
            min_v = std::min(min_v, embedding.uv(1, face[s]));
            max_v = std::max(max_v, embedding.uv(1, face[s]));
        }
        const auto [cu0, cv0] = cell_of(min_u, min_v);
        const auto [cu1, cv1] = cell_of(max_u, max_v);
        for (int cv = cv0; cv <= cv1; ++cv)
            for (int cu = cu0; cu <= cu1; ++cu)
                buckets[static_cast<std::size_t>(cv) * cells + cu].push_back(f);
    }

    auto barycentric = [&](int f, double u, double v, Eigen::Vector3d& lambda) {
        const auto& face = mesh.faces[f];
        const Eigen::Vector2d a = embedding.uv.col(face[0]);
        const Eigen::Vector2d b = embedding.uv.col(face[1]);
        const Eigen::Vector2d c = embedding.uv.col(face[2]);
        const double denom =
            (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        if (std::abs(denom) < 1e-300) return false;
        const double s0 = (b.x() - u) * (c.y() - v) - (b.y() - v) * (c.x() - u);
        const double s1 = (c.x() - u) * (a.y() - v) - (c.y() - v) * (a.x() - u);
        const double s2 = (a.x() - u) * (b.y() - v) - (a.y() - v) * (b.x() - u);
        const double eps = 1e-12 * std::abs(denom);
        if (denom > 0.0 ? (s0 < -eps || s1 < -eps || s2 < -eps)
                        : (s0 > eps || s1 > eps || s2 > eps))
            return false;
        lambda = Eigen::Vector3d(s0 / denom, s1 / denom, s2 / denom);
        return true;
    };

    GeometryImage out;
    out.grid_height = grid_height;
    out.grid_width = grid_width;
    out.fields.assign(fields.size(), Eigen::Matrix3Xd::Zero(3, grid_height * grid_width));

    for (int a = 0; a < grid_height; ++a) {
        for (int b = 0; b < grid_width; ++b) {
            const double u = static_cast<double>(b) / (grid_width - 1);
            const double v = static_cast<double>(a) / (grid_height - 1);
            const int node = a * grid_width + b;
            const auto [cu, cv] = cell_of(u, v);
            int hit = -1;
            Eigen::Vector3d lambda;
            for (int f : buckets[static_cast<std::size_t>(cv) * cells + cu]) {
                if (barycentric(f, u, v, lambda)) {
                    hit = f;
                    break;
                }
            }
            if (hit >= 0) {
                const auto& face = mesh.faces[hit];
                for (std::size_t k = 0; k < fields.size(); ++k)
                    out.fields[k].col(node) = lambda(0) * fields[k].col(face[0]) +
                                              lambda(1) * fields[k].col(face[1]) +
                                              lambda(2) * fields[k].col(face[2]);
                continue;
            }
            // Rounding pushed the node outside: snap to the closest boundary
            // point and interpolate along that edge.
            double best_dist = std::numeric_limits<double>::infinity();
            int best_a = -1, best_b = -1;
            double best_t = 0.0;
            const Eigen::Vector2d p(u, v);
            const std::vector<int>& loop = mesh.boundary_loop;
            for (std::size_t i = 0; i < loop.size(); ++i) {
                const int va = loop[i];
                const int vb = loop[(i + 1) % loop.size()];
                const Eigen::Vector2d ea = embedding.uv.col(va);
                const Eigen::Vector2d eb = embedding.uv.col(vb);
                const Eigen::Vector2d d = eb - ea;
                const double len2 = d.squaredNorm();
                const double t = len2 > 0.0 ? std::clamp((p - ea).dot(d) / len2, 0.0, 1.0) : 0.0;
                const double dist = (ea + t * d - p).squaredNorm();
                if (dist < best_dist) {
                    best_dist = dist;
                    best_a = va;
                    best_b = vb;
                    best_t = t;
                }
            }
            for (std::size_t k = 0; k < fields.size(); ++k)
                out.fields[k].col(node) = (1.0 - best_t) * fields[k].col(best_a) +
                                          best_t * fields[k].col(best_b);
        }
    }
    return out;
}

MorphableModel assemble_model(const GeometryImage& geometry,
                              const std::vector<int>& landmark_indices) {
    if (geometry.fields.empty())
        throw std::invalid_argument("geometry image must carry at least the mean field");
    const int h = geometry.grid_height, w = geometry.grid_width;
    const int n = h * w;
    MorphableModel model;
    model.grid_height = h;
    model.grid_width = w;
    model.mean_shape =
        Eigen::Map<const Eigen::VectorXd>(geometry.fields[0].data(), 3 * n);
    const int num_modes = static_cast<int>(geometry.fields.size()) - 1;
    model.basis.resize(3 * n, num_modes);
    for (int k = 0; k < num_modes; ++k)
        model.basis.col(k) =
            Eigen::Map<const Eigen::VectorXd>(geometry.fields[k + 1].data(), 3 * n);

    model.uv_coords.resize(2, n);
    model.sym_index.resize(n);
    for (int a = 0; a < h; ++a) {
        for (int b = 0; b < w; ++b) {
            const int idx = a * w + b;
            model.uv_coords(0, idx) = b + 1;
            model.uv_coords(1, idx) = a + 1;
            model.sym_index[idx] = a * w + (w - 1 - b);
        }
    }
    model.landmark_indices = landmark_indices;
    model.symmetry_sign.resize(num_modes);
    for (int k = 0; k < num_modes; ++k) {
        const Eigen::VectorXd mirrored = model.mirror_stacked(model.basis.col(k));
        const double as_symmetric = (mirrored - model.basis.col(k)).norm();
        const double as_antisymmetric = (mirrored + model.basis.col(k)).norm();
        model.symmetry_sign[k] = as_symmetric <= as_antisymmetric ? 1 : -1;
    }
    model.validate();
    return model;
}

}  // namespace shapewarp
