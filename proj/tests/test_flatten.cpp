/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: tests/test_flatten.cpp
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

#include "common/test_utils.hpp"
#include "shapewarp/mesh.hpp"
#include "shapewarp/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace shapewarp;
using namespace shapewarp::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Planar grid mesh over [0,1]^2 with the middle column as symmetry line;
// cols must be odd.
TriangleMesh make_planar_grid_mesh(int rows, int cols) {
    TriangleMesh mesh;
    mesh.vertices.resize(3, rows * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            mesh.vertices.col(r * cols + c) = Eigen::Vector3d(
                static_cast<double>(c) / (cols - 1), static_cast<double>(r) / (rows - 1), 0.0);
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            const int tl = r * cols + c;
            const int tr = tl + 1;
            const int bl = tl + cols;
            const int br = bl + 1;
            mesh.faces.push_back({tl, br, bl});
            mesh.faces.push_back({tl, tr, br});
        }
    }
    for (int c = 0; c < cols - 1; ++c) mesh.boundary_loop.push_back(c);
    for (int r = 0; r < rows - 1; ++r) mesh.boundary_loop.push_back(r * cols + (cols - 1));
    for (int c = cols - 1; c > 0; --c) mesh.boundary_loop.push_back((rows - 1) * cols + c);
    for (int r = rows - 1; r > 0; --r) mesh.boundary_loop.push_back(r * cols);
    const int mid = (cols - 1) / 2;
    for (int r = 0; r < rows; ++r) mesh.symmetry_line.push_back(r * cols + mid);
    mesh.validate();
    return mesh;
}

// Fan of `spokes` boundary vertices around one interior vertex on the unit
// circle, symmetric about x = 0; the symmetry line runs bottom-centre-top.
TriangleMesh make_fan_mesh(int spokes) {
    TriangleMesh mesh;
    mesh.vertices.resize(3, spokes + 1);
    mesh.vertices.col(0) = Eigen::Vector3d::Zero();
    for (int j = 0; j < spokes; ++j) {
        const double angle = kPi / 2.0 + 2.0 * kPi * j / spokes;
        mesh.vertices.col(1 + j) = Eigen::Vector3d(std::cos(angle), std::sin(angle), 0.0);
    }
    for (int j = 0; j < spokes; ++j)
        mesh.faces.push_back({0, 1 + j, 1 + (j + 1) % spokes});
    for (int j = 0; j < spokes; ++j) mesh.boundary_loop.push_back(1 + j);
    // spokes must be even so the antipode of the top vertex exists.
    mesh.symmetry_line = {1 + spokes / 2, 0, 1};
    mesh.validate();
    return mesh;
}

double bilerp_grid(const Eigen::Matrix3Xd& field, int grid_h, int grid_w, double u, double v,
                   int component) {
    const double x = u * (grid_w - 1);
    const double y = v * (grid_h - 1);
    const int c0 = std::min(static_cast<int>(x), grid_w - 2);
    const int r0 = std::min(static_cast<int>(y), grid_h - 2);
    const double fx = x - c0;
    const double fy = y - r0;
    auto at = [&](int r, int c) { return field(component, r * grid_w + c); };
    return (1 - fy) * ((1 - fx) * at(r0, c0) + fx * at(r0, c0 + 1)) +
           fy * ((1 - fx) * at(r0 + 1, c0) + fx * at(r0 + 1, c0 + 1));
}

}  // namespace

TEST_SUITE("flatten") {

TEST_CASE("fan mesh: single interior vertex lands at its neighbour centroid") {
    const TriangleMesh mesh = make_fan_mesh(6);
    const Embedding embedding = tutte_embed(mesh, WeightScheme::uniform);
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int j = 1; j <= 6; ++j) centroid += embedding.uv.col(j);
    centroid /= 6.0;
    CHECK((embedding.uv.col(0) - centroid).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(embedding.uv(0, 0) == 0.5);  // symmetry-line pin
    CHECK(count_flipped_triangles(mesh, embedding) == 0);
}

TEST_CASE("half dome embeds with zero flipped triangles and exact square boundary") {
    const TriangleMesh mesh = make_half_dome_mesh(6, 10);
    for (auto scheme : {WeightScheme::uniform, WeightScheme::cotangent_clamped}) {
        const Embedding embedding = tutte_embed(mesh, scheme);
        CHECK(count_flipped_triangles(mesh, embedding) == 0);
        for (int v : mesh.boundary_loop) {
            const double u = embedding.uv(0, v);
            const double w = embedding.uv(1, v);
            const bool on_edge = u == 0.0 || u == 1.0 || w == 0.0 || w == 1.0 || u == 0.5;
            CHECK(on_edge);
            CHECK(u >= 0.0);
            CHECK(u <= 1.0);
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
        }
        for (int v : mesh.symmetry_line) CHECK(embedding.uv(0, v) == 0.5);
    }
}

TEST_CASE("planar unit square embeds onto itself") {
    const TriangleMesh mesh = make_planar_grid_mesh(5, 5);
    const Embedding embedding = tutte_embed(mesh, WeightScheme::uniform);
    double worst = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        worst = std::max(worst, std::abs(embedding.uv(0, v) - mesh.vertices(0, v)));
        worst = std::max(worst, std::abs(embedding.uv(1, v) - mesh.vertices(1, v)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("non-disk meshes are rejected") {
    TriangleMesh mesh = make_planar_grid_mesh(5, 5);
    // Removing an interior quad opens a second boundary loop.
    mesh.faces.erase(mesh.faces.begin() + 2 * (1 * 4 + 1), mesh.faces.begin() + 2 * (1 * 4 + 1) + 2);
    CHECK_THROWS_AS(tutte_embed(mesh, WeightScheme::uniform), std::invalid_argument);
}

TEST_CASE("mirror_embedding reflects uv and keeps the line fixed") {
    const TriangleMesh half = make_half_dome_mesh(5, 8);
    const Embedding embedding = tutte_embed(half, WeightScheme::uniform);
    const MirroredMesh full = mirror_embedding(embedding, half);

    for (int v = 0; v < half.num_vertices(); ++v) {
        const int mirror = full.sym_index[v];
        if (mirror == v) {
            CHECK(embedding.uv(0, v) == 0.5);
            continue;
        }
        CHECK(full.embedding.uv(0, mirror) == doctest::Approx(1.0 - embedding.uv(0, v)));
        CHECK(full.embedding.uv(1, mirror) == embedding.uv(1, v));
        CHECK(full.mesh.vertices(0, mirror) == -half.vertices(0, v));
    }
    for (int v = 0; v < full.mesh.num_vertices(); ++v)
        CHECK(full.sym_index[full.sym_index[v]] == v);
    CHECK(count_flipped_triangles(full.mesh, full.embedding) == 0);
}

TEST_CASE("mirror_embedding rejects lines off the midline") {
    const TriangleMesh half = make_half_dome_mesh(4, 6);
    Embedding embedding = tutte_embed(half, WeightScheme::uniform);
    embedding.uv(0, half.symmetry_line[1]) = 0.4;
    CHECK_THROWS_AS(mirror_embedding(embedding, half), std::invalid_argument);
}

TEST_CASE("re-embedding the full symmetric mesh reproduces the mirror map") {
    const TriangleMesh half = make_half_dome_mesh(5, 8);
    const MirroredMesh full = mirror_embedding(tutte_embed(half, WeightScheme::uniform), half);
    const Embedding direct = tutte_embed(full.mesh, WeightScheme::uniform);
    for (int v = 0; v < full.mesh.num_vertices(); ++v) {
        const int mirror = full.sym_index[v];
        CHECK(direct.uv(0, mirror) == doctest::Approx(1.0 - direct.uv(0, v)).epsilon(1e-9));
        CHECK(direct.uv(1, mirror) == doctest::Approx(direct.uv(1, v)).epsilon(1e-9));
    }
}

TEST_CASE("remesh reproduces vertex values and linear fields") {
    const TriangleMesh mesh = make_planar_grid_mesh(5, 5);
    const Embedding embedding = tutte_embed(mesh, WeightScheme::uniform);

    // One field linear in uv, one field equal to the positions themselves.
    Eigen::Matrix3Xd linear(3, mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const double u = embedding.uv(0, v);
        const double w = embedding.uv(1, v);
        linear.col(v) = Eigen::Vector3d(u, 2.0 * u - 3.0 * w, 1.0 + w);
    }
    const GeometryImage geometry = remesh_to_grid(mesh, embedding, {linear}, 9, 9);
    for (int a = 0; a < 9; ++a) {
        for (int b = 0; b < 9; ++b) {
            const double u = b / 8.0;
            const double w = a / 8.0;
            const int node = a * 9 + b;
            CHECK(std::abs(geometry.fields[0](0, node) - u) < 1e-10);
            CHECK(std::abs(geometry.fields[0](1, node) - (2.0 * u - 3.0 * w)) < 1e-10);
            CHECK(std::abs(geometry.fields[0](2, node) - (1.0 + w)) < 1e-10);
        }
    }

    // A 5x5 grid node coincident with a mesh vertex gets that exact value.
    const GeometryImage coincident = remesh_to_grid(mesh, embedding, {mesh.vertices}, 5, 5);
    for (int v = 0; v < mesh.num_vertices(); ++v)
        CHECK((coincident.fields[0].col(v) - mesh.vertices.col(v)).cwiseAbs().maxCoeff() <
              1e-12);
}

TEST_CASE("remesh commutes with the linear shape model") {
    const TriangleMesh half = make_half_dome_mesh(6, 10);
    const MirroredMesh full = mirror_embedding(tutte_embed(half, WeightScheme::uniform), half);
    const int m = full.mesh.num_vertices();
    Rng rng(400);
    Eigen::Matrix3Xd mode(3, m);
    for (int v = 0; v < m; ++v)
        mode.col(v) = Eigen::Vector3d(
            std::sin(full.embedding.uv(0, v) * kPi), std::cos(full.embedding.uv(1, v) * kPi),
            rng.normal() * 0.0 + full.embedding.uv(0, v) * full.embedding.uv(1, v));
    Eigen::Matrix3Xd combined = full.mesh.vertices + mode;

    const GeometryImage separate =
        remesh_to_grid(full.mesh, full.embedding, {full.mesh.vertices, mode}, 12, 12);
    const GeometryImage joint =
        remesh_to_grid(full.mesh, full.embedding, {combined}, 12, 12);
    CHECK((separate.fields[0] + separate.fields[1] - joint.fields[0]).cwiseAbs().maxCoeff() <
          1e-10);

    const MorphableModel model = assemble_model(separate, {0, 5, 17, 40});
    Eigen::VectorXd coeff = Eigen::VectorXd::Ones(1);
    const ShapeInstance synthesized = synthesize_shape(model, coeff);
    CHECK((synthesized - joint.fields[0]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("resolution refinement is at least second order") {
    const TriangleMesh mesh = make_planar_grid_mesh(33, 33);
    const Embedding embedding = tutte_embed(mesh, WeightScheme::uniform);
    Eigen::Matrix3Xd quadratic(3, mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const double u = embedding.uv(0, v);
        const double w = embedding.uv(1, v);
        quadratic.col(v) = Eigen::Vector3d(u * u, w * w, u * w);
    }
    auto max_error = [&](int grid_size) {
        const GeometryImage geometry =
            remesh_to_grid(mesh, embedding, {quadratic}, grid_size, grid_size);
        double worst = 0.0;
        Rng rng(401);
        for (int probe = 0; probe < 500; ++probe) {
            const double u = rng.uniform();
            const double w = rng.uniform();
            const double approx = bilerp_grid(geometry.fields[0], grid_size, grid_size, u, w, 0);
            worst = std::max(worst, std::abs(approx - u * u));
        }
        return worst;
    };
    const double coarse = max_error(8);
    const double fine = max_error(16);
    CHECK(coarse / fine >= 3.0);
}

TEST_CASE("assemble_model fits symmetry signs from the basis fields") {
    const MorphableModel reference = make_synthetic_model(60, 10, 12, 4);
    GeometryImage geometry;
    geometry.grid_height = reference.grid_height;
    geometry.grid_width = reference.grid_width;
    const int n = reference.num_vertices();
    geometry.fields.push_back(
        Eigen::Map<const Eigen::Matrix3Xd>(reference.mean_shape.data(), 3, n));
    for (int k = 0; k < reference.num_modes(); ++k)
        geometry.fields.push_back(
            Eigen::Map<const Eigen::Matrix3Xd>(reference.basis.col(k).data(), 3, n));
    const MorphableModel rebuilt = assemble_model(geometry, reference.landmark_indices);
    CHECK(rebuilt.symmetry_sign == reference.symmetry_sign);
    CHECK((rebuilt.mean_shape - reference.mean_shape).cwiseAbs().maxCoeff() == 0.0);
    CHECK((rebuilt.basis - reference.basis).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("obj and sidecar round trip") {
    const TriangleMesh mesh = make_half_dome_mesh(4, 7);
    const auto dir = temp_dir("mesh_io");
    save_obj(dir / "half.obj", mesh);
    save_sidecar(dir / "half.txt", mesh);
    TriangleMesh loaded = load_obj(dir / "half.obj");
    load_sidecar(dir / "half.txt", loaded);
    loaded.validate();
    CHECK(loaded.num_vertices() == mesh.num_vertices());
    CHECK(loaded.faces == mesh.faces);
    CHECK(loaded.boundary_loop == mesh.boundary_loop);
    CHECK(loaded.symmetry_line == mesh.symmetry_line);
    CHECK((loaded.vertices - mesh.vertices).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
