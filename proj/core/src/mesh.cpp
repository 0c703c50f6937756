/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/mesh.cpp
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
#include "shapewarp/mesh.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace shapewarp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t edge_key(int a, int b) {
    const std::uint64_t lo = static_cast<std::uint32_t>(std::min(a, b));
    const std::uint64_t hi = static_cast<std::uint32_t>(std::max(a, b));
    return (hi << 32) | lo;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void TriangleMesh::validate() const {
    const int m = num_vertices();
    if (m < 3 || faces.empty()) throw std::invalid_argument("mesh must have vertices and faces");

    std::unordered_map<std::uint64_t, int> edge_count;
    std::unordered_set<std::uint64_t> directed;
    std::unordered_map<std::uint64_t, int> edge_face;
    for (int f = 0; f < num_faces(); ++f) {
        const auto& face = faces[f];
        for (int s = 0; s < 3; ++s) {
            if (face[s] < 0 || face[s] >= m) throw std::invalid_argument("face index out of range");
            if (face[s] == face[(s + 1) % 3])
                throw std::invalid_argument("degenerate face with repeated vertex");
        }
        for (int s = 0; s < 3; ++s) {
            const int a = face[s];
            const int b = face[(s + 1) % 3];
            const std::uint64_t dkey =
                (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
                static_cast<std::uint32_t>(b);
            if (!directed.insert(dkey).second)
                throw std::invalid_argument("mesh is not consistently oriented");
            int& count = edge_count[edge_key(a, b)];
            if (++count > 2) throw std::invalid_argument("mesh is not edge-manifold");
            edge_face[edge_key(a, b)] = f;
        }
    }

    // Connectivity over faces through shared edges.
    UnionFind components(num_faces());
    {
        std::unordered_map<std::uint64_t, int> first_face;
        for (int f = 0; f < num_faces(); ++f) {
            for (int s = 0; s < 3; ++s) {
                const std::uint64_t key = edge_key(faces[f][s], faces[f][(s + 1) % 3]);
                auto [it, inserted] = first_face.try_emplace(key, f);
                if (!inserted) components.unite(it->second, f);
            }
        }
        const int root = components.find(0);
        for (int f = 1; f < num_faces(); ++f)
            if (components.find(f) != root)
                throw std::invalid_argument("mesh is not connected");
    }

    const long long num_edges = static_cast<long long>(edge_count.size());
    if (m - num_edges + num_faces() != 1)
        throw std::invalid_argument("mesh is not a topological disk (Euler characteristic != 1)");

    // boundary_loop must traverse every boundary edge exactly once.
    std::unordered_set<std::uint64_t> boundary_edges;
    for (const auto& [key, count] : edge_count)
        if (count == 1) boundary_edges.insert(key);
    if (boundary_loop.size() != boundary_edges.size())
        throw std::invalid_argument("boundary_loop does not cover the boundary");
    std::set<int> loop_vertices;
    for (std::size_t i = 0; i < boundary_loop.size(); ++i) {
        const int a = boundary_loop[i];
        const int b = boundary_loop[(i + 1) % boundary_loop.size()];
        if (a < 0 || a >= m) throw std::invalid_argument("boundary index out of range");
        if (!loop_vertices.insert(a).second)
            throw std::invalid_argument("boundary_loop repeats a vertex");
        const auto it = boundary_edges.find(edge_key(a, b));
        if (it == boundary_edges.end())
            throw std::invalid_argument("boundary_loop edge is not a boundary edge");
        boundary_edges.erase(it);
    }

    if (symmetry_line.size() < 2) throw std::invalid_argument("symmetry line needs two vertices");
    std::unordered_set<int> on_line;
    for (std::size_t i = 0; i < symmetry_line.size(); ++i) {
        const int v = symmetry_line[i];
        if (v < 0 || v >= m) throw std::invalid_argument("symmetry line index out of range");
        if (!on_line.insert(v).second)
            throw std::invalid_argument("symmetry line repeats a vertex");
        if (i + 1 < symmetry_line.size() &&
            edge_count.find(edge_key(v, symmetry_line[i + 1])) == edge_count.end())
            throw std::invalid_argument("symmetry line must follow mesh edges");
    }
    if (!loop_vertices.count(symmetry_line.front()) || !loop_vertices.count(symmetry_line.back()))
        throw std::invalid_argument("symmetry line endpoints must lie on the boundary");
}

bool TriangleMesh::symmetry_line_on_boundary() const {
    std::unordered_set<int> loop(boundary_loop.begin(), boundary_loop.end());
    for (int v : symmetry_line)
        if (!loop.count(v)) return false;
    return true;
}

TriangleMesh load_obj(const std::filesystem::path& obj_path) {
    std::ifstream in(obj_path);
    if (!in) throw std::invalid_argument("cannot open OBJ file: " + obj_path.string());
    std::vector<Eigen::Vector3d> vertices;
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string tag;
        if (!(row >> tag)) continue;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(row >> p.x() >> p.y() >> p.z()))
                throw std::invalid_argument("malformed OBJ vertex: " + line);
            vertices.push_back(p);
        } else if (tag == "f") {
            std::array<int, 3> face{};
            std::string token;
            int corner = 0;
            while (row >> token) {
                if (corner >= 3) throw std::invalid_argument("only triangle faces supported: " + line);
                const auto slash = token.find('/');
                const int idx = std::stoi(token.substr(0, slash));
                if (idx < 1) throw std::invalid_argument("OBJ indices must be positive: " + line);
                face[corner++] = idx - 1;
            }
            if (corner != 3) throw std::invalid_argument("malformed OBJ face: " + line);
            mesh.faces.push_back(face);
        }
    }
    mesh.vertices.resize(3, static_cast<int>(vertices.size()));
    for (int i = 0; i < static_cast<int>(vertices.size()); ++i) mesh.vertices.col(i) = vertices[i];
    return mesh;
}

void load_sidecar(const std::filesystem::path& sidecar_path, TriangleMesh& mesh) {
    std::ifstream in(sidecar_path);
    if (!in) throw std::invalid_argument("cannot open sidecar file: " + sidecar_path.string());
    std::string tag;
    while (in >> tag) {
        if (tag[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        int count = 0;
        if (!(in >> count) || count < 0)
            throw std::invalid_argument("malformed sidecar section header: " + tag);
        std::vector<int>* target = nullptr;
        if (tag == "boundary")
            target = &mesh.boundary_loop;
        else if (tag == "symmetry")
            target = &mesh.symmetry_line;
        else
            throw std::invalid_argument("unknown sidecar section: " + tag);
        target->clear();
        target->reserve(count);
        for (int i = 0; i < count; ++i) {
            int idx;
            if (!(in >> idx) || idx < 1)
                throw std::invalid_argument("malformed sidecar index list in section " + tag);
            target->push_back(idx - 1);
        }
    }
    if (mesh.boundary_loop.empty() || mesh.symmetry_line.empty())
        throw std::invalid_argument("sidecar must provide boundary and symmetry sections");
}

void save_obj(const std::filesystem::path& obj_path, const TriangleMesh& mesh) {
    std::ofstream out(obj_path);
    if (!out) throw std::invalid_argument("cannot write OBJ file: " + obj_path.string());
    out.precision(17);
    for (int i = 0; i < mesh.num_vertices(); ++i)
        out << "v " << mesh.vertices(0, i) << ' ' << mesh.vertices(1, i) << ' '
            << mesh.vertices(2, i) << '\n';
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void save_sidecar(const std::filesystem::path& sidecar_path, const TriangleMesh& mesh) {
    std::ofstream out(sidecar_path);
    if (!out) throw std::invalid_argument("cannot write sidecar file: " + sidecar_path.string());
    out << "boundary " << mesh.boundary_loop.size() << '\n';
    for (std::size_t i = 0; i < mesh.boundary_loop.size(); ++i)
        out << mesh.boundary_loop[i] + 1 << ((i + 1) % 16 == 0 ? '\n' : ' ');
    out << '\n';
    out << "symmetry " << mesh.symmetry_line.size() << '\n';
    for (std::size_t i = 0; i < mesh.symmetry_line.size(); ++i)
        out << mesh.symmetry_line[i] + 1 << ((i + 1) % 16 == 0 ? '\n' : ' ');
    out << '\n';
}

TriangleMesh make_half_dome_mesh(int rings, int segments, double radius, double height) {
    if (rings < 2 || segments < 2)
        throw std::invalid_argument("half dome needs rings >= 2 and segments >= 2");
    TriangleMesh mesh;
    const int per_ring = segments + 1;
    const int m = 1 + rings * per_ring;
    mesh.vertices.resize(3, m);

    auto ring_vertex = [per_ring](int ring, int j) { return 1 + (ring - 1) * per_ring + j; };

    mesh.vertices.col(0) = Eigen::Vector3d(0.0, 0.0, height);
    for (int ring = 1; ring <= rings; ++ring) {
        const double rho = radius * ring / rings;
        for (int j = 0; j <= segments; ++j) {
            // theta from pi/2 to 3pi/2 spans the x <= 0 half plane.
            const double theta = kPi / 2.0 + kPi * j / segments;
            double x = rho * std::cos(theta);
            double y = rho * std::sin(theta);
            if (j == 0) { x = 0.0; y = rho; }       // exact diameter endpoints
            if (j == segments) { x = 0.0; y = -rho; }
            const double z = height * (1.0 - (rho / radius) * (rho / radius));
            mesh.vertices.col(ring_vertex(ring, j)) = Eigen::Vector3d(x, y, z);
        }
    }

    for (int j = 0; j < segments; ++j)
        mesh.faces.push_back({0, ring_vertex(1, j), ring_vertex(1, j + 1)});
    for (int ring = 1; ring < rings; ++ring) {
        for (int j = 0; j < segments; ++j) {
            const int in0 = ring_vertex(ring, j);
            const int in1 = ring_vertex(ring, j + 1);
            const int out0 = ring_vertex(ring + 1, j);
            const int out1 = ring_vertex(ring + 1, j + 1);
            mesh.faces.push_back({in0, out0, out1});
            mesh.faces.push_back({in0, out1, in1});
        }
    }

    // Counterclockwise around the semicircular region: up the top half of the
    // diameter, along the outer arc, back up the bottom half.
    mesh.boundary_loop.push_back(0);
    for (int ring = 1; ring <= rings; ++ring) mesh.boundary_loop.push_back(ring_vertex(ring, 0));
    for (int j = 1; j <= segments; ++j) mesh.boundary_loop.push_back(ring_vertex(rings, j));
    for (int ring = rings - 1; ring >= 1; --ring)
        mesh.boundary_loop.push_back(ring_vertex(ring, segments));

    // Symmetry line runs the full diameter, bottom to top.
    for (int ring = rings; ring >= 1; --ring)
        mesh.symmetry_line.push_back(ring_vertex(ring, segments));
    mesh.symmetry_line.push_back(0);
    for (int ring = 1; ring <= rings; ++ring) mesh.symmetry_line.push_back(ring_vertex(ring, 0));

    mesh.validate();
    return mesh;
}

}  // namespace shapewarp
