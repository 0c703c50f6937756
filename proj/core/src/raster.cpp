/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/raster.cpp
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
#include "shapewarp/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shapewarp {

namespace {

struct Barycentric {
    double l0, l1, l2;
    bool inside;
};

// Inclusive point-in-triangle test; eps is relative to the triangle area so
// shared-edge points land in both neighbours.
Barycentric barycentric_at(const Eigen::Vector2d& p, const Eigen::Vector2d& v0,
                           const Eigen::Vector2d& v1, const Eigen::Vector2d& v2) {
    const double denom = (v1.x() - v0.x()) * (v2.y() - v0.y()) -
                         (v1.y() - v0.y()) * (v2.x() - v0.x());
    Barycentric out{0.0, 0.0, 0.0, false};
    const double area = std::abs(denom);
    if (area < 1e-300) return out;
    const double s0 = (v1.x() - p.x()) * (v2.y() - p.y()) - (v1.y() - p.y()) * (v2.x() - p.x());
    const double s1 = (v2.x() - p.x()) * (v0.y() - p.y()) - (v2.y() - p.y()) * (v0.x() - p.x());
    const double s2 = (v0.x() - p.x()) * (v1.y() - p.y()) - (v0.y() - p.y()) * (v1.x() - p.x());
    const double eps = 1e-12 * area;
    if (denom > 0.0) {
        if (s0 < -eps || s1 < -eps || s2 < -eps) return out;
    } else {
        if (s0 > eps || s1 > eps || s2 > eps) return out;
    }
    out.l0 = s0 / denom;
    out.l1 = s1 / denom;
    out.l2 = s2 / denom;
    out.inside = true;
    return out;
}

}  // namespace

SymmetricTriangulation symmetric_grid_triangulation(int grid_height, int grid_width) {
    SymmetricTriangulation out;
    out.num_grid_vertices = grid_height * grid_width;
    int next_extra = out.num_grid_vertices;
    for (int a = 0; a + 1 < grid_height; ++a) {
        for (int b = 0; b + 1 < grid_width; ++b) {
            const int tl = a * grid_width + b;
            const int tr = tl + 1;
            const int bl = tl + grid_width;
            const int br = bl + 1;
            const int mirror_quad = (grid_width - 2) - b;
            if (b < mirror_quad) {
                out.triangles.push_back({tl, br, bl});
                out.triangles.push_back({tl, tr, br});
            } else if (b > mirror_quad) {
                out.triangles.push_back({tl, tr, bl});
                out.triangles.push_back({tr, br, bl});
            } else {
                const int centre = next_extra++;
                out.extra_quads.push_back({tl, tr, bl, br});
                out.triangles.push_back({tl, tr, centre});
                out.triangles.push_back({tr, br, centre});
                out.triangles.push_back({br, bl, centre});
                out.triangles.push_back({bl, tl, centre});
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> zbuffer_vertex_visibility(
    const Eigen::Matrix2Xd& projected, const Eigen::VectorXd& depth,
    const std::vector<std::array<int, 3>>& triangles, int grid_height, int grid_width,
    int oracle_scale, double depth_tolerance) {
    const int n = static_cast<int>(projected.cols());
    if (depth.size() != n)
        throw std::invalid_argument("zbuffer_vertex_visibility: depth size mismatch");

    const Eigen::Vector2d lo = projected.rowwise().minCoeff();
    const Eigen::Vector2d hi = projected.rowwise().maxCoeff();
    const int cells_x = std::max(1, oracle_scale * grid_width);
    const int cells_y = std::max(1, oracle_scale * grid_height);
    const double span_x = std::max(hi.x() - lo.x(), 1e-12);
    const double span_y = std::max(hi.y() - lo.y(), 1e-12);

    auto cell_of = [&](double x, double y) {
        int cx = static_cast<int>((x - lo.x()) / span_x * cells_x);
        int cy = static_cast<int>((y - lo.y()) / span_y * cells_y);
        cx = std::clamp(cx, 0, cells_x - 1);
        cy = std::clamp(cy, 0, cells_y - 1);
        return std::make_pair(cx, cy);
    };

    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(cells_x) * cells_y);
    for (int f = 0; f < static_cast<int>(triangles.size()); ++f) {
        const auto& t = triangles[f];
        double minx = projected(0, t[0]), maxx = minx;
        double miny = projected(1, t[0]), maxy = miny;
        for (int s = 1; s < 3; ++s) {
            minx = std::min(minx, projected(0, t[s]));
            maxx = std::max(maxx, projected(0, t[s]));
            miny = std::min(miny, projected(1, t[s]));
            maxy = std::max(maxy, projected(1, t[s]));
        }
        const auto [cx0, cy0] = cell_of(minx, miny);
        const auto [cx1, cy1] = cell_of(maxx, maxy);
        for (int cy = cy0; cy <= cy1; ++cy)
            for (int cx = cx0; cx <= cx1; ++cx)
                buckets[static_cast<std::size_t>(cy) * cells_x + cx].push_back(f);
    }

    std::vector<std::uint8_t> visible(n, 0);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d p = projected.col(i);
        const auto [cx, cy] = cell_of(p.x(), p.y());
        double front = -std::numeric_limits<double>::infinity();
        for (int f : buckets[static_cast<std::size_t>(cy) * cells_x + cx]) {
            const auto& t = triangles[f];
            const Barycentric bc = barycentric_at(p, projected.col(t[0]), projected.col(t[1]),
                                                  projected.col(t[2]));
            if (!bc.inside) continue;
            const double d = bc.l0 * depth(t[0]) + bc.l1 * depth(t[1]) + bc.l2 * depth(t[2]);
            front = std::max(front, d);
        }
        visible[i] = depth(i) >= front - depth_tolerance ? 1 : 0;
    }
    return visible;
}

Image rasterize_zbuffer(const Eigen::Matrix2Xd& screen, const Eigen::VectorXd& depth,
                        const Eigen::MatrixXd& vertex_colors,
                        const std::vector<std::array<int, 3>>& triangles, int image_height,
                        int image_width) {
    const int n = static_cast<int>(screen.cols());
    if (depth.size() != n || vertex_colors.rows() != n)
        throw std::invalid_argument("rasterize_zbuffer: attribute size mismatch");
    const int channels = static_cast<int>(vertex_colors.cols());
    Image image(image_height, image_width, channels, 0.0);
    std::vector<double> zbuf(static_cast<std::size_t>(image_height) * image_width,
                             -std::numeric_limits<double>::infinity());

    for (const auto& t : triangles) {
        double minx = screen(0, t[0]), maxx = minx, miny = screen(1, t[0]), maxy = miny;
        for (int s = 1; s < 3; ++s) {
            minx = std::min(minx, screen(0, t[s]));
            maxx = std::max(maxx, screen(0, t[s]));
            miny = std::min(miny, screen(1, t[s]));
            maxy = std::max(maxy, screen(1, t[s]));
        }
        const int k_lo = std::max(1, static_cast<int>(std::ceil(minx)));
        const int k_hi = std::min(image_width, static_cast<int>(std::floor(maxx)));
        const int j_lo = std::max(1, static_cast<int>(std::ceil(miny)));
        const int j_hi = std::min(image_height, static_cast<int>(std::floor(maxy)));
        for (int j = j_lo; j <= j_hi; ++j) {
            for (int k = k_lo; k <= k_hi; ++k) {
                const Eigen::Vector2d p(static_cast<double>(k), static_cast<double>(j));
                const Barycentric bc = barycentric_at(p, screen.col(t[0]), screen.col(t[1]),
                                                      screen.col(t[2]));
                if (!bc.inside) continue;
                const double d = bc.l0 * depth(t[0]) + bc.l1 * depth(t[1]) + bc.l2 * depth(t[2]);
                const std::size_t px = static_cast<std::size_t>(j - 1) * image_width + (k - 1);
                if (d <= zbuf[px]) continue;
                zbuf[px] = d;
                for (int c = 0; c < channels; ++c)
                    image.at(j - 1, k - 1, c) = bc.l0 * vertex_colors(t[0], c) +
                                                bc.l1 * vertex_colors(t[1], c) +
                                                bc.l2 * vertex_colors(t[2], c);
            }
        }
    }
    return image;
}

}  // namespace shapewarp
