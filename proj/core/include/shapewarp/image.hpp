/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/image.hpp
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

#include <stdexcept>
#include <vector>

namespace shapewarp {

/// Dense H x W x C raster, values in [0, 1], row-major, channel-interleaved.
///
/// The sampling convention is 1-based: pixel (j, k) is row j, column k, the
/// sample coordinate x runs along columns and y along rows.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> pixels;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          pixels(static_cast<std::size_t>(h) * w * c, fill) {
        if (h < 1 || w < 1 || c < 1) throw std::invalid_argument("image dims must be positive");
    }

    double& at(int row, int col, int channel = 0) {
        return pixels[(static_cast<std::size_t>(row) * width + col) * channels + channel];
    }
    double at(int row, int col, int channel = 0) const {
        return pixels[(static_cast<std::size_t>(row) * width + col) * channels + channel];
    }

    /// Horizontal mirror (column k -> W + 1 - k).
    Image flipped_horizontal() const {
        Image out(height, width, channels);
        for (int j = 0; j < height; ++j)
            for (int k = 0; k < width; ++k)
                for (int c = 0; c < channels; ++c)
                    out.at(j, k, c) = at(j, width - 1 - k, c);
        return out;
    }
};

/// Per-vertex sampled values, one row per output-grid vertex, one column per
/// channel. Addressable as an H' x W' image through the row-major vertex
/// order.
using FlatImage = Eigen::MatrixXd;

}  // namespace shapewarp
