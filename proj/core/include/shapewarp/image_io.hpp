/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/image_io.hpp
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
#include "shapewarp/sampler.hpp"

#include <filesystem>

namespace shapewarp {

/// 8-bit PNG, grayscale (1 channel) or RGB (3 channels). Values are clamped
/// to [0,1] and rounded to 255 levels.
void write_png(const std::filesystem::path& path, const Image& image);

/// 16-bit grayscale PNG from values in [0,1] (visualisation output).
void write_png16_gray(const std::filesystem::path& path, const Image& image);

/// 1-bit grayscale PNG of a binary mask laid out on an H x W grid.
void write_png_mask(const std::filesystem::path& path, const OcclusionMask& mask, int height,
                    int width);

/// Reads gray/palette/RGB(A) PNG at 1/8/16 bits into [0,1] doubles (alpha is
/// dropped).
Image read_png(const std::filesystem::path& path);

/// Binary PPM (P6), 8-bit RGB.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

/// Dispatches on the file extension (.png / .ppm).
Image read_image(const std::filesystem::path& path);

/// Reshapes an N x C flat image onto its H x W grid for writing.
Image flat_to_image(const FlatImage& flat, int height, int width);

}  // namespace shapewarp
