/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/image_io.cpp
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
#include "shapewarp/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace shapewarp {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

unsigned char quantize8(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

std::uint16_t quantize16(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
}

void write_png_rows(const std::filesystem::path& path, int height, int width, int color_type,
                    int bit_depth, const std::vector<png_bytep>& rows) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw std::invalid_argument("cannot open for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw NumericalError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw NumericalError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw NumericalError("libpng write error: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // little-endian sample buffers
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3)
        throw std::invalid_argument("write_png supports 1 or 3 channels");
    const int stride = image.width * image.channels;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(image.height) * stride);
    for (int j = 0; j < image.height; ++j)
        for (int k = 0; k < image.width; ++k)
            for (int c = 0; c < image.channels; ++c)
                bytes[static_cast<std::size_t>(j) * stride + k * image.channels + c] =
                    quantize8(image.at(j, k, c));
    std::vector<png_bytep> rows(image.height);
    for (int j = 0; j < image.height; ++j) rows[j] = bytes.data() + static_cast<std::size_t>(j) * stride;
    write_png_rows(path, image.height, image.width,
                   image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png16_gray(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1)
        throw std::invalid_argument("write_png16_gray expects a single channel");
    std::vector<std::uint16_t> samples(static_cast<std::size_t>(image.height) * image.width);
    for (int j = 0; j < image.height; ++j)
        for (int k = 0; k < image.width; ++k)
            samples[static_cast<std::size_t>(j) * image.width + k] = quantize16(image.at(j, k, 0));
    std::vector<png_bytep> rows(image.height);
    for (int j = 0; j < image.height; ++j)
        rows[j] = reinterpret_cast<png_bytep>(samples.data() + static_cast<std::size_t>(j) * image.width);
    write_png_rows(path, image.height, image.width, PNG_COLOR_TYPE_GRAY, 16, rows);
}

void write_png_mask(const std::filesystem::path& path, const OcclusionMask& mask, int height,
                    int width) {
    if (mask.size() != height * width)
        throw std::invalid_argument("mask size does not match grid dimensions");
    const int stride = (width + 7) / 8;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(height) * stride, 0);
    for (int j = 0; j < height; ++j)
        for (int k = 0; k < width; ++k)
            if (mask.bits[static_cast<std::size_t>(j) * width + k])
                bytes[static_cast<std::size_t>(j) * stride + k / 8] |=
                    static_cast<unsigned char>(0x80u >> (k % 8));
    std::vector<png_bytep> rows(height);
    for (int j = 0; j < height; ++j) rows[j] = bytes.data() + static_cast<std::size_t>(j) * stride;
    write_png_rows(path, height, width, PNG_COLOR_TYPE_GRAY, 1, rows);
}

Image read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw std::invalid_argument("cannot open PNG: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw NumericalError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw NumericalError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::invalid_argument("libpng cannot decode: " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);
    png_read_update_info(png, info);

    const int height = static_cast<int>(png_get_image_height(png, info));
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int channels = png_get_channels(png, info);
    const int out_depth = png_get_bit_depth(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::invalid_argument("unsupported PNG channel count in " + path.string());
    }

    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(height) * stride);
    std::vector<png_bytep> rows(height);
    for (int j = 0; j < height; ++j) rows[j] = bytes.data() + static_cast<std::size_t>(j) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image image(height, width, channels);
    if (out_depth == 16) {
        for (int j = 0; j < height; ++j) {
            const auto* row = reinterpret_cast<const std::uint16_t*>(bytes.data() +
                                                                     static_cast<std::size_t>(j) * stride);
            for (int k = 0; k < width; ++k)
                for (int c = 0; c < channels; ++c)
                    image.at(j, k, c) = row[k * channels + c] / 65535.0;
        }
    } else {
        for (int j = 0; j < height; ++j) {
            const unsigned char* row = bytes.data() + static_cast<std::size_t>(j) * stride;
            for (int k = 0; k < width; ++k)
                for (int c = 0; c < channels; ++c)
                    image.at(j, k, c) = row[k * channels + c] / 255.0;
        }
    }
    return image;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3)
        throw std::invalid_argument("write_ppm supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path.string());
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    for (int j = 0; j < image.height; ++j) {
        for (int k = 0; k < image.width; ++k) {
            unsigned char rgb[3];
            for (int c = 0; c < 3; ++c)
                rgb[c] = quantize8(image.at(j, k, image.channels == 3 ? c : 0));
            out.write(reinterpret_cast<const char*>(rgb), 3);
        }
    }
    if (!out) throw NumericalError("short write: " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open PPM: " + path.string());
    std::string magic;
    int width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P6" || width < 1 || height < 1 || maxval != 255)
        throw std::invalid_argument("unsupported PPM header in " + path.string());
    in.get();  // single whitespace after maxval
    Image image(height, width, 3);
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
    for (int j = 0; j < height; ++j) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw std::invalid_argument("PPM truncated: " + path.string());
        for (int k = 0; k < width; ++k)
            for (int c = 0; c < 3; ++c) image.at(j, k, c) = row[k * 3 + c] / 255.0;
    }
    return image;
}

Image read_image(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".png") return read_png(path);
    if (ext == ".ppm") return read_ppm(path);
    throw std::invalid_argument("unsupported image extension: " + path.string());
}

Image flat_to_image(const FlatImage& flat, int height, int width) {
    if (flat.rows() != static_cast<Eigen::Index>(height) * width)
        throw std::invalid_argument("flat image size does not match grid");
    Image image(height, width, static_cast<int>(flat.cols()));
    for (int j = 0; j < height; ++j)
        for (int k = 0; k < width; ++k)
            for (int c = 0; c < image.channels; ++c)
                image.at(j, k, c) = flat(static_cast<Eigen::Index>(j) * width + k, c);
    return image;
}

}  // namespace shapewarp
