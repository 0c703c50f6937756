/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/model_io.cpp
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
#include "shapewarp/model_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "model container IO assumes a little-endian host");

namespace shapewarp {

namespace {

constexpr const char* kMagic = "shapewarp-model 1";

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void write_ints(std::ostream& out, const std::vector<int>& values) {
    for (int v : values) {
        const std::int64_t wide = v;
        out.write(reinterpret_cast<const char*>(&wide), sizeof(wide));
    }
}

void read_doubles(std::istream& in, double* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::invalid_argument("model container truncated");
}

std::vector<int> read_ints(std::istream& in, std::size_t count) {
    std::vector<int> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::int64_t wide;
        in.read(reinterpret_cast<char*>(&wide), sizeof(wide));
        if (!in) throw std::invalid_argument("model container truncated");
        out[i] = static_cast<int>(wide);
    }
    return out;
}

}  // namespace

void save_model(const std::filesystem::path& path, const MorphableModel& model) {
    model.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write model file: " + path.string());
    const int n = model.num_vertices();
    const int d = model.num_modes();
    out << kMagic << '\n'
        << "endian little\n"
        << "grid " << model.grid_height << ' ' << model.grid_width << '\n'
        << "modes " << d << '\n'
        << "landmarks " << model.num_landmarks() << '\n'
        << "mean_shape f64 " << 3 * n << '\n'
        << "basis f64 " << 3 * n << ' ' << d << " col-major\n"
        << "uv_coords f64 2 " << n << " col-major\n"
        << "sym_index i64 " << n << '\n'
        << "landmark_indices i64 " << model.num_landmarks() << '\n'
        << "symmetry_sign i64 " << d << '\n'
        << "data\n";
    write_doubles(out, model.mean_shape.data(), static_cast<std::size_t>(3) * n);
    write_doubles(out, model.basis.data(), static_cast<std::size_t>(3) * n * d);
    write_doubles(out, model.uv_coords.data(), static_cast<std::size_t>(2) * n);
    write_ints(out, model.sym_index);
    write_ints(out, model.landmark_indices);
    write_ints(out, model.symmetry_sign);
    if (!out) throw NumericalError("short write while saving model: " + path.string());
}

MorphableModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open model file: " + path.string());

    auto expect_line = [&in, &path](const std::string& context) {
        std::string line;
        if (!std::getline(in, line))
            throw std::invalid_argument("truncated model header (" + context + "): " +
                                        path.string());
        return line;
    };

    if (expect_line("magic") != kMagic)
        throw std::invalid_argument("not a shapewarp model container: " + path.string());
    if (expect_line("endian") != "endian little")
        throw std::invalid_argument("unsupported endianness in model container");

    int grid_h = 0, grid_w = 0, modes = 0, landmarks = 0;
    {
        std::istringstream row(expect_line("grid"));
        std::string tag;
        if (!(row >> tag >> grid_h >> grid_w) || tag != "grid")
            throw std::invalid_argument("malformed grid line in model container");
    }
    {
        std::istringstream row(expect_line("modes"));
        std::string tag;
        if (!(row >> tag >> modes) || tag != "modes")
            throw std::invalid_argument("malformed modes line in model container");
    }
    {
        std::istringstream row(expect_line("landmarks"));
        std::string tag;
        if (!(row >> tag >> landmarks) || tag != "landmarks")
            throw std::invalid_argument("malformed landmarks line in model container");
    }
    // Field descriptor lines are fixed by the writer; skip to the data marker.
    for (;;) {
        const std::string line = expect_line("fields");
        if (line == "data") break;
    }

    const int n = grid_h * grid_w;
    if (n <= 0 || modes < 0 || landmarks < 0)
        throw std::invalid_argument("invalid sizes in model container");
    MorphableModel model;
    model.grid_height = grid_h;
    model.grid_width = grid_w;
    model.mean_shape.resize(3 * n);
    read_doubles(in, model.mean_shape.data(), static_cast<std::size_t>(3) * n);
    model.basis.resize(3 * n, modes);
    read_doubles(in, model.basis.data(), static_cast<std::size_t>(3) * n * modes);
    model.uv_coords.resize(2, n);
    read_doubles(in, model.uv_coords.data(), static_cast<std::size_t>(2) * n);
    model.sym_index = read_ints(in, n);
    model.landmark_indices = read_ints(in, landmarks);
    model.symmetry_sign = read_ints(in, modes);
    model.validate();
    return model;
}

}  // namespace shapewarp
