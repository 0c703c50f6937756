/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/gradcheck.hpp
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

#include <cstdint>
#include <string>
#include <vector>

namespace shapewarp {

struct GradCheckEntry {
    std::string op;
    double max_rel_error = 0.0;
    int probes = 0;
    std::vector<std::string> failures;  ///< probes exceeding the per-op bound
    std::string notes;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;

    double worst() const;
    bool all_below(double bound) const;
};

/// Central finite differences (relative h = 1e-5) against the analytic
/// backward pass of every differentiable operation, at `probes` random
/// points per operation. Probes avoid the non-differentiable loci: integer
/// sample coordinates, rotations near the r = 0 branch threshold, and mask
/// boundaries (masks are held fixed). Relative error is
/// |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check_all(std::uint64_t seed, int probes);

}  // namespace shapewarp
