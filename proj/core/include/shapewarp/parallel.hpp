/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/include/shapewarp/parallel.hpp
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

#include <functional>

namespace shapewarp {

/// Caps the number of worker threads used by parallel_for. 0 restores the
/// hardware default. Thread-count changes never alter numerical results:
/// parallel loops only write disjoint per-index outputs; every reduction in
/// the library runs in a fixed serial order.
void set_worker_cap(int workers);
int worker_count();

/// Runs body(i) for i in [begin, end) on the worker pool. body must only
/// touch state owned by index i.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace shapewarp
