/*
 * shapewarp - differentiable morphable-shape warping in modern C++
 *
 * File: core/src/parallel.cpp
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
#include "shapewarp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace shapewarp {

namespace {
std::atomic<int> g_worker_cap{0};
}

void set_worker_cap(int workers) { g_worker_cap.store(workers < 0 ? 0 : workers); }

int worker_count() {
    const int cap = g_worker_cap.load();
    const int hw = std::max(1u, std::thread::hardware_concurrency());
    return cap > 0 ? std::min(cap, hw) : hw;
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = std::min(worker_count(), count);
    if (workers <= 1 || count < 256) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    std::atomic<int> next_block{0};
    constexpr int kBlock = 256;
    const int num_blocks = (count + kBlock - 1) / kBlock;
    auto run = [&]() {
        for (;;) {
            const int block = next_block.fetch_add(1);
            if (block >= num_blocks) return;
            const int lo = begin + block * kBlock;
            const int hi = std::min(lo + kBlock, end);
            for (int i = lo; i < hi; ++i) body(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

}  // namespace shapewarp
