// Copyright 2026 The Thrillette Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <thrillette/engine/context.hpp>
#include <thrillette/ops/generate.hpp>

#include <algorithm>
#include <vector>

namespace thrillette {

/// Per-worker item counts of k local inputs, gathered on every worker:
/// result[w][i] is the count of input i on worker w.
inline std::vector<std::vector<std::size_t>> gather_counts(Context& ctx, const std::vector<std::size_t>& local) {
    return ctx.net().all_gather_value(local);
}

/// Global offset of this worker's part of input i.
inline std::size_t offset_of(const std::vector<std::vector<std::size_t>>& counts, std::size_t rank, std::size_t i) {
    std::size_t off = 0;
    for (std::size_t w = 0; w < rank; ++w) off += counts[w][i];
    return off;
}

inline std::size_t total_of(const std::vector<std::vector<std::size_t>>& counts, std::size_t i) {
    std::size_t n = 0;
    for (const auto& c : counts) n += c[i];
    return n;
}

/// Boundaries [b_0, ..., b_p] of a balanced split of n items.
inline std::vector<std::size_t> balanced_bounds(std::size_t n, std::size_t p) {
    std::vector<std::size_t> b(p + 1);
    for (std::size_t w = 0; w < p; ++w) b[w] = balanced_range(n, p, w).first;
    b[p] = n;
    return b;
}

/*
 * Moves items so that worker v ends up with global indices
 * [bounds[v], bounds[v+1]). `local` holds this worker's items, which
 * start at global index `offset`; local items at or beyond bounds[p] are
 * dropped. Collective. Returns the received items in global order.
 */
template <typename T>
data::FilePtr redistribute(Context& ctx, data::File& local, std::size_t offset,
                           const std::vector<std::size_t>& bounds) {
    const std::size_t p = ctx.num_workers();
    const std::size_t limit = bounds[p];
    const std::size_t keep = limit > offset ? std::min(local.size(), limit - offset) : 0;
    data::File sub(ctx.pool(), ctx.block_size());
    for (auto& b : local.range<T>(0, keep)) sub.append_block(std::move(b));

    std::vector<std::size_t> cut(p + 1);
    for (std::size_t v = 0; v < p; ++v)
        cut[v] = std::clamp(bounds[v] > offset ? bounds[v] - offset : 0, std::size_t(0), keep);
    cut[0] = 0;
    cut[p] = keep;

    auto stream = ctx.make_stream(ctx.next_stream_id(), data::StreamKind::cat);
    stream->scatter<T>(sub, cut);
    auto out = ctx.make_file();
    stream->receive_cat(*out);
    stream->close();
    return out;
}

} // namespace thrillette
