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

#include <thrillette/data/file.hpp>
#include <thrillette/data/serialization.hpp>
#include <thrillette/engine/context.hpp>

#include <algorithm>
#include <optional>
#include <vector>

namespace thrillette::detail {

/// Sorted runs held in Files, merged on read. Ties go to the earlier run.
template <typename T, typename Less>
class MultiwayMerge
{
public:
    MultiwayMerge(std::vector<data::FilePtr>& runs, Less less, bool consume) : less_(std::move(less)) {
        for (auto& f : runs) readers_.push_back(f->reader(consume));
        heads_.resize(readers_.size());
        for (std::size_t i = 0; i < readers_.size(); ++i) {
            refill(i);
            if (heads_[i]) heap_.push_back(i);
        }
        std::make_heap(heap_.begin(), heap_.end(), greater());
    }

    bool has_next() const { return !heap_.empty(); }

    const T& peek() const { return *heads_[heap_.front()]; }

    T next() {
        std::pop_heap(heap_.begin(), heap_.end(), greater());
        std::size_t i = heap_.back();
        T out = std::move(*heads_[i]);
        refill(i);
        if (heads_[i]) std::push_heap(heap_.begin(), heap_.end(), greater());
        else heap_.pop_back();
        return out;
    }

private:
    auto greater() {
        return [this](std::size_t a, std::size_t b) {
            if (less_(*heads_[b], *heads_[a])) return true;
            if (less_(*heads_[a], *heads_[b])) return false;
            return a > b;
        };
    }

    void refill(std::size_t i) {
        if (readers_[i].has_next()) heads_[i] = readers_[i].template next<T>();
        else heads_[i].reset();
    }

    Less less_;
    std::vector<data::File::Reader> readers_;
    std::vector<std::optional<T>> heads_;
    std::vector<std::size_t> heap_;
};

/*
 * Collects items into memory and writes stably sorted runs to Files when
 * the buffer exceeds the budget.
 */
template <typename T, typename Less>
class RunBuilder
{
public:
    RunBuilder(Context& ctx, Less less, std::size_t budget, std::uint64_t* spill_counter)
        : ctx_(ctx), less_(std::move(less)), budget_(budget), counter_(spill_counter) { }

    void add(T x) {
        if constexpr (data::is_fixed_size_v<T>) bytes_ += sizeof(T);
        else bytes_ += sizeof(T) + data::serialized_size(x);
        buffer_.push_back(std::move(x));
        if (bytes_ > budget_) {
            write_run();
            if (counter_) ++*counter_;
        }
    }

    /// All runs; at least one unless no item was added.
    std::vector<data::FilePtr> finish() {
        if (!buffer_.empty()) write_run();
        return std::move(runs_);
    }

private:
    void write_run() {
        std::stable_sort(buffer_.begin(), buffer_.end(), less_);
        auto f = ctx_.make_file();
        auto w = f->writer();
        for (const T& x : buffer_) w.put(x);
        w.close();
        runs_.push_back(std::move(f));
        buffer_.clear();
        buffer_.shrink_to_fit();
        bytes_ = 0;
    }

    Context& ctx_;
    Less less_;
    std::size_t budget_;
    std::uint64_t* counter_;
    std::vector<T> buffer_;
    std::size_t bytes_ = 0;
    std::vector<data::FilePtr> runs_;
};

} // namespace thrillette::detail
