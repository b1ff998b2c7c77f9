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

#include <thrillette/engine/dia.hpp>
#include <thrillette/ops/exchange.hpp>

#include <algorithm>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

namespace thrillette {

enum class WindowMode { sliding, disjoint };

/*
 * Windows of k consecutive items. Main gathers the item counts and fetches
 * the k-1 items following this worker's part from its successors (and
 * through empty successors), so every window is computed on the worker
 * holding its first item.
 *
 * The window function receives the global index of the window's first
 * item and the items. In sliding mode there is no final partial window.
 * In disjoint mode the last window may be shorter than k.
 */
template <typename U, typename T, typename F, WindowMode Mode, bool Flat>
class WindowNode : public DIANode<U>
{
public:
    WindowNode(Context& ctx, DIABasePtr parent, std::size_t k, F f)
        : DIANode<U>(ctx, Flat ? "FlatWindow" : "Window", { std::move(parent) }), k_(k), f_(std::move(f)),
          file_(ctx.make_file()) {
        if (k_ == 0) throw ContractError("window size must be at least 1");
    }

    void start_pre_op(std::size_t) override { writer_.emplace(file_->writer()); }
    void add(const T& x) { writer_->put(x); }
    void stop_pre_op(std::size_t) override {
        writer_->close();
        writer_.reset();
    }

    void execute() override {
        Context& ctx = this->context();
        const std::size_t p = ctx.num_workers(), me = ctx.my_rank();
        auto counts = gather_counts(ctx, { this->file_->size() });
        std::vector<std::size_t> start(p + 1, 0);
        for (std::size_t w = 0; w < p; ++w) start[w + 1] = start[w] + counts[w][0];
        offset_ = start[me];
        n_ = start[p];

        // worker v needs [start[v+1], start[v+1] + k - 1)
        auto stream = ctx.make_stream(ctx.next_stream_id(), data::StreamKind::cat);
        auto writers = stream->writers();
        const std::size_t mine_lo = start[me], mine_hi = start[me + 1];
        for (std::size_t v = 0; v < me; ++v) {
            if (counts[v][0] == 0) continue;
            const std::size_t lo = std::max(start[v + 1], mine_lo);
            const std::size_t hi = std::min(start[v + 1] + k_ - 1, mine_hi);
            if (lo >= hi) continue;
            auto r = this->file_->template reader_at<T>(lo - mine_lo);
            for (std::size_t i = lo; i < hi; ++i) writers[v].put(r.template next<T>());
        }
        for (auto& w : writers) w.close();
        tail_.clear();
        auto r = stream->cat_reader();
        while (r.has_next()) tail_.push_back(r.template next<T>());
        stream->close();
    }

    void dispose_data() override {
        file_->clear();
        tail_.clear();
    }

protected:
    void run_push(bool consume) override {
        std::deque<T> win;
        std::vector<T> buf;
        const std::size_t local = this->file_->size();
        const std::size_t end = offset_ + local;
        auto r = this->file_->reader(consume);
        std::size_t t = 0;
        auto next_item = [&]() -> std::optional<T> {
            if (r.has_next()) return r.template next<T>();
            if (t < tail_.size()) return tail_[t++];
            return std::nullopt;
        };
        if constexpr (Mode == WindowMode::sliding) {
            if (n_ < k_) return;
            // windows starting at [offset_, min(end, n - k + 1))
            const std::size_t last_start = n_ - k_ + 1;
            for (std::size_t s = offset_; s < std::min(end, last_start);) {
                while (win.size() < k_) {
                    auto x = next_item();
                    if (!x) return;
                    win.push_back(std::move(*x));
                }
                buf.assign(win.begin(), win.end());
                call(s, buf);
                win.pop_front();
                ++s;
            }
        }
        else {
            // first window start at or after offset_
            std::size_t s = (offset_ + k_ - 1) / k_ * k_;
            std::size_t pos = offset_;
            // skip items belonging to a window started on a predecessor
            for (; pos < s && pos < end; ++pos) next_item();
            for (; s < end; s += k_) {
                buf.clear();
                for (std::size_t i = 0; i < k_ && s + i < n_; ++i) {
                    auto x = next_item();
                    if (!x) break;
                    buf.push_back(std::move(*x));
                }
                call(s, buf);
            }
        }
    }

private:
    void call(std::size_t index, const std::vector<T>& items) {
        std::span<const T> view(items.data(), items.size());
        if constexpr (Flat) f_(index, view, [this](const U& u) { this->emit(u); });
        else this->emit(f_(index, view));
    }

    std::size_t k_;
    F f_;
    data::FilePtr file_;
    std::optional<data::File::Writer> writer_;
    std::size_t offset_ = 0, n_ = 0;
    std::vector<T> tail_;
};

namespace detail {

template <typename U, WindowMode Mode, bool Flat, typename T, typename S, typename F>
DIA<U> make_window(const DIA<T, S>& in, std::size_t k, F f) {
    auto node = std::make_shared<WindowNode<U, T, F, Mode, Flat>>(in.context(), in.base(), k, std::move(f));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<U>(node);
}

} // namespace detail

/// w(index, items) for every k consecutive items, n-k+1 windows in total.
template <typename T, typename S, typename W>
auto window(const DIA<T, S>& in, std::size_t k, W w) {
    using U = std::decay_t<std::invoke_result_t<W&, std::size_t, std::span<const T>>>;
    return detail::make_window<U, WindowMode::sliding, false>(in, k, std::move(w));
}

/// w(index, items) for the windows [0,k), [k,2k), ...
template <typename T, typename S, typename W>
auto disjoint_window(const DIA<T, S>& in, std::size_t k, W w) {
    using U = std::decay_t<std::invoke_result_t<W&, std::size_t, std::span<const T>>>;
    return detail::make_window<U, WindowMode::disjoint, false>(in, k, std::move(w));
}

/// Sliding windows; f(index, items, emit) emits any number of items.
template <typename U, typename T, typename S, typename F>
DIA<U> flat_window(const DIA<T, S>& in, std::size_t k, F f) {
    return detail::make_window<U, WindowMode::sliding, true>(in, k, std::move(f));
}

template <typename U, typename T, typename S, typename F>
DIA<U> flat_disjoint_window(const DIA<T, S>& in, std::size_t k, F f) {
    return detail::make_window<U, WindowMode::disjoint, true>(in, k, std::move(f));
}

} // namespace thrillette
