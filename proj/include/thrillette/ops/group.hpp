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

#include <thrillette/common/hash.hpp>
#include <thrillette/data/item_hash.hpp>
#include <thrillette/engine/dia.hpp>
#include <thrillette/ops/generate.hpp>
#include <thrillette/ops/reduce.hpp>
#include <thrillette/ops/runs.hpp>

#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace thrillette {

namespace detail {

template <typename T, typename KeyFn>
struct KeyLess
{
    KeyFn* key;
    bool operator()(const T& a, const T& b) const { return (*key)(a) < (*key)(b); }
};

template <typename T, typename KeyFn>
using GroupMerge = MultiwayMerge<T, KeyLess<T, KeyFn>>;

} // namespace detail

/// The items of one key, handed to the group function. Items not read by
/// the function are skipped afterwards.
template <typename T, typename K, typename KeyFn, typename Merge>
class GroupIterator
{
public:
    GroupIterator(Merge& merge, KeyFn& key, const K& current) : merge_(merge), key_(key), current_(current) { }

    bool has_next() const {
        if (!merge_.has_next()) return false;
        K k = key_(merge_.peek());
        return !(k < current_) && !(current_ < k);
    }
    T next() {
        if (!has_next()) throw ContractError("read past the end of a group");
        return merge_.next();
    }

private:
    Merge& merge_;
    KeyFn& key_;
    const K& current_;
};

/*
 * GroupByKey / GroupToIndex. Items travel to the worker owning their key.
 * Main buffers received items, writes key-sorted runs whenever the budget
 * is reached, merges the runs and calls the group function once per key.
 */
template <typename U, typename T, typename K, typename KeyFn, typename GroupFn, bool ToIndex>
class GroupNode : public DIANode<U>
{
public:
    GroupNode(Context& ctx, DIABasePtr parent, KeyFn key, GroupFn g, std::size_t n = 0,
              std::optional<U> neutral = std::nullopt)
        : DIANode<U>(ctx, ToIndex ? "GroupToIndex" : "GroupByKey", { std::move(parent) }), key_(std::move(key)),
          g_(std::move(g)), n_(n), neutral_(std::move(neutral)), stream_id_(ctx.next_stream_id()),
          out_(ctx.make_file()) { }

    bool needs_memory() const override { return true; }

    void start_pre_op(std::size_t) override {
        Context& ctx = this->context();
        stream_ = ctx.make_stream(stream_id_, data::StreamKind::cat);
        writers_ = stream_->writers();
        seed_ = hash_combine(ctx.seed(), this->id());
    }

    void add(const T& x) {
        const std::size_t p = this->context().num_workers();
        K k = key_(x);
        std::size_t dest;
        if constexpr (ToIndex) {
            if (k >= n_)
                throw ContractError("group_to_index: index " + std::to_string(k) + " outside [0, " +
                                    std::to_string(n_) + ")");
            dest = balanced_owner(n_, p, k);
        }
        else {
            dest = detail::hash_range(data::item_hash(k, level_seed(seed_, 0)), p);
        }
        writers_[dest].put(x);
    }

    void stop_pre_op(std::size_t) override {
        for (auto& w : writers_) w.close();
        writers_.clear();
    }

    void execute() override {
        Context& ctx = this->context();
        detail::KeyLess<T, KeyFn> less{ &key_ };
        detail::RunBuilder<T, detail::KeyLess<T, KeyFn>> builder(ctx, less, budget(), &ctx.stats().group_runs_spilled);
        {
            auto r = stream_->cat_reader();
            while (r.has_next()) builder.add(r.template next<T>());
        }
        stream_->close();
        stream_.reset();
        auto runs = builder.finish();
        num_runs_ = runs.size();

        using Merge = detail::GroupMerge<T, KeyFn>;
        Merge merge(runs, less, true);
        auto w = out_->writer();
        std::size_t next_index = 0, hi = 0;
        if constexpr (ToIndex) std::tie(next_index, hi) = balanced_range(n_, ctx.num_workers(), ctx.my_rank());
        while (merge.has_next()) {
            const K k = key_(merge.peek());
            if constexpr (ToIndex)
                for (; next_index < k; ++next_index) w.put(*neutral_);
            GroupIterator<T, K, KeyFn, Merge> it(merge, key_, k);
            w.put(U(g_(k, it)));
            while (it.has_next()) it.next();
            if constexpr (ToIndex) next_index = k + 1;
        }
        if constexpr (ToIndex)
            for (; next_index < hi; ++next_index) w.put(*neutral_);
        w.close();
    }

    void dispose_data() override { out_->clear(); }
    std::size_t num_runs() const { return num_runs_; }

protected:
    void run_push(bool consume) override {
        auto r = out_->reader(consume);
        while (r.has_next()) this->emit(r.template next<U>());
    }

private:
    std::size_t budget() const {
        std::size_t b = this->memory_budget();
        return b ? b : this->context().op_memory();
    }

    KeyFn key_;
    GroupFn g_;
    std::size_t n_;
    std::optional<U> neutral_;
    std::uint32_t stream_id_;
    std::uint64_t seed_ = 0;
    std::unique_ptr<data::Stream> stream_;
    std::vector<data::Stream::Writer> writers_;
    data::FilePtr out_;
    std::size_t num_runs_ = 0;
};

/// One output g(key, items) per distinct key; `items` has has_next() and
/// next(). Output per worker is ordered by key.
template <typename T, typename S, typename KeyFn, typename GroupFn>
auto group_by_key(const DIA<T, S>& in, KeyFn key, GroupFn g) {
    using K = std::decay_t<std::invoke_result_t<KeyFn&, const T&>>;
    using Probe = GroupIterator<T, K, KeyFn, detail::GroupMerge<T, KeyFn>>;
    using U = std::decay_t<std::invoke_result_t<GroupFn&, const K&, Probe&>>;
    auto node = std::make_shared<GroupNode<U, T, K, KeyFn, GroupFn, false>>(in.context(), in.base(), std::move(key),
                                                                           std::move(g));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<U>(node);
}

/// DIA of size n: item i is g(i, items with index i), or `neutral` when
/// no item has index i.
template <typename T, typename S, typename IndexFn, typename GroupFn, typename U>
auto group_to_index(const DIA<T, S>& in, IndexFn index, GroupFn g, std::size_t n, U neutral) {
    auto node = std::make_shared<GroupNode<U, T, std::size_t, IndexFn, GroupFn, true>>(
        in.context(), in.base(), std::move(index), std::move(g), n, std::move(neutral));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<U>(node);
}

} // namespace thrillette
