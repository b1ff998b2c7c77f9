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

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace thrillette {

namespace detail {

inline constexpr double kFillFactor = 0.5;
inline constexpr std::size_t kMinSlots = 16;
inline constexpr std::size_t kPostPartitions = 16;
inline constexpr std::size_t kMaxReduceLevels = 64;

/// Maps a 64-bit hash onto [0, n).
inline std::size_t hash_range(std::uint64_t h, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

/// Approximate heap bytes owned by an item beyond its sizeof.
template <typename T>
std::size_t heap_bytes(const T& x) {
    if constexpr (data::is_fixed_size_v<T>) return 0;
    else return data::serialized_size(x);
}

/*
 * Linear probing hash table that combines items with equal keys in place.
 * Stores the item together with its key and hash.
 */
template <typename K, typename T>
class ProbingTable
{
public:
    struct Entry
    {
        std::uint64_t hash;
        K key;
        T item;
    };

    explicit ProbingTable(std::size_t slots = kMinSlots) : slots_(std::bit_ceil(std::max(slots, kMinSlots))) { }

    /// Inserts or combines; returns true if the key was new.
    template <typename Reduce>
    bool insert(std::uint64_t hash, K key, const T& item, Reduce& reduce) {
        const std::size_t mask = slots_.size() - 1;
        for (std::size_t i = hash & mask;; i = (i + 1) & mask) {
            auto& s = slots_[i];
            if (!s) {
                heap_ += heap_bytes(item);
                s.emplace(Entry{ hash, std::move(key), item });
                ++size_;
                return true;
            }
            if (s->hash == hash && s->key == key) {
                s->item = reduce(s->item, item);
                return false;
            }
        }
    }

    bool overfull() const { return static_cast<double>(size_) > kFillFactor * static_cast<double>(slots_.size()); }
    std::size_t size() const { return size_; }
    std::size_t slots() const { return slots_.size(); }
    std::size_t bytes() const { return slots_.size() * sizeof(std::optional<Entry>) + heap_; }
    static std::size_t bytes_for(std::size_t slots) { return slots * sizeof(std::optional<Entry>); }

    void grow() {
        std::vector<std::optional<Entry>> old(slots_.size() * 2);
        old.swap(slots_);
        const std::size_t mask = slots_.size() - 1;
        for (auto& s : old) {
            if (!s) continue;
            std::size_t i = s->hash & mask;
            while (slots_[i]) i = (i + 1) & mask;
            slots_[i] = std::move(s);
        }
    }

    /// Calls f(entry) for every entry in slot order and empties the table.
    template <typename F>
    void drain(F&& f) {
        for (auto& s : slots_) {
            if (!s) continue;
            f(*s);
            s.reset();
        }
        size_ = 0;
        heap_ = 0;
    }

    /// Drops all entries and storage back to the minimal size.
    void release() {
        std::vector<std::optional<Entry>>(kMinSlots).swap(slots_);
        size_ = 0;
        heap_ = 0;
    }

private:
    std::vector<std::optional<Entry>> slots_;
    std::size_t size_ = 0;
    std::size_t heap_ = 0;
};

/*
 * Receiving side of a reduction. Items are spread over kPostPartitions
 * tables, by a hash of the key or, for reduce_to_index, by index
 * sub-range. A table that would outgrow the budget is written to its
 * partition's spill File. If anything spilled, every partition is written
 * out at the end and reduced again one level deeper, with a fresh hash
 * function.
 */
template <typename K, typename T, typename KeyFn, typename RedFn, bool ToIndex>
class ReducePost
{
    using Table = ProbingTable<K, T>;

public:
    ReducePost(Context& ctx, KeyFn& key, RedFn& red, std::size_t budget, std::uint64_t seed, std::size_t level,
               std::size_t lo = 0, std::size_t hi = 0)
        : ctx_(ctx), key_(key), red_(red), budget_(budget), seed_(seed), level_(level), lo_(lo), hi_(hi) {
        if (level_ > kMaxReduceLevels) throw Error("reduce recursion exceeded " + std::to_string(kMaxReduceLevels) + " levels");
        hash_seed_ = level_seed(seed_, 2 * level_ + 1);
        part_seed_ = level_seed(seed_, 2 * level_ + 2);
        tables_.resize(parts());
        spill_.resize(parts());
    }

    void insert(const T& x) {
        K k = key_(x);
        const std::uint64_t h = data::item_hash(k, hash_seed_);
        const std::size_t part = part_of(k);
        Table& t = tables_[part];
        if (!t.insert(h, std::move(k), x, red_) || !t.overfull()) return;
        if (total_bytes() + Table::bytes_for(t.slots()) <= budget_) {
            t.grow();
            return;
        }
        spill(part);
    }

    /// Emits every reduced item; to_index output is in index order with
    /// `neutral` in unclaimed slots.
    template <typename Emit>
    void finish(Emit&& emit, const T* neutral) {
        if (!spilled_) {
            for (std::size_t p = 0; p < parts(); ++p) emit_table(p, emit, neutral);
            return;
        }
        for (std::size_t p = 0; p < parts(); ++p)
            if (tables_[p].size() > 0) spill(p);
        for (auto& t : tables_) t.release();
        for (std::size_t p = 0; p < parts(); ++p) {
            auto [plo, phi] = sub_range(p);
            if (!spill_[p] || spill_[p]->empty()) {
                if constexpr (ToIndex)
                    for (std::size_t i = plo; i < phi; ++i) emit(*neutral);
                continue;
            }
            ++ctx_.stats().reduce_recursions;
            ReducePost child(ctx_, key_, red_, budget_, seed_, level_ + 1, plo, phi);
            {
                auto r = spill_[p]->reader(true);
                while (r.has_next()) child.insert(r.template next<T>());
            }
            spill_[p].reset();
            child.finish(emit, neutral);
        }
    }

private:
    std::size_t parts() const {
        if constexpr (ToIndex) return std::max<std::size_t>(1, std::min(kPostPartitions, hi_ - lo_));
        else return kPostPartitions;
    }

    std::pair<std::size_t, std::size_t> sub_range(std::size_t p) const {
        if constexpr (ToIndex) {
            const std::size_t n = hi_ - lo_;
            return { lo_ + n * p / parts(), lo_ + n * (p + 1) / parts() };
        }
        else {
            return { 0, 0 };
        }
    }

    std::size_t part_of(const K& k) const {
        if constexpr (ToIndex) {
            const std::size_t n = hi_ - lo_;
            // inverse of sub_range
            std::size_t p = static_cast<std::size_t>((static_cast<unsigned __int128>(k - lo_) * parts()) / n);
            while (p + 1 < parts() && sub_range(p + 1).first <= k) ++p;
            while (p > 0 && sub_range(p).first > k) --p;
            return p;
        }
        else {
            return hash_range(data::item_hash(k, part_seed_), parts());
        }
    }

    std::size_t total_bytes() const {
        std::size_t b = 0;
        for (const auto& t : tables_) b += t.bytes();
        return b;
    }

    void spill(std::size_t part) {
        if (!spill_[part]) spill_[part] = ctx_.make_file();
        auto w = spill_[part]->writer();
        tables_[part].drain([&](auto& e) { w.put(e.item); });
        w.close();
        spilled_ = true;
        ++ctx_.stats().reduce_spills;
    }

    template <typename Emit>
    void emit_table(std::size_t part, Emit& emit, const T* neutral) {
        if constexpr (ToIndex) {
            std::vector<std::pair<std::size_t, T>> items;
            items.reserve(tables_[part].size());
            tables_[part].drain([&](auto& e) { items.emplace_back(e.key, std::move(e.item)); });
            std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            auto [plo, phi] = sub_range(part);
            std::size_t next = plo;
            for (auto& [i, x] : items) {
                for (; next < i; ++next) emit(*neutral);
                emit(x);
                next = i + 1;
            }
            for (; next < phi; ++next) emit(*neutral);
        }
        else {
            tables_[part].drain([&](auto& e) { emit(e.item); });
        }
    }

    Context& ctx_;
    KeyFn& key_;
    RedFn& red_;
    std::size_t budget_;
    std::uint64_t seed_, hash_seed_ = 0, part_seed_ = 0;
    std::size_t level_;
    std::size_t lo_, hi_;
    std::vector<Table> tables_;
    std::vector<data::FilePtr> spill_;
    bool spilled_ = false;
};

} // namespace detail

/*
 * ReduceByKey / ReduceToIndex. Link combines items in p pre-phase tables,
 * one per destination worker, and sends a table's contents when it would
 * outgrow the budget. Main combines the received items in the post-phase
 * tables.
 */
template <typename T, typename K, typename KeyFn, typename RedFn, bool ToIndex>
class ReduceNode : public DIANode<T>
{
    using Table = detail::ProbingTable<K, T>;

public:
    ReduceNode(Context& ctx, DIABasePtr parent, KeyFn key, RedFn red, std::size_t n = 0,
               std::optional<T> neutral = std::nullopt)
        : DIANode<T>(ctx, ToIndex ? "ReduceToIndex" : "ReduceByKey", { std::move(parent) }), key_(std::move(key)),
          red_(std::move(red)), n_(n), neutral_(std::move(neutral)), stream_id_(ctx.next_stream_id()),
          out_(ctx.make_file()) { }

    bool needs_memory() const override { return true; }

    void start_pre_op(std::size_t) override {
        Context& ctx = this->context();
        stream_ = ctx.make_stream(stream_id_, data::StreamKind::cat);
        writers_ = stream_->writers();
        tables_.assign(ctx.num_workers(), Table());
        seed_ = hash_combine(ctx.seed(), this->id());
    }

    void add(const T& x) {
        Context& ctx = this->context();
        K k = key_(x);
        std::size_t dest;
        if constexpr (ToIndex) {
            if (k >= n_)
                throw ContractError("reduce_to_index: index " + std::to_string(k) + " outside [0, " +
                                    std::to_string(n_) + ")");
            dest = balanced_owner(n_, ctx.num_workers(), k);
        }
        else {
            dest = detail::hash_range(data::item_hash(k, level_seed(seed_, 0)), ctx.num_workers());
        }
        const std::uint64_t h = data::item_hash(k, level_seed(seed_, 1000));
        Table& t = tables_[dest];
        if (!t.insert(h, std::move(k), x, red_) || !t.overfull()) return;
        std::size_t total = 0;
        for (const auto& tb : tables_) total += tb.bytes();
        if (total + Table::bytes_for(t.slots()) <= budget()) t.grow();
        else flush(dest);
    }

    void stop_pre_op(std::size_t) override {
        for (std::size_t d = 0; d < tables_.size(); ++d) flush(d);
        tables_.clear();
        for (auto& w : writers_) w.close();
        writers_.clear();
    }

    void execute() override {
        Context& ctx = this->context();
        std::size_t lo = 0, hi = 0;
        if constexpr (ToIndex) std::tie(lo, hi) = balanced_range(n_, ctx.num_workers(), ctx.my_rank());
        detail::ReducePost<K, T, KeyFn, RedFn, ToIndex> post(ctx, key_, red_, budget(), seed_, 0, lo, hi);
        {
            auto r = stream_->cat_reader();
            while (r.has_next()) post.insert(r.template next<T>());
        }
        stream_->close();
        stream_.reset();
        auto w = out_->writer();
        post.finish([&](const T& x) { w.put(x); }, neutral_ ? &*neutral_ : nullptr);
        w.close();
    }

    void dispose_data() override { out_->clear(); }

protected:
    void run_push(bool consume) override {
        auto r = out_->reader(consume);
        while (r.has_next()) this->emit(r.template next<T>());
    }

private:
    std::size_t budget() const {
        std::size_t b = this->memory_budget();
        return b ? b : this->context().op_memory();
    }

    void flush(std::size_t dest) {
        auto& w = writers_[dest];
        tables_[dest].drain([&](auto& e) { w.put(e.item); });
    }

    KeyFn key_;
    RedFn red_;
    std::size_t n_;
    std::optional<T> neutral_;
    std::uint32_t stream_id_;
    std::uint64_t seed_ = 0;
    std::unique_ptr<data::Stream> stream_;
    std::vector<data::Stream::Writer> writers_;
    std::vector<Table> tables_;
    data::FilePtr out_;
};

/// One item per distinct key k(x): the r-fold of all items with that key.
/// r must be associative and commutative. Output is in hash-partition
/// order.
template <typename T, typename S, typename KeyFn, typename RedFn>
auto reduce_by_key(const DIA<T, S>& in, KeyFn key, RedFn red) {
    using K = std::decay_t<std::invoke_result_t<KeyFn&, const T&>>;
    auto node = std::make_shared<ReduceNode<T, K, KeyFn, RedFn, false>>(in.context(), in.base(), std::move(key),
                                                                        std::move(red));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<T>(node);
}

/// reduce_by_key over (key, value) pairs with r combining values.
template <typename K, typename V, typename S, typename RedFn>
auto reduce_pair(const DIA<std::pair<K, V>, S>& in, RedFn red) {
    return reduce_by_key(
        in, [](const std::pair<K, V>& x) { return x.first; },
        [red](const std::pair<K, V>& a, const std::pair<K, V>& b) mutable {
            return std::pair<K, V>(a.first, red(a.second, b.second));
        });
}

/// DIA of size n whose item i is the r-fold of all items x with
/// index(x) == i, or `neutral` if there is none.
template <typename T, typename S, typename IndexFn, typename RedFn>
auto reduce_to_index(const DIA<T, S>& in, IndexFn index, RedFn red, std::size_t n, T neutral) {
    auto node = std::make_shared<ReduceNode<T, std::size_t, IndexFn, RedFn, true>>(
        in.context(), in.base(), std::move(index), std::move(red), n, std::move(neutral));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<T>(node);
}

} // namespace thrillette
