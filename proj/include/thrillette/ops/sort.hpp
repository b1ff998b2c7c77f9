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
#include <thrillette/engine/dia.hpp>
#include <thrillette/ops/runs.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace thrillette {

/// Sample size per worker for p workers.
inline std::size_t sort_sample_size(std::size_t p) {
    std::size_t log = p <= 1 ? 0 : static_cast<std::size_t>(std::bit_width(p - 1));
    return 16 * log + 32;
}

/// An item with its input number and global position; the position makes
/// every key distinct, which is how equal keys are spread over workers.
template <typename T>
using SortKey = std::tuple<T, std::uint32_t, std::uint64_t>;

template <typename T, typename Cmp>
struct SortKeyLess
{
    Cmp cmp;
    bool operator()(const T& a, std::uint32_t ia, std::uint64_t pa, const SortKey<T>& b) const {
        if (cmp(a, std::get<0>(b))) return true;
        if (cmp(std::get<0>(b), a)) return false;
        return std::tie(ia, pa) < std::tie(std::get<1>(b), std::get<2>(b));
    }
    bool operator()(const SortKey<T>& a, const T& b, std::uint32_t ib, std::uint64_t pb) const {
        if (cmp(std::get<0>(a), b)) return true;
        if (cmp(b, std::get<0>(a))) return false;
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(ib, pb);
    }
    bool operator()(const SortKey<T>& a, const SortKey<T>& b) const {
        return (*this)(std::get<0>(a), std::get<1>(a), std::get<2>(a), b);
    }
};

/*
 * Implicit balanced binary tree over p-1 splitters, padded with sentinels
 * above every key to 2^ceil(log2 p) - 1 nodes. classify() takes ceil(log2
 * p) comparisons and returns j with s_{j-1} < x <= s_j.
 */
template <typename T, typename Cmp>
class SplitterTree
{
public:
    SplitterTree(std::vector<SortKey<T>> splitters, Cmp cmp) : less_{ std::move(cmp) } {
        buckets_ = std::bit_ceil(std::max<std::size_t>(splitters.size() + 1, 1));
        levels_ = static_cast<std::size_t>(std::countr_zero(buckets_));
        num_splitters_ = splitters.size();
        std::vector<std::optional<SortKey<T>>> padded(buckets_ - 1);
        for (std::size_t i = 0; i < splitters.size(); ++i) padded[i] = std::move(splitters[i]);
        tree_.resize(buckets_);
        build(1, 0, padded.size(), padded);
    }

    std::size_t num_buckets() const { return buckets_; }
    std::size_t num_splitters() const { return num_splitters_; }
    std::size_t tree_size() const { return tree_.size() - 1; }
    std::size_t levels() const { return levels_; }

    std::size_t classify(const T& x, std::uint32_t input, std::uint64_t pos) const {
        std::size_t i = 1;
        for (std::size_t l = 0; l < levels_; ++l) {
            const auto& s = tree_[i];
            // go right iff x > splitter; sentinels are above everything
            bool right = s && less_(*s, x, input, pos);
            i = 2 * i + (right ? 1 : 0);
        }
        return i - buckets_;
    }

private:
    void build(std::size_t node, std::size_t lo, std::size_t hi, std::vector<std::optional<SortKey<T>>>& s) {
        if (lo >= hi) return;
        std::size_t mid = (lo + hi) / 2;
        tree_[node] = s[mid];
        build(2 * node, lo, mid, s);
        build(2 * node + 1, mid + 1, hi, s);
    }

    SortKeyLess<T, Cmp> less_;
    std::size_t buckets_ = 1, levels_ = 0, num_splitters_ = 0;
    std::vector<std::optional<SortKey<T>>> tree_;
};

/*
 * Sample sort of one or more inputs. Link stores every input and draws a
 * reservoir sample. Main picks p-1 equidistant splitters on worker 0,
 * broadcasts them and routes every item to its bucket's worker; the
 * receiver forms sorted runs within its budget. Push merges the runs.
 *
 * Input i is received from its own stream, so the received sequence is in
 * (input, global position) order and stable sorting preserves it among
 * equal keys.
 */
template <typename T, typename Cmp>
class SortNode : public DIANode<T>
{
public:
    SortNode(Context& ctx, std::string label, std::vector<DIABasePtr> parents, Cmp cmp, bool check_sorted)
        : DIANode<T>(ctx, std::move(label), std::move(parents)), cmp_(std::move(cmp)), check_sorted_(check_sorted) {
        const std::size_t k = this->parents().size();
        in_.resize(k);
        for (auto& f : in_) f = ctx.make_file();
        writers_.resize(k);
        first_.resize(k);
        last_.resize(k);
        count_.assign(k, 0);
        sample_cap_ = sort_sample_size(ctx.num_workers());
        rng_.seed(hash_combine(hash_combine(ctx.seed(), ctx.my_rank()), this->id()));
    }

    bool needs_memory() const override { return true; }

    void start_pre_op(std::size_t i) override { writers_[i].emplace(in_[i]->writer()); }

    void add(std::size_t i, const T& x) {
        if (check_sorted_) {
            if (last_[i] && cmp_(x, *last_[i]))
                throw ContractError("merge input " + std::to_string(i) + " is not sorted");
            if (!first_[i]) first_[i] = x;
            last_[i] = x;
        }
        const std::uint64_t local = count_[i]++;
        ++seen_;
        if (sample_.size() < sample_cap_) {
            sample_.emplace_back(x, static_cast<std::uint32_t>(i), local);
        }
        else {
            std::uint64_t j = std::uniform_int_distribution<std::uint64_t>(0, seen_ - 1)(rng_);
            if (j < sample_cap_) sample_[j] = SortKey<T>(x, static_cast<std::uint32_t>(i), local);
        }
        writers_[i]->put(x);
    }

    void stop_pre_op(std::size_t i) override {
        writers_[i]->close();
        writers_[i].reset();
    }

    void execute() override {
        Context& ctx = this->context();
        const std::size_t p = ctx.num_workers(), k = in_.size();

        if (check_sorted_) check_boundaries();

        std::vector<std::size_t> local(k);
        for (std::size_t i = 0; i < k; ++i) local[i] = in_[i]->size();
        std::vector<std::size_t> offset = ctx.net().ex_prefix_sum(
            local,
            [](std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
                for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
                return a;
            },
            std::vector<std::size_t>(k, 0));

        std::vector<std::size_t> total = ctx.net().all_reduce(local, [](std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
            return a;
        });

        for (auto& s : sample_) std::get<2>(s) += offset[std::get<1>(s)];
        SortKeyLess<T, Cmp> less{ cmp_ };
        auto gathered = ctx.net().gather(sample_, 0);
        sample_.clear();
        std::vector<SortKey<T>> splitters;
        if (ctx.my_rank() == 0 && !gathered.empty()) {
            std::sort(gathered.begin(), gathered.end(), less);
            std::size_t n = 0;
            for (auto t : total) n += t;
            for (std::size_t j = 0; j + 1 < p; ++j) {
                SortKey<T> s = gathered[std::min(gathered.size() - 1, (j + 1) * gathered.size() / p)];
                // items equal to the splitter key split at the exact worker quantile
                std::size_t q = (j + 1) * n / p, in = 0;
                while (in + 1 < k && q >= total[in]) q -= total[in++];
                std::get<1>(s) = static_cast<std::uint32_t>(in);
                std::get<2>(s) = q;
                splitters.push_back(std::move(s));
            }
        }
        gathered.clear();
        splitters = ctx.net().broadcast(splitters, 0);
        SplitterTree<T, Cmp> tree(std::move(splitters), cmp_);

        std::vector<std::unique_ptr<data::Stream>> streams;
        for (std::size_t i = 0; i < k; ++i) {
            streams.push_back(ctx.make_stream(ctx.next_stream_id(), data::StreamKind::cat));
            auto writers = streams[i]->writers();
            auto r = in_[i]->reader(true);
            std::uint64_t pos = offset[i];
            while (r.has_next()) {
                T x = r.template next<T>();
                std::size_t b = tree.classify(x, static_cast<std::uint32_t>(i), pos++);
                writers[std::min(b, p - 1)].put(x);
            }
            for (auto& w : writers) w.close();
        }
        in_.clear();

        auto item_less = [c = cmp_](const T& a, const T& b) { return c(a, b); };
        detail::RunBuilder<T, decltype(item_less)> runs(ctx, item_less, budget(), &ctx.stats().sort_runs_spilled);
        for (std::size_t i = 0; i < k; ++i) {
            auto r = streams[i]->cat_reader();
            while (r.has_next()) runs.add(r.template next<T>());
            streams[i]->close();
        }
        runs_ = runs.finish();
    }

    void dispose_data() override { runs_.clear(); }
    std::size_t num_runs() const { return runs_.size(); }

protected:
    void run_push(bool consume) override {
        if (runs_.size() == 1) {
            auto r = runs_[0]->reader(consume);
            while (r.has_next()) this->emit(r.template next<T>());
        }
        else if (runs_.size() > 1) {
            detail::MultiwayMerge<T, Cmp> m(runs_, cmp_, consume);
            while (m.has_next()) this->emit(m.next());
        }
        if (consume) runs_.clear();
    }

private:
    std::size_t budget() const {
        std::size_t b = this->memory_budget();
        return b ? b : this->context().op_memory();
    }

    /// Each input must also be ordered across worker boundaries.
    void check_boundaries() {
        std::vector<std::optional<std::pair<T, T>>> ends(in_.size());
        for (std::size_t i = 0; i < in_.size(); ++i)
            if (first_[i]) ends[i].emplace(*first_[i], *last_[i]);
        first_.assign(in_.size(), std::nullopt);
        last_.assign(in_.size(), std::nullopt);
        auto all = this->context().net().all_gather_value(ends);
        for (std::size_t i = 0; i < in_.size(); ++i) {
            const T* prev = nullptr;
            for (const auto& w : all) {
                if (!w[i]) continue;
                if (prev && cmp_(w[i]->first, *prev))
                    throw ContractError("merge input " + std::to_string(i) + " is not sorted");
                prev = &w[i]->second;
            }
        }
    }

    Cmp cmp_;
    bool check_sorted_;
    std::vector<data::FilePtr> in_;
    std::vector<std::optional<data::File::Writer>> writers_;
    std::vector<std::optional<T>> first_, last_;
    std::vector<std::uint64_t> count_;
    std::vector<SortKey<T>> sample_;
    std::size_t sample_cap_ = 0;
    std::uint64_t seen_ = 0;
    std::mt19937_64 rng_;
    std::vector<data::FilePtr> runs_;
};

/// Globally sorted by cmp; stable.
template <typename T, typename S, typename Cmp = std::less<T>>
DIA<T> sort(const DIA<T, S>& in, Cmp cmp = Cmp()) {
    auto node = std::make_shared<SortNode<T, Cmp>>(in.context(), "Sort", std::vector<DIABasePtr>{ in.base() },
                                                   std::move(cmp), false);
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(0, x); });
    return DIA<T>(node);
}

namespace detail {

template <typename T, typename Cmp, typename... Ds>
DIA<T> make_merge(Cmp cmp, const Ds&... ds) {
    auto& ctx = std::get<0>(std::tie(ds...)).context();
    auto node = std::make_shared<SortNode<T, Cmp>>(ctx, "Merge", std::vector<DIABasePtr>{ ds.base()... },
                                                   std::move(cmp), true);
    std::size_t i = 0;
    auto link_one = [&](const auto& d) {
        d.link(node.get(), i, [n = node.get(), idx = i](const T& x) { n->add(idx, x); });
        ++i;
    };
    (link_one(ds), ...);
    return DIA<T>(node);
}

} // namespace detail

/// Merge of globally sorted inputs; equal items keep input order.
template <typename T, typename SA, typename SB, typename Cmp = std::less<T>>
DIA<T> merge(const DIA<T, SA>& a, const DIA<T, SB>& b, Cmp cmp = Cmp()) {
    return detail::make_merge<T>(std::move(cmp), a, b);
}

template <typename T, typename SA, typename SB, typename SC, typename SD, typename Cmp = std::less<T>>
DIA<T> merge(const DIA<T, SA>& a, const DIA<T, SB>& b, const DIA<T, SC>& c, const DIA<T, SD>& d, Cmp cmp = Cmp()) {
    return detail::make_merge<T>(std::move(cmp), a, b, c, d);
}

} // namespace thrillette
