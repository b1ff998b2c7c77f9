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

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>

namespace thrillette {

enum class ZipMode { strict, cut, pad };

/*
 * Zip of k DIAs. Link stores each input; Main aligns all inputs to a
 * balanced split of the output index range; Push combines the aligned
 * items position by position.
 */
template <typename Out, typename Z, ZipMode Mode, typename... Ins>
class ZipNode : public DIANode<Out>
{
    static constexpr std::size_t K = sizeof...(Ins);
    using InTuple = std::tuple<Ins...>;

public:
    ZipNode(Context& ctx, std::vector<DIABasePtr> parents, Z z, InTuple pads)
        : DIANode<Out>(ctx, Mode == ZipMode::strict ? "Zip" : Mode == ZipMode::cut ? "ZipCut" : "ZipPad",
                       std::move(parents)),
          z_(std::move(z)), pads_(std::move(pads)) {
        for (auto& f : in_) f = ctx.make_file();
    }

    template <std::size_t I>
    void add(const std::tuple_element_t<I, InTuple>& x) {
        writers_[I]->put(x);
    }

    void start_pre_op(std::size_t i) override { writers_[i].emplace(in_[i]->writer()); }
    void stop_pre_op(std::size_t i) override {
        writers_[i]->close();
        writers_[i].reset();
    }

    void execute() override {
        Context& ctx = this->context();
        std::vector<std::size_t> local(K);
        for (std::size_t i = 0; i < K; ++i) local[i] = in_[i]->size();
        auto counts = gather_counts(ctx, local);
        std::array<std::size_t, K> n{};
        for (std::size_t i = 0; i < K; ++i) n[i] = total_of(counts, i);

        std::size_t n_out = n[0];
        for (std::size_t i = 1; i < K; ++i) {
            if constexpr (Mode == ZipMode::strict) {
                if (n[i] != n[0])
                    throw ContractError("zip of DIAs with different sizes " + std::to_string(n[0]) + " and " +
                                        std::to_string(n[i]));
            }
            else if constexpr (Mode == ZipMode::cut) {
                n_out = std::min(n_out, n[i]);
            }
            else {
                n_out = std::max(n_out, n[i]);
            }
        }
        const auto bounds = balanced_bounds(n_out, ctx.num_workers());
        out_count_ = bounds[ctx.my_rank() + 1] - bounds[ctx.my_rank()];
        exchange(ctx, counts, bounds, std::make_index_sequence<K>());
    }

    void dispose_data() override {
        for (auto& f : recv_)
            if (f) f->clear();
    }

protected:
    void run_push(bool consume) override { push(consume, std::make_index_sequence<K>()); }

private:
    template <std::size_t... I>
    void exchange(Context& ctx, const std::vector<std::vector<std::size_t>>& counts,
                  const std::vector<std::size_t>& bounds, std::index_sequence<I...>) {
        ((recv_[I] = redistribute<std::tuple_element_t<I, InTuple>>(
              ctx, *in_[I], offset_of(counts, ctx.my_rank(), I), bounds),
          in_[I]->clear()),
         ...);
    }

    template <std::size_t... I>
    void push(bool consume, std::index_sequence<I...>) {
        auto readers = std::make_tuple(recv_[I]->reader(consume)...);
        for (std::size_t j = 0; j < out_count_; ++j) {
            this->emit(z_(next_or_pad<I>(std::get<I>(readers))...));
        }
    }

    template <std::size_t I, typename Reader>
    std::tuple_element_t<I, InTuple> next_or_pad(Reader& r) {
        if (r.has_next()) return r.template next<std::tuple_element_t<I, InTuple>>();
        return std::get<I>(pads_);
    }

    Z z_;
    InTuple pads_;
    std::array<data::FilePtr, K> in_;
    std::array<data::FilePtr, K> recv_;
    std::array<std::optional<data::File::Writer>, K> writers_;
    std::size_t out_count_ = 0;
};

namespace detail {

template <ZipMode Mode, typename Z, typename... Ds, std::size_t... I>
auto make_zip(Z z, std::tuple<typename Ds::ValueType...> pads, std::index_sequence<I...>, const Ds&... ds) {
    using Out = std::decay_t<std::invoke_result_t<Z&, const typename Ds::ValueType&...>>;
    using Node = ZipNode<Out, Z, Mode, typename Ds::ValueType...>;
    auto& ctx = std::get<0>(std::tie(ds...)).context();
    auto node = std::make_shared<Node>(ctx, std::vector<DIABasePtr>{ ds.base()... }, std::move(z), std::move(pads));
    (ds.link(node.get(), I,
             [n = node.get()](const typename Ds::ValueType& x) { n->template add<I>(x); }),
     ...);
    return DIA<Out>(node);
}

} // namespace detail

/// z(a_i, b_i) for every index i; the inputs must have equal size.
template <typename A, typename SA, typename B, typename SB, typename Z>
auto zip(const DIA<A, SA>& a, const DIA<B, SB>& b, Z z) {
    return detail::make_zip<ZipMode::strict>(std::move(z), std::tuple<A, B>{}, std::make_index_sequence<2>(), a, b);
}

template <typename A, typename SA, typename B, typename SB, typename C, typename SC, typename Z>
auto zip(const DIA<A, SA>& a, const DIA<B, SB>& b, const DIA<C, SC>& c, Z z) {
    return detail::make_zip<ZipMode::strict>(std::move(z), std::tuple<A, B, C>{}, std::make_index_sequence<3>(), a, b,
                                             c);
}

/// Zip over the shortest input's length.
template <typename A, typename SA, typename B, typename SB, typename Z>
auto zip_cut(const DIA<A, SA>& a, const DIA<B, SB>& b, Z z) {
    return detail::make_zip<ZipMode::cut>(std::move(z), std::tuple<A, B>{}, std::make_index_sequence<2>(), a, b);
}

/// Zip over the longest input's length, filling missing items with pads.
template <typename A, typename SA, typename B, typename SB, typename Z>
auto zip_pad(const DIA<A, SA>& a, const DIA<B, SB>& b, Z z, A pad_a = A(), B pad_b = B()) {
    return detail::make_zip<ZipMode::pad>(std::move(z), std::tuple<A, B>{ std::move(pad_a), std::move(pad_b) },
                                          std::make_index_sequence<2>(), a, b);
}

/// z(x, i) with i the global index of x. Only the item counts are
/// exchanged; items stay where they are.
template <typename T, typename Out, typename Z>
class IndexNode : public DIANode<Out>
{
public:
    IndexNode(Context& ctx, DIABasePtr parent, Z z)
        : DIANode<Out>(ctx, "ZipWithIndex", { std::move(parent) }), file_(ctx.make_file()), z_(std::move(z)) { }

    void start_pre_op(std::size_t) override { writer_.emplace(file_->writer()); }
    void add(const T& x) { writer_->put(x); }
    void stop_pre_op(std::size_t) override {
        writer_->close();
        writer_.reset();
    }
    void execute() override {
        offset_ = this->context().net().ex_prefix_sum(file_->size(), std::plus<>(), std::size_t(0));
    }
    void dispose_data() override { file_->clear(); }

protected:
    void run_push(bool consume) override {
        auto r = file_->reader(consume);
        std::size_t i = offset_;
        while (r.has_next()) this->emit(z_(r.template next<T>(), i++));
    }

private:
    data::FilePtr file_;
    std::optional<data::File::Writer> writer_;
    Z z_;
    std::size_t offset_ = 0;
};

template <typename T, typename S, typename Z>
auto zip_with_index(const DIA<T, S>& in, Z z) {
    using Out = std::decay_t<std::invoke_result_t<Z&, const T&, std::size_t>>;
    auto node = std::make_shared<IndexNode<T, Out, Z>>(in.context(), in.base(), std::move(z));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<Out>(node);
}

/// Pairs (global index, item).
template <typename T, typename S>
auto zip_with_index(const DIA<T, S>& in) {
    return zip_with_index(in, [](const T& x, std::size_t i) { return std::pair<std::size_t, T>(i, x); });
}

} // namespace thrillette
