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

#include <memory>
#include <optional>
#include <vector>

namespace thrillette {

/// All items of all inputs, without communication. Each worker holds its
/// own parts of the inputs in input order.
template <typename T>
class UnionNode : public StoreNode<T>
{
public:
    UnionNode(Context& ctx, std::vector<DIABasePtr> parents) : StoreNode<T>(ctx, "Union", std::move(parents)) { }
};

/// Inputs one after another in index order, rebalanced over the workers.
template <typename T>
class ConcatNode : public DIANode<T>
{
public:
    ConcatNode(Context& ctx, std::vector<DIABasePtr> parents) : DIANode<T>(ctx, "Concat", std::move(parents)) {
        in_.resize(this->parents().size());
        for (auto& f : in_) f = ctx.make_file();
        writers_.resize(in_.size());
    }

    void start_pre_op(std::size_t i) override { writers_[i].emplace(in_[i]->writer()); }
    void add(std::size_t i, const T& x) { writers_[i]->put(x); }
    void stop_pre_op(std::size_t i) override {
        writers_[i]->close();
        writers_[i].reset();
    }

    void execute() override {
        Context& ctx = this->context();
        const std::size_t k = in_.size(), p = ctx.num_workers(), me = ctx.my_rank();
        std::vector<std::size_t> local(k);
        for (std::size_t i = 0; i < k; ++i) local[i] = in_[i]->size();
        auto counts = gather_counts(ctx, local);
        std::size_t n = 0;
        std::vector<std::size_t> base(k);
        for (std::size_t i = 0; i < k; ++i) {
            base[i] = n;
            n += total_of(counts, i);
        }
        const auto target = balanced_bounds(n, p);
        for (std::size_t i = 0; i < k; ++i) {
            // target bounds expressed in input i's own index space
            std::vector<std::size_t> bounds(p + 1);
            const std::size_t ni = total_of(counts, i);
            for (std::size_t v = 0; v <= p; ++v)
                bounds[v] = std::clamp(target[v] > base[i] ? target[v] - base[i] : 0, std::size_t(0), ni);
            recv_.push_back(redistribute<T>(ctx, *in_[i], offset_of(counts, me, i), bounds));
            in_[i]->clear();
        }
    }

    void dispose_data() override { recv_.clear(); }

protected:
    void run_push(bool consume) override {
        for (auto& f : recv_) {
            auto r = f->reader(consume);
            while (r.has_next()) this->emit(r.template next<T>());
        }
    }

private:
    std::vector<data::FilePtr> in_, recv_;
    std::vector<std::optional<data::File::Writer>> writers_;
};

namespace detail {

template <typename Node, typename T, typename... Ds>
DIA<T> make_multi(const Ds&... ds) {
    auto& ctx = std::get<0>(std::tie(ds...)).context();
    auto node = std::make_shared<Node>(ctx, std::vector<DIABasePtr>{ ds.base()... });
    std::size_t i = 0;
    auto link_one = [&](const auto& d) {
        if constexpr (std::is_same_v<Node, UnionNode<T>>)
            d.link(node.get(), i, [n = node.get()](const T& x) { n->add(x); });
        else
            d.link(node.get(), i, [n = node.get(), idx = i](const T& x) { n->add(idx, x); });
        ++i;
    };
    (link_one(ds), ...);
    return DIA<T>(node);
}

} // namespace detail

template <typename T, typename... S>
DIA<T> union_all(const DIA<T, S>&... ds) {
    static_assert(sizeof...(S) >= 1);
    return detail::make_multi<UnionNode<T>, T>(ds...);
}

template <typename T, typename... S>
DIA<T> concat(const DIA<T, S>&... ds) {
    static_assert(sizeof...(S) >= 1);
    return detail::make_multi<ConcatNode<T>, T>(ds...);
}

} // namespace thrillette
