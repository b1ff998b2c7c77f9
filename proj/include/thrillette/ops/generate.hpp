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

#include <algorithm>
#include <memory>
#include <type_traits>
#include <utility>
#include <vector>

namespace thrillette {

/// Item range [begin, end) of worker w when n items are spread evenly over
/// p workers; the first n mod p workers get one extra.
inline std::pair<std::size_t, std::size_t> balanced_range(std::size_t n, std::size_t p, std::size_t w) {
    const std::size_t q = n / p, r = n % p;
    const std::size_t begin = w * q + std::min(w, r);
    return { begin, begin + q + (w < r ? 1 : 0) };
}

/// Worker owning global index i under balanced_range.
inline std::size_t balanced_owner(std::size_t n, std::size_t p, std::size_t i) {
    const std::size_t q = n / p, r = n % p;
    const std::size_t big = r * (q + 1);
    if (i < big) return i / (q + 1);
    return r + (i - big) / q;
}

template <typename U, typename G>
class GenerateNode : public DIANode<U>
{
public:
    GenerateNode(Context& ctx, std::size_t n, G g)
        : DIANode<U>(ctx, "Generate", {}), n_(n), g_(std::move(g)) {
        std::tie(begin_, end_) = balanced_range(n, ctx.num_workers(), ctx.my_rank());
    }

    void execute() override { }

protected:
    void run_push(bool) override {
        for (std::size_t i = begin_; i < end_; ++i) this->emit(g_(i));
    }

private:
    std::size_t n_, begin_ = 0, end_ = 0;
    G g_;
};

/// DIA of g(0), ..., g(n-1).
template <typename G>
auto generate(Context& ctx, std::size_t n, G g) {
    using U = std::decay_t<std::invoke_result_t<G&, std::size_t>>;
    return DIA<U>(std::make_shared<GenerateNode<U, G>>(ctx, n, std::move(g)));
}

/// DIA of 0, ..., n-1.
inline DIA<std::size_t> generate(Context& ctx, std::size_t n) {
    return generate(ctx, n, [](std::size_t i) { return i; });
}

template <typename T>
class VectorNode : public DIANode<T>
{
public:
    VectorNode(Context& ctx, std::string label, std::vector<T> items)
        : DIANode<T>(ctx, std::move(label), {}), items_(std::move(items)) { }

    void execute() override { }
    void dispose_data() override {
        items_.clear();
        items_.shrink_to_fit();
    }

protected:
    void run_push(bool consume) override {
        for (const T& x : items_) this->emit(x);
        if (consume) dispose_data();
    }

private:
    std::vector<T> items_;
};

/// DIA whose items are `all`, given identically on every worker; each
/// worker keeps its balanced slice.
template <typename T>
DIA<T> distribute(Context& ctx, const std::vector<T>& all) {
    auto [b, e] = balanced_range(all.size(), ctx.num_workers(), ctx.my_rank());
    std::vector<T> mine(all.begin() + static_cast<std::ptrdiff_t>(b), all.begin() + static_cast<std::ptrdiff_t>(e));
    return DIA<T>(std::make_shared<VectorNode<T>>(ctx, "Distribute", std::move(mine)));
}

/// DIA made of each worker's `local` items, in rank order.
template <typename T>
DIA<T> from_local(Context& ctx, std::vector<T> local) {
    return DIA<T>(std::make_shared<VectorNode<T>>(ctx, "FromLocal", std::move(local)));
}

} // namespace thrillette
