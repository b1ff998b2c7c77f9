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

#include <functional>
#include <memory>
#include <optional>

namespace thrillette {

/// Inclusive scan. Link stores items and folds a local total; Main turns
/// the totals into per-worker offsets with one exclusive prefix sum; Push
/// accumulates from the offset.
template <typename T, typename F>
class PrefixSumNode : public StoreNode<T>
{
public:
    PrefixSumNode(Context& ctx, DIABasePtr parent, F s, T initial)
        : StoreNode<T>(ctx, "PrefixSum", { std::move(parent) }), s_(std::move(s)), initial_(std::move(initial)) { }

    void add(const T& x) {
        local_ = local_ ? s_(*local_, x) : x;
        StoreNode<T>::add(x);
    }

    void execute() override {
        auto lift = [this](const std::optional<T>& a, const std::optional<T>& b) {
            if (!a) return b;
            if (!b) return a;
            return std::optional<T>(s_(*a, *b));
        };
        auto before = this->context().net().ex_prefix_sum(local_, lift, std::optional<T>());
        offset_ = before ? s_(initial_, *before) : initial_;
        local_.reset();
    }

protected:
    void run_push(bool consume) override {
        T acc = offset_;
        auto r = this->file_->reader(consume);
        while (r.has_next()) {
            acc = s_(acc, r.template next<T>());
            this->emit(acc);
        }
    }

private:
    F s_;
    T initial_;
    T offset_{};
    std::optional<T> local_;
};

/// Item j is initial ⊕ x_0 ⊕ ... ⊕ x_j.
template <typename T, typename S, typename F = std::plus<T>>
DIA<T> prefix_sum(const DIA<T, S>& in, F s = F(), T initial = T()) {
    auto node = std::make_shared<PrefixSumNode<T, F>>(in.context(), in.base(), std::move(s), std::move(initial));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<T>(node);
}

} // namespace thrillette
