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
#include <string>
#include <vector>

namespace thrillette {

namespace detail {

/// Action over one parent whose items are folded by `Acc` during Link and
/// finished collectively in Main.
template <typename T, typename R, typename Acc>
class FoldAction : public ActionNode<R>
{
public:
    FoldAction(Context& ctx, std::string label, DIABasePtr parent, Acc acc)
        : ActionNode<R>(ctx, std::move(label), { std::move(parent) }), acc_(std::move(acc)) { }

    void add(const T& x) { acc_.add(x); }
    void execute() override { this->set_result(acc_.finish(this->context())); }

private:
    Acc acc_;
};

template <typename R, typename T, typename S, typename Acc>
Future<R> make_fold_action(const DIA<T, S>& in, const std::string& label, Acc acc) {
    auto node = std::make_shared<FoldAction<T, R, Acc>>(in.context(), label, in.base(), std::move(acc));
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return Future<R>(node);
}

struct CountAcc
{
    std::size_t n = 0;
    template <typename T>
    void add(const T&) { ++n; }
    std::size_t finish(Context& ctx) {
        return ctx.net().all_reduce(n, [](std::size_t a, std::size_t b) { return a + b; });
    }
};

template <typename T, typename F>
struct OptFoldAcc
{
    F f;
    std::optional<T> v;
    void add(const T& x) { v = v ? f(*v, x) : x; }
    std::optional<T> finish(Context& ctx) {
        return ctx.net().all_reduce(v, [this](const std::optional<T>& a, const std::optional<T>& b) {
            if (!a) return b;
            if (!b) return a;
            return std::optional<T>(f(*a, *b));
        });
    }
};

template <typename T, typename F>
struct InitFoldAcc
{
    OptFoldAcc<T, F> inner;
    T initial;
    void add(const T& x) { inner.add(x); }
    T finish(Context& ctx) {
        auto total = inner.finish(ctx);
        return total ? inner.f(initial, *total) : initial;
    }
};

template <typename T, typename F>
struct NonEmptyFoldAcc
{
    OptFoldAcc<T, F> inner;
    const char* what;
    T finish(Context& ctx) {
        auto total = inner.finish(ctx);
        if (!total) throw ContractError(std::string(what) + " of an empty DIA without initial value");
        return *total;
    }
    void add(const T& x) { inner.add(x); }
};

template <typename T>
struct GatherAcc
{
    std::vector<T> items;
    void add(const T& x) { items.push_back(x); }
    std::vector<T> finish(Context& ctx) { return ctx.net().all_gather(items); }
};

struct NoneAcc
{
    template <typename T>
    void add(const T&) { }
    bool finish(Context& ctx) {
        ctx.net().barrier();
        return true;
    }
};

template <typename T>
struct MinOp
{
    T operator()(const T& a, const T& b) const { return b < a ? b : a; }
};
template <typename T>
struct MaxOp
{
    T operator()(const T& a, const T& b) const { return a < b ? b : a; }
};

} // namespace detail

template <typename T, typename S>
Future<std::size_t> size_future(const DIA<T, S>& in) {
    return detail::make_fold_action<std::size_t>(in, "Size", detail::CountAcc{});
}
template <typename T, typename S>
std::size_t size(const DIA<T, S>& in) {
    return size_future(in).get();
}

/// Fold of all items with s, starting from `initial`.
template <typename T, typename S, typename F = std::plus<T>>
Future<T> sum_future(const DIA<T, S>& in, F s = F(), T initial = T()) {
    return detail::make_fold_action<T>(in, "Sum",
                                       detail::InitFoldAcc<T, F>{ { std::move(s), {} }, std::move(initial) });
}
template <typename T, typename S, typename F = std::plus<T>>
T sum(const DIA<T, S>& in, F s = F(), T initial = T()) {
    return sum_future(in, std::move(s), std::move(initial)).get();
}

template <typename T, typename S>
Future<T> min_future(const DIA<T, S>& in) {
    using F = detail::MinOp<T>;
    return detail::make_fold_action<T>(in, "Min", detail::NonEmptyFoldAcc<T, F>{ { F{}, {} }, "Min" });
}
template <typename T, typename S>
Future<T> min_future(const DIA<T, S>& in, T initial) {
    using F = detail::MinOp<T>;
    return detail::make_fold_action<T>(in, "Min", detail::InitFoldAcc<T, F>{ { F{}, {} }, std::move(initial) });
}
template <typename T, typename S>
T min(const DIA<T, S>& in) {
    return min_future(in).get();
}
template <typename T, typename S>
T min(const DIA<T, S>& in, T initial) {
    return min_future(in, std::move(initial)).get();
}

template <typename T, typename S>
Future<T> max_future(const DIA<T, S>& in) {
    using F = detail::MaxOp<T>;
    return detail::make_fold_action<T>(in, "Max", detail::NonEmptyFoldAcc<T, F>{ { F{}, {} }, "Max" });
}
template <typename T, typename S>
Future<T> max_future(const DIA<T, S>& in, T initial) {
    using F = detail::MaxOp<T>;
    return detail::make_fold_action<T>(in, "Max", detail::InitFoldAcc<T, F>{ { F{}, {} }, std::move(initial) });
}
template <typename T, typename S>
T max(const DIA<T, S>& in) {
    return max_future(in).get();
}
template <typename T, typename S>
T max(const DIA<T, S>& in, T initial) {
    return max_future(in, std::move(initial)).get();
}

/// All items, in DIA order, on every worker.
template <typename T, typename S>
Future<std::vector<T>> all_gather_future(const DIA<T, S>& in) {
    return detail::make_fold_action<std::vector<T>>(in, "AllGather", detail::GatherAcc<T>{});
}
template <typename T, typename S>
std::vector<T> all_gather(const DIA<T, S>& in) {
    return all_gather_future(in).get();
}

/// Materializes the DIA without returning data.
template <typename T, typename S>
Future<bool> execute_future(const DIA<T, S>& in) {
    return detail::make_fold_action<bool>(in, "Execute", detail::NoneAcc{});
}
template <typename T, typename S>
void execute(const DIA<T, S>& in) {
    execute_future(in).get();
}

} // namespace thrillette
