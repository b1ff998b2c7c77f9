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

#include <cstddef>
#include <tuple>
#include <utility>

namespace thrillette {

/*
 * A chain of local operations fused at compile time. Every element has the
 * form `f(const In& x, Emit& emit)` and calls `emit(y)` zero or more times.
 * fold() nests the chain around a final emitter, producing one callable
 * with no intermediate storage between the stages.
 */
template <typename Input, typename... Fns>
class FunctionStack
{
public:
    using InputType = Input;
    static constexpr std::size_t size = sizeof...(Fns);

    FunctionStack() = default;
    explicit FunctionStack(std::tuple<Fns...> fns) : fns_(std::move(fns)) { }

    template <typename Fn>
    FunctionStack<Input, Fns..., Fn> push(Fn fn) const {
        return FunctionStack<Input, Fns..., Fn>(std::tuple_cat(fns_, std::make_tuple(std::move(fn))));
    }

    /// Callable taking `const Input&` that runs the chain into `emit`.
    template <typename Emit>
    auto fold(Emit emit) const {
        return chain<0>(std::move(emit));
    }

private:
    template <std::size_t I, typename Emit>
    auto chain(Emit emit) const {
        if constexpr (I == sizeof...(Fns)) {
            return emit;
        }
        else {
            auto next = chain<I + 1>(std::move(emit));
            return [fn = std::get<I>(fns_), next](const auto& x) mutable { fn(x, next); };
        }
    }

    std::tuple<Fns...> fns_;
};

} // namespace thrillette
