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

#include <thrillette/common/error.hpp>
#include <thrillette/common/hash.hpp>
#include <thrillette/engine/context.hpp>
#include <thrillette/engine/dia_node.hpp>
#include <thrillette/engine/function_stack.hpp>
#include <thrillette/engine/stage_builder.hpp>

#include <memory>
#include <optional>
#include <random>
#include <type_traits>
#include <utility>

namespace thrillette {

/*
 * Handle to a distributed immutable array of T. The handle names a graph
 * vertex plus a chain of local operations that have not been applied yet;
 * map, flat_map, filter and bernoulli_sample extend the chain and create
 * no vertex. The chain is folded into the callback the next distributed
 * operation registers on the vertex.
 */
template <typename T, typename Stack = FunctionStack<T>>
class DIA
{
public:
    using ValueType = T;
    using StackType = Stack;
    using InputType = typename Stack::InputType;
    using Node = DIANode<InputType>;
    using NodePtr = std::shared_ptr<Node>;

    DIA() = default;
    DIA(NodePtr node, Stack stack) : node_(std::move(node)), stack_(std::move(stack)) { }
    explicit DIA(NodePtr node) requires(Stack::size == 0) : node_(std::move(node)) { }

    bool valid() const { return static_cast<bool>(node_); }
    Context& context() const {
        check();
        return node_->context();
    }
    const NodePtr& node() const { return node_; }
    const Stack& stack() const { return stack_; }
    /// Number of local operations pending on this handle.
    static constexpr std::size_t local_ops() { return Stack::size; }

    template <typename F>
    auto map(F f) const {
        using U = std::decay_t<std::invoke_result_t<F&, const T&>>;
        auto s = stack_.push([f](const T& x, auto& emit) mutable { emit(f(x)); });
        return DIA<U, decltype(s)>(node_, std::move(s));
    }

    /// f(x, emit) calls emit(u) for every output item u.
    template <typename U, typename F>
    auto flat_map(F f) const {
        auto s = stack_.push([f](const T& x, auto& emit) mutable {
            f(x, [&emit](const U& u) { emit(u); });
        });
        return DIA<U, decltype(s)>(node_, std::move(s));
    }

    template <typename F>
    auto filter(F f) const {
        auto s = stack_.push([f](const T& x, auto& emit) mutable {
            if (f(x)) emit(x);
        });
        return DIA<T, decltype(s)>(node_, std::move(s));
    }

    /// Keeps each item independently with probability `prob`.
    auto bernoulli_sample(double prob) const {
        Context& ctx = context();
        auto rng = std::make_shared<std::mt19937_64>(
            hash_combine(hash_combine(ctx.seed(), ctx.my_rank()), node_->id() * 1315423911u + Stack::size));
        auto s = stack_.push([rng, prob](const T& x, auto& emit) {
            if (prob >= 1.0 || std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < prob) emit(x);
        });
        return DIA<T, decltype(s)>(node_, std::move(s));
    }

    /// Allows `n` more pushes of the vertex's data in consume mode.
    const DIA& keep(std::size_t n = 1) const {
        check();
        node_->keep(n);
        return *this;
    }

    /// Registers `child` to receive this DIA's items, after the pending
    /// local operations, through `cb`.
    template <typename Cb>
    void link(DIABase* child, std::size_t parent_index, Cb cb) const {
        check();
        node_->add_child(child, typename Node::Callback(stack_.fold(std::move(cb))), parent_index);
    }

    DIABasePtr base() const {
        check();
        return node_;
    }

private:
    void check() const {
        if (!node_) throw ContractError("use of an empty DIA handle");
    }

    NodePtr node_;
    Stack stack_;
};

/// Deferred action result; get() runs the stage that computes it.
template <typename R>
class Future
{
public:
    Future() = default;
    explicit Future(std::shared_ptr<ActionNode<R>> node) : node_(std::move(node)) { }

    R get() {
        if (!node_) throw ContractError("get() on an empty future");
        execute_stage(*node_);
        return node_->result();
    }
    bool ready() const { return node_ && node_->state() == NodeState::executed; }
    const std::shared_ptr<ActionNode<R>>& node() const { return node_; }

private:
    std::shared_ptr<ActionNode<R>> node_;
};

/// Vertex that stores the items it receives in a File and replays them.
template <typename V>
class StoreNode : public DIANode<V>
{
public:
    StoreNode(Context& ctx, std::string label, std::vector<DIABasePtr> parents)
        : DIANode<V>(ctx, std::move(label), std::move(parents)), file_(ctx.make_file()) { }

    void start_pre_op(std::size_t) override {
        if (!writer_) writer_.emplace(file_->writer());
        ++open_;
    }
    void add(const V& x) { writer_->put(x); }
    void stop_pre_op(std::size_t) override {
        if (--open_ == 0) {
            writer_->close();
            writer_.reset();
        }
    }
    void execute() override { }
    void dispose_data() override { file_->clear(); }

    const data::File& file() const { return *file_; }

protected:
    void run_push(bool consume) override {
        auto r = file_->reader(consume);
        while (r.has_next()) this->emit(r.template next<V>());
    }

    data::FilePtr file_;
    std::optional<data::File::Writer> writer_;
    std::size_t open_ = 0;
};

/// Ends the pending local chain: a vertex forwarding the items, with a
/// handle of the plain type DIA<T>.
template <typename T, typename S>
DIA<T> collapse(const DIA<T, S>& in, const std::string& label = "Collapse") {
    auto node = std::make_shared<StoreNode<T>>(in.context(), label, std::vector<DIABasePtr>{ in.base() });
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return DIA<T>(node);
}

/// Same as collapse; named for caching a result that is read repeatedly.
template <typename T, typename S>
DIA<T> cache(const DIA<T, S>& in) {
    return collapse(in, "Cache");
}

} // namespace thrillette
