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
#include <thrillette/engine/context.hpp>

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace thrillette {

enum class NodeState { fresh, executed, disposed };

inline const char* state_name(NodeState s) {
    switch (s) {
    case NodeState::fresh: return "new";
    case NodeState::executed: return "executed";
    case NodeState::disposed: return "disposed";
    }
    return "?";
}

/*
 * A vertex of the data-flow graph. Only distributed operations, sources
 * and actions are vertices; local operations live in the callbacks that
 * children register on their parents.
 *
 * Life cycle of a distributed operation:
 *   Link  items arrive through the registered callback (between
 *         start_pre_op and stop_pre_op of each parent index)
 *   Main  execute(), once, collectively
 *   Push  push_data() replays the node's output into all children that
 *         are registered at that moment
 */
class DIABase
{
public:
    DIABase(Context& ctx, std::string label, std::vector<std::shared_ptr<DIABase>> parents)
        : ctx_(ctx), id_(ctx.next_node_id()), label_(std::move(label)),
          parents_(std::move(parents)), fed_(parents_.size(), false) { }

    DIABase(const DIABase&) = delete;
    DIABase& operator=(const DIABase&) = delete;
    virtual ~DIABase() {
        for (auto& p : parents_)
            if (p) p->remove_child(this);
    }

    Context& context() const { return ctx_; }
    std::size_t id() const { return id_; }
    const std::string& label() const { return label_; }
    NodeState state() const { return state_; }
    const std::vector<std::shared_ptr<DIABase>>& parents() const { return parents_; }

    virtual bool is_action() const { return false; }
    /// Nodes that buffer data in Main (tables, sort runs) get a share of
    /// the stage's operation memory.
    virtual bool needs_memory() const { return false; }
    void set_memory_budget(std::size_t bytes) { memory_budget_ = bytes; }
    std::size_t memory_budget() const { return memory_budget_; }

    virtual void start_pre_op(std::size_t /*parent_index*/) { }
    virtual void stop_pre_op(std::size_t /*parent_index*/) { }
    virtual void execute() = 0;

    /// Replays output into the registered children and unregisters them.
    /// Returns the children that were fed.
    virtual std::vector<DIABase*> push_data(bool consume) = 0;
    virtual bool has_child(const DIABase* child) const = 0;
    virtual void remove_child(const DIABase* child) = 0;
    /// Frees stored output.
    virtual void dispose_data() { }

    bool fed_by(std::size_t parent_index) const { return fed_.at(parent_index); }
    bool fully_fed() const { return std::all_of(fed_.begin(), fed_.end(), [](bool b) { return b; }); }
    void mark_fed(const DIABase* parent) {
        for (std::size_t i = 0; i < parents_.size(); ++i)
            if (parents_[i].get() == parent) fed_[i] = true;
    }

    /// Adds `n` further consumers that may read the data before it is
    /// released in consume mode.
    void keep(std::size_t n = 1) { consume_counter_ += n; }
    /// True if the push about to happen is the last one allowed.
    bool consume_on_push() {
        if (!ctx_.consume()) return false;
        if (consume_counter_ > 0) --consume_counter_;
        return consume_counter_ == 0;
    }

    std::size_t main_executions() const { return main_executions_; }

    // used by the stage builder
    void set_state(NodeState s) {
        if (static_cast<int>(s) < static_cast<int>(state_))
            throw ContractError("node " + label_ + " cannot go from " + state_name(state_) + " to " +
                                state_name(s));
        state_ = s;
    }
    void count_main() {
        ++main_executions_;
        ++ctx_.stats().main_executions;
    }
    void release_parents() {
        for (auto& p : parents_)
            if (p) p->remove_child(this);
        parents_.clear();
        fed_.clear();
    }

private:
    Context& ctx_;
    std::size_t id_;
    std::string label_;
    std::vector<std::shared_ptr<DIABase>> parents_;
    std::vector<bool> fed_;
    NodeState state_ = NodeState::fresh;
    std::size_t memory_budget_ = 0;
    std::size_t consume_counter_ = 1;
    std::size_t main_executions_ = 0;
};

using DIABasePtr = std::shared_ptr<DIABase>;

/// Vertex whose output items have type V.
template <typename V>
class DIANode : public DIABase
{
public:
    using ValueType = V;
    using Callback = std::function<void(const V&)>;

    using DIABase::DIABase;

    ~DIANode() override = default;

    void add_child(DIABase* child, Callback cb, std::size_t parent_index) {
        if (state() == NodeState::disposed)
            throw ContractError("cannot attach to " + label() + "#" + std::to_string(id()) +
                                ": its data was already consumed");
        children_.push_back(Child{ child, std::move(cb), parent_index });
    }

    bool has_child(const DIABase* child) const override {
        return std::any_of(children_.begin(), children_.end(),
                           [&](const Child& c) { return c.node == child; });
    }

    void remove_child(const DIABase* child) override {
        std::erase_if(children_, [&](const Child& c) { return c.node == child; });
    }

    std::vector<DIABase*> push_data(bool consume) override {
        active_ = std::move(children_);
        children_.clear();
        for (auto& c : active_) c.node->start_pre_op(c.parent_index);
        run_push(consume);
        std::vector<DIABase*> fed;
        for (auto& c : active_) {
            c.node->stop_pre_op(c.parent_index);
            c.node->mark_fed(this);
            fed.push_back(c.node);
        }
        active_.clear();
        return fed;
    }

protected:
    /// Emits every output item through emit(). With `consume` the stored
    /// data may be released while reading.
    virtual void run_push(bool consume) = 0;

    void emit(const V& x) {
        for (auto& c : active_) c.cb(x);
    }

private:
    struct Child
    {
        DIABase* node;
        Callback cb;
        std::size_t parent_index;
    };
    std::vector<Child> children_;
    std::vector<Child> active_;
};

/// Vertex that produces a value for the program instead of items.
template <typename R>
class ActionNode : public DIABase
{
public:
    using ResultType = R;
    using DIABase::DIABase;

    bool is_action() const override { return true; }
    std::vector<DIABase*> push_data(bool) override { return {}; }
    bool has_child(const DIABase*) const override { return false; }
    void remove_child(const DIABase*) override { }

    const R& result() const {
        if (!result_) throw ContractError("action " + label() + " has not been executed");
        return *result_;
    }

protected:
    void set_result(R r) { result_ = std::move(r); }

private:
    std::optional<R> result_;
};

} // namespace thrillette
