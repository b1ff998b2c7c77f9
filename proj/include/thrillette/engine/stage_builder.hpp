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
#include <thrillette/engine/dia_node.hpp>

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>
#include <vector>

namespace thrillette {

namespace detail {

inline void run_guarded(DIABase& node, const char* phase, const std::function<void()>& fn) {
    try {
        fn();
    }
    catch (const StageError&) {
        throw;
    }
    catch (const NetError&) {
        throw;
    }
    catch (const std::exception& e) {
        throw StageError(node.label(), std::string(phase) + ": " + e.what());
    }
}

} // namespace detail

/*
 * Executes everything `target` depends on. A reverse breadth-first search
 * collects all ancestors that are not yet executed; they run in ascending
 * id order, which is a topological order because parents are always
 * created before their children. Before a node's Main runs, each parent
 * that still owes it data pushes to all children registered at that
 * point. Action nodes fed completely during the stage (sibling futures)
 * execute in the same stage.
 */
inline void execute_stage(DIABase& target) {
    if (target.state() == NodeState::executed) return;
    if (target.state() == NodeState::disposed)
        throw ContractError(target.label() + "#" + std::to_string(target.id()) +
                            " was disposed and cannot be recomputed");

    Context& ctx = target.context();
    std::set<DIABase*> seen{ &target };
    std::deque<DIABase*> queue{ &target };
    std::vector<DIABase*> order{ &target };
    while (!queue.empty()) {
        DIABase* n = queue.front();
        queue.pop_front();
        for (std::size_t i = 0; i < n->parents().size(); ++i) {
            DIABase* p = n->parents()[i].get();
            if (n->fed_by(i)) continue;
            if (p->state() == NodeState::disposed)
                throw ContractError(p->label() + "#" + std::to_string(p->id()) +
                                    " was disposed and cannot be recomputed");
            if (p->state() == NodeState::fresh && seen.insert(p).second) {
                queue.push_back(p);
                order.push_back(p);
            }
        }
    }
    std::sort(order.begin(), order.end(), [](DIABase* a, DIABase* b) { return a->id() < b->id(); });

    std::size_t needing = 0;
    for (DIABase* n : order)
        if (n->needs_memory()) ++needing;
    const std::size_t share = needing ? ctx.op_memory() / needing : 0;
    for (DIABase* n : order) n->set_memory_budget(n->needs_memory() ? share : 0);

    StageRecord rec;
    rec.stage_id = ctx.next_stage_id();
    rec.budget_per_member = share;
    rec.memory_members = needing;
    const auto t0 = std::chrono::steady_clock::now();
    const auto net0 = ctx.net().host().counters();
    ctx.pool().reset_peak();

    // keep the nodes alive while parents are released
    std::vector<DIABasePtr> hold;
    std::vector<DIABase*> siblings;

    auto run_node = [&](DIABase* n) {
        for (std::size_t i = 0; i < n->parents().size(); ++i) {
            if (n->fed_by(i)) continue;
            DIABasePtr p = n->parents()[i];
            hold.push_back(p);
            if (p->state() != NodeState::executed)
                throw ContractError("parent " + p->label() + " of " + n->label() + " is " +
                                    state_name(p->state()));
            bool consume = p->consume_on_push();
            std::vector<DIABase*> fed;
            detail::run_guarded(*p, "push", [&] { fed = p->push_data(consume); });
            if (consume) {
                p->dispose_data();
                p->set_state(NodeState::disposed);
            }
            for (DIABase* c : fed)
                if (c != n && c->is_action() && !seen.count(c)) siblings.push_back(c);
        }
        detail::run_guarded(*n, "main", [&] { n->execute(); });
        n->count_main();
        n->set_state(NodeState::executed);
        n->release_parents();
        rec.member_ids.push_back(n->id());
        rec.member_names.push_back(n->label());
    };

    for (DIABase* n : order) run_node(n);

    // Futures whose input is complete join this stage. Every worker sees
    // the same graph, so all take the same decision.
    std::sort(siblings.begin(), siblings.end(), [](DIABase* a, DIABase* b) { return a->id() < b->id(); });
    siblings.erase(std::unique(siblings.begin(), siblings.end()), siblings.end());
    for (DIABase* s : siblings)
        if (s->state() == NodeState::fresh && s->fully_fed()) run_node(s);

    const auto net1 = ctx.net().host().counters();
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.tx_bytes = net1.tx_bytes - net0.tx_bytes;
    rec.rx_bytes = net1.rx_bytes - net0.rx_bytes;
    rec.peak_pool_bytes = ctx.pool().stats().peak_bytes_in_ram;
    ctx.record_stage(std::move(rec));
}

} // namespace thrillette
