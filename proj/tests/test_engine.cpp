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

#include <thrillette/engine/config.hpp>
#include <thrillette/engine/dia.hpp>
#include <thrillette/engine/function_stack.hpp>
#include <thrillette/engine/runner.hpp>
#include <thrillette/ops/actions.hpp>
#include <thrillette/ops/generate.hpp>
#include <thrillette/ops/reduce.hpp>
#include <thrillette/ops/sort.hpp>
#include <thrillette/ops/zip.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>
#include <cstdlib>
#include <vector>

using namespace thrillette;

namespace {

EngineConfig small_config() {
    EngineConfig cfg;
    cfg.block_size = 4096;
    cfg.memory_limit = std::size_t(192) << 20;
    return cfg;
}

} // namespace

TEST(FunctionStack, FoldsChainIntoOneCallable) {
    FunctionStack<int> s;
    auto s2 = s.push([](const int& x, auto& emit) { emit(x + 1); })
                  .push([](const int& x, auto& emit) {
                      emit(x);
                      emit(x * 10);
                  })
                  .push([](const int& x, auto& emit) {
                      if (x % 2 == 0) emit(x);
                  });
    static_assert(decltype(s2)::size == 3);
    std::vector<int> out;
    auto f = s2.fold([&](const int& x) { out.push_back(x); });
    for (int x : { 1, 2, 3 }) f(x);
    EXPECT_EQ(out, (std::vector<int>{ 2, 20, 30, 4, 40 }));
}

TEST(EngineConfig, BudgetsSplitTheLimitInThirds) {
    EngineConfig cfg;
    cfg.memory_limit = 300;
    EXPECT_EQ(cfg.pool_budget(), 100u);
    EXPECT_EQ(cfg.op_budget(), 100u);
    EXPECT_EQ(cfg.user_budget(), 100u);
    EXPECT_EQ(cfg.pool_budget() + cfg.op_budget() + cfg.user_budget(), cfg.memory_limit);
    EXPECT_EQ(parse_size("64KiB"), 65536u);
    EXPECT_EQ(parse_size("2MiB"), 2u << 20);
    EXPECT_EQ(parse_size("17"), 17u);
    EXPECT_THROW(parse_size("12 parsecs"), ContractError);
    EXPECT_THROW(parse_size(""), ContractError);
}

TEST(Engine, MapMapIsFusedIntoOneVertex) {
    run_local(1, 2, small_config(), [](Context& ctx) {
        auto src = distribute(ctx, std::vector<int>{ 1, 2 });
        auto m = src.map([](int x) { return x + 1; }).map([](int x) { return 2 * x; });
        EXPECT_EQ(m.node().get(), src.node().get());
        EXPECT_EQ(m.local_ops(), 2u);
        EXPECT_EQ(ctx.stats().nodes_created, 1u);
        EXPECT_EQ(all_gather(m), (std::vector<int>{ 4, 6 }));
        // the action is the only extra vertex
        EXPECT_EQ(ctx.stats().nodes_created, 2u);
    });
}

TEST(Engine, FilterFalseFeedsNothing) {
    run_local(1, 3, small_config(), [](Context& ctx) {
        auto d = generate(ctx, 1000).filter([](std::size_t) { return false; });
        EXPECT_EQ(size(d), 0u);
    });
}

TEST(Engine, ConstructionIsLazy) {
    std::atomic<int> calls{ 0 };
    run_local(2, 2, small_config(), [&](Context& ctx) {
        auto d = generate(ctx, 100, [&](std::size_t i) {
                     ++calls;
                     return i;
                 }).map([&](std::size_t x) {
            ++calls;
            return x * 3;
        });
        auto c = collapse(d);
        auto f = size_future(c);
        EXPECT_EQ(ctx.stages().size(), 0u);
        ctx.net().barrier();
        EXPECT_EQ(calls.load(), 0);
        ctx.net().barrier();
        EXPECT_EQ(f.get(), 100u);
    });
    EXPECT_EQ(calls.load(), 200);
}

TEST(Engine, SizeOfGenerateIsOneStage) {
    auto report = run_local(1, 4, small_config(), [](Context& ctx) {
        EXPECT_EQ(size(generate(ctx, 100)), 100u);
        EXPECT_EQ(ctx.stages().size(), 1u);
    });
    for (const auto& st : report.stages) {
        ASSERT_EQ(st.size(), 1u);
        // Generate plus the Size action
        EXPECT_EQ(st[0].member_names, (std::vector<std::string>{ "Generate", "Size" }));
    }
}

TEST(Engine, SecondActionRunsNoMembersAgain) {
    run_local(1, 2, small_config(), [](Context& ctx) {
        auto c = collapse(generate(ctx, 50).map([](std::size_t x) { return x * x; }));
        EXPECT_EQ(size(c), 50u);
        auto before = ctx.stats().main_executions;
        EXPECT_EQ(size(c), 50u);
        // only the new Size vertex ran
        EXPECT_EQ(ctx.stats().main_executions - before, 1u);
        EXPECT_EQ(c.node()->main_executions(), 1u);
    });
}

TEST(Engine, RedeemingAFutureTwiceDoesNotRerun) {
    run_local(1, 2, small_config(), [](Context& ctx) {
        auto f = sum_future(generate(ctx, 10));
        EXPECT_EQ(f.get(), 45u);
        auto runs = ctx.stats().main_executions;
        EXPECT_TRUE(f.ready());
        EXPECT_EQ(f.get(), 45u);
        EXPECT_EQ(ctx.stats().main_executions, runs);
    });
}

TEST(Engine, DiamondRunsSourceOnce) {
    run_local(2, 2, small_config(), [](Context& ctx) {
        auto src = collapse(generate(ctx, 1000));
        auto a = src.map([](std::size_t x) { return x + 1; });
        auto b = src.map([](std::size_t x) { return 2 * x; });
        auto z = zip(a, b, [](std::size_t x, std::size_t y) { return x + y; });
        auto all = all_gather(z);
        ASSERT_EQ(all.size(), 1000u);
        for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], 3 * i + 1);
        EXPECT_EQ(src.node()->main_executions(), 1u);
    });
}

TEST(Engine, DroppedDataReturnsPoolToBaseline) {
    auto report = run_local(1, 2, small_config(), [](Context& ctx) {
        ctx.net().barrier();
        const auto baseline = ctx.pool().stats().bytes_in_ram;
        ctx.net().barrier();
        {
            auto c = collapse(generate(ctx, 20000));
            EXPECT_EQ(size(c), 20000u);
            ctx.net().barrier();
            EXPECT_GT(ctx.pool().stats().bytes_in_ram, baseline);
            ctx.net().barrier();
        }
        ctx.net().barrier();
        EXPECT_EQ(ctx.pool().stats().bytes_in_ram, baseline);
    });
    EXPECT_EQ(report.pools[0].blocks_live, 0u);
}

TEST(Engine, ConsumeReleasesDataAndKeepExtendsIt) {
    EngineConfig cfg = small_config();
    cfg.consume = true;
    run_local(1, 2, cfg, [](Context& ctx) {
        auto c = collapse(generate(ctx, 5000));
        c.keep();
        EXPECT_EQ(size(c.map([](std::size_t x) { return x; })), 5000u);
        EXPECT_EQ(c.node()->state(), NodeState::executed);
        EXPECT_EQ(sum(c), 5000u * 4999u / 2);
        EXPECT_EQ(c.node()->state(), NodeState::disposed);
        // the data is gone; asking again is an error
        EXPECT_THROW(size(c), ContractError);
    });
}

TEST(Engine, DisposedNodeCannotBeRedemandedThroughAChild) {
    EngineConfig cfg = small_config();
    cfg.consume = true;
    run_local(1, 1, cfg, [](Context& ctx) {
        auto c = collapse(generate(ctx, 10));
        auto d = collapse(c);
        EXPECT_EQ(size(d), 10u);
        EXPECT_EQ(c.node()->state(), NodeState::disposed);
        try {
            size(c);
            ADD_FAILURE() << "expected ContractError";
        }
        catch (const ContractError& e) {
            EXPECT_NE(std::string(e.what()).find("Collapse"), std::string::npos);
        }
    });
}

TEST(Engine, MinAndMaxFuturesShareOneStage) {
    run_local(2, 2, small_config(), [](Context& ctx) {
        auto d = generate(ctx, 997, [](std::size_t i) { return static_cast<long>((i * 7919) % 997) - 300; });
        auto lo = min_future(d);
        auto hi = max_future(d);
        const auto stages_before = ctx.stages().size();
        EXPECT_EQ(lo.get(), -300);
        EXPECT_EQ(hi.get(), 696);
        EXPECT_EQ(ctx.stages().size() - stages_before, 1u);
    });
}

TEST(Engine, StageMembersAreExactlyTheUnexecutedAncestors) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        // random DAG of collapses and zips over one source
        std::vector<std::pair<int, int>> shape;
        const int n = 2 + static_cast<int>(rng() % 8);
        for (int i = 1; i < n; ++i) {
            int a = static_cast<int>(rng() % i), b = static_cast<int>(rng() % i);
            shape.emplace_back(a, rng() % 2 ? b : -1);
        }
        const int demand1 = static_cast<int>(rng() % n), demand2 = static_cast<int>(rng() % n);
        run_local(1, 2, small_config(), [&](Context& ctx) {
            std::vector<DIA<std::size_t>> nodes{ collapse(generate(ctx, 64)) };
            for (auto [a, b] : shape) {
                if (b < 0) nodes.push_back(collapse(nodes[a].map([](std::size_t x) { return x + 1; })));
                else nodes.push_back(zip(nodes[a], nodes[b], [](std::size_t x, std::size_t y) { return x + y; }));
            }
            for (int target : { demand1, demand2 }) {
                // oracle: walk unexecuted ancestors
                std::set<std::size_t> expect;
                std::vector<DIABase*> todo{ nodes[target].node().get() };
                while (!todo.empty()) {
                    DIABase* v = todo.back();
                    todo.pop_back();
                    if (v->state() != NodeState::fresh || !expect.insert(v->id()).second) continue;
                    for (auto& p : v->parents()) todo.push_back(p.get());
                }
                auto f = size_future(nodes[target]);
                expect.insert(f.node()->id());
                f.get();
                const auto& rec = ctx.stages().back();
                std::set<std::size_t> got(rec.member_ids.begin(), rec.member_ids.end());
                EXPECT_EQ(got, expect);
                EXPECT_EQ(got.size(), rec.member_ids.size());
            }
        });
    }
}

TEST(Engine, StageBudgetsSumToAtMostTheOperationBudget) {
    run_local(1, 2, small_config(), [](Context& ctx) {
        auto a = collapse(generate(ctx, 100));
        auto r = reduce_by_key(a, [](std::size_t x) { return x % 7; }, [](std::size_t x, std::size_t y) { return std::min(x, y); });
        auto s = sort(a.map([](std::size_t x) { return 100 - x; }));
        auto z = zip(r, s.filter([](std::size_t x) { return x < 8; }), [](std::size_t x, std::size_t y) { return x * y; });
        EXPECT_EQ(size(z), 7u);
        ASSERT_FALSE(ctx.stages().empty());
        for (const auto& rec : ctx.stages())
            EXPECT_LE(rec.budget_per_member * rec.memory_members, ctx.op_memory());
        // reduce and sort split one stage's memory
        EXPECT_EQ(ctx.stages().back().memory_members, 2u);
        EXPECT_EQ(ctx.stages().back().budget_per_member, ctx.op_memory() / 2);
    });
}

TEST(Engine, UdfErrorAbortsStageNamingTheOperation) {
    try {
        run_local(2, 2, small_config(), [](Context& ctx) {
            auto d = collapse(generate(ctx, 100).map([&](std::size_t x) {
                if (x == 77) throw std::runtime_error("boom");
                return x;
            }));
            size(d);
        });
        FAIL() << "expected StageError";
    }
    catch (const StageError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("boom"), std::string::npos) << msg;
        EXPECT_NE(msg.find("Generate"), std::string::npos) << msg;
    }
}

TEST(Engine, SameSeedGivesIdenticalResults) {
    auto once = [] {
        std::vector<std::size_t> out;
        run_local(2, 2, small_config(), [&](Context& ctx) {
            auto r = all_gather(generate(ctx, 5000).bernoulli_sample(0.3));
            if (ctx.my_rank() == 0) out = r;
        });
        return out;
    };
    auto a = once(), b = once();
    EXPECT_EQ(a, b);
    EXPECT_GT(a.size(), 1200u);
    EXPECT_LT(a.size(), 1800u);
}

TEST(Engine, TraceEnvironmentSwitchesOnStageLines) {
    ::setenv("THRILLETTE_TRACE", "stages", 1);
    EngineConfig cfg = small_config();
    cfg.apply_env();
    ::unsetenv("THRILLETTE_TRACE");
    EXPECT_TRUE(cfg.trace_stages);
    testing::internal::CaptureStderr();
    run_local(1, 2, cfg, [](Context& ctx) { size(generate(ctx, 10)); });
    std::string err = testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("[stage 0] members=Generate#0,Size#1"), std::string::npos) << err;
    EXPECT_NE(err.find("budget="), std::string::npos);
    EXPECT_NE(err.find("tx="), std::string::npos);
}
