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

#include <thrillette/thrillette.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

using namespace thrillette;

namespace {

struct Topology
{
    std::size_t hosts, workers;
};

// p=2 and above always spans two hosts so cross-host frames are exercised.
Topology topology(std::size_t p) {
    if (p == 1) return { 1, 1 };
    return { 2, p / 2 };
}

EngineConfig config() {
    EngineConfig cfg;
    cfg.block_size = 4096;
    cfg.memory_limit = std::size_t(192) << 20;
    return cfg;
}

EngineConfig config_with_op_memory(std::size_t bytes) {
    EngineConfig cfg = config();
    cfg.op_memory = bytes;
    return cfg;
}

/// Global sequence of the DIA built by `build`, as seen by worker 0.
template <typename Build>
auto collect(std::size_t p, Build build, const EngineConfig& cfg = config()) {
    using D = std::invoke_result_t<Build&, Context&>;
    using T = typename D::ValueType;
    std::vector<T> out;
    auto t = topology(p);
    run_local(t.hosts, t.workers, cfg, [&](Context& ctx) {
        auto v = all_gather(build(ctx));
        if (ctx.my_rank() == 0) out = std::move(v);
    });
    return out;
}

/// Item count of the DIA on each worker.
template <typename Build>
std::vector<std::size_t> per_worker(std::size_t p, Build build, const EngineConfig& cfg = config()) {
    std::vector<std::size_t> counts;
    auto t = topology(p);
    run_local(t.hosts, t.workers, cfg, [&](Context& ctx) {
        auto ranks = all_gather(build(ctx).map([r = ctx.my_rank()](const auto&) { return r; }));
        if (ctx.my_rank() == 0) {
            counts.assign(ctx.num_workers(), 0);
            for (auto r : ranks) ++counts[r];
        }
    });
    return counts;
}

std::vector<std::uint64_t> random_input(std::size_t n, std::uint64_t seed, std::uint64_t mod = 0) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = mod ? rng() % mod : rng();
    return v;
}

template <typename T>
DIA<T> input_dia(Context& ctx, const std::vector<T>& all) {
    return collapse(generate(ctx, all.size(), [&all](std::size_t i) { return all[i]; }));
}

template <typename T>
std::vector<T> sorted(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::filesystem::path scratch_dir(const std::string& name) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("thrillette-ops-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// ------------------------------------------------------------------
// single-threaded reference implementations

template <typename K, typename T, typename KeyFn, typename RedFn>
std::vector<T> oracle_reduce(const std::vector<T>& in, KeyFn key, RedFn red) {
    std::map<K, T> m;
    for (const auto& x : in) {
        auto [it, fresh] = m.try_emplace(key(x), x);
        if (!fresh) it->second = red(it->second, x);
    }
    std::vector<T> out;
    for (auto& [k, v] : m) out.push_back(v);
    return out;
}

std::vector<std::uint64_t> oracle_prefix_sum(const std::vector<std::uint64_t>& in, std::uint64_t initial) {
    std::vector<std::uint64_t> out;
    std::uint64_t acc = initial;
    for (auto x : in) out.push_back(acc += x);
    return out;
}

std::vector<std::uint64_t> oracle_sliding_sum(const std::vector<std::uint64_t>& in, std::size_t k) {
    std::vector<std::uint64_t> out;
    for (std::size_t s = 0; s + k <= in.size(); ++s) out.push_back(std::accumulate(in.begin() + s, in.begin() + s + k, std::uint64_t(0)));
    return out;
}

std::uint64_t median(std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

using KV = std::pair<std::uint64_t, std::uint64_t>;

std::vector<KV> key_values(std::size_t n, std::uint64_t keys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<KV> v(n);
    for (auto& x : v) x = { rng() % keys, rng() % 1000 };
    return v;
}

} // namespace

// ------------------------------------------------------------------
// oracle equivalence over p and n

class OpsOracle : public ::testing::TestWithParam<std::tuple<std::size_t, std::size_t>>
{
protected:
    std::size_t p() const { return std::get<0>(GetParam()); }
    std::size_t n() const { return std::get<1>(GetParam()); }
};

TEST_P(OpsOracle, MapFilterFlatMap) {
    auto in = random_input(n(), 1, 1000);
    auto got = collect(p(), [&](Context& ctx) {
        return collapse(input_dia(ctx, in)
                            .map([](std::uint64_t x) { return x * 3 + 1; })
                            .filter([](std::uint64_t x) { return x % 2 == 0; })
                            .flat_map<std::uint64_t>([](std::uint64_t x, auto emit) {
                                emit(x);
                                emit(x + 1);
                            }));
    });
    std::vector<std::uint64_t> want;
    for (auto x : in) {
        auto y = x * 3 + 1;
        if (y % 2 == 0) {
            want.push_back(y);
            want.push_back(y + 1);
        }
    }
    EXPECT_EQ(got, want);
}

TEST_P(OpsOracle, PrefixSum) {
    auto in = random_input(n(), 2, 1000);
    auto got = collect(p(), [&](Context& ctx) { return prefix_sum(input_dia(ctx, in), std::plus<>(), std::uint64_t(5)); });
    EXPECT_EQ(got, oracle_prefix_sum(in, 5));
}

TEST_P(OpsOracle, Sort) {
    auto in = random_input(n(), 3);
    auto got = collect(p(), [&](Context& ctx) { return sort(input_dia(ctx, in)); });
    EXPECT_EQ(got, sorted(in));
}

TEST_P(OpsOracle, SortIsStable) {
    auto in = key_values(n(), 17, 4);
    auto by_key = [](const KV& a, const KV& b) { return a.first < b.first; };
    auto got = collect(p(), [&](Context& ctx) { return sort(input_dia(ctx, in), by_key); });
    auto want = in;
    std::stable_sort(want.begin(), want.end(), by_key);
    EXPECT_EQ(got, want);
}

TEST_P(OpsOracle, MergeOfFourSortedInputs) {
    std::vector<std::vector<std::uint64_t>> ins;
    for (int i = 0; i < 4; ++i) ins.push_back(sorted(random_input(n() / (i + 1), 10 + i, 5000)));
    auto got = collect(p(), [&](Context& ctx) {
        auto d = [&](int i) { return sort(input_dia(ctx, ins[i])); };
        return merge(d(0), d(1), d(2), d(3));
    });
    std::vector<std::uint64_t> want;
    for (auto& v : ins) want.insert(want.end(), v.begin(), v.end());
    EXPECT_EQ(got, sorted(want));
}

TEST_P(OpsOracle, ReduceByKey) {
    auto in = key_values(n(), 1 + n() / 10, 5);
    auto red = [](const KV& a, const KV& b) { return KV(a.first, a.second + b.second); };
    auto got = collect(p(), [&](Context& ctx) { return reduce_by_key(input_dia(ctx, in), [](const KV& x) { return x.first; }, red); });
    EXPECT_EQ(sorted(got), (oracle_reduce<std::uint64_t>(in, [](const KV& x) { return x.first; }, red)));
}

TEST_P(OpsOracle, ReduceByKeyFloatingPoint) {
    using KD = std::pair<std::uint64_t, double>;
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<KD> in(n());
    for (auto& x : in) x = KD(rng() % (1 + n() / 50), val(rng));
    auto red = [](const KD& a, const KD& b) { return KD(a.first, a.second + b.second); };
    auto got = sorted(collect(p(), [&](Context& ctx) { return reduce_by_key(input_dia(ctx, in), [](const KD& x) { return x.first; }, red); }));
    std::map<std::uint64_t, double> sums, mags;
    for (auto& [k, v] : in) {
        sums[k] += v;
        mags[k] += std::abs(v);
    }
    ASSERT_EQ(got.size(), sums.size());
    for (auto& [k, v] : got) {
        ASSERT_TRUE(sums.count(k));
        // summation order differs between workers; bound relative to the sum of magnitudes
        EXPECT_LE(std::abs(v - sums[k]), 1e-6 * std::max(1.0, mags[k])) << "key " << k;
    }
}

TEST_P(OpsOracle, ReduceToIndex) {
    const std::size_t size = n() / 3 + 4;
    auto in = key_values(n(), size, 6);
    auto red = [](const KV& a, const KV& b) { return KV(a.first, a.second + b.second); };
    auto got = collect(p(), [&](Context& ctx) {
        return reduce_to_index(input_dia(ctx, in), [](const KV& x) { return std::size_t(x.first); }, red, size, KV(0, 0));
    });
    std::vector<KV> want(size, KV(0, 0));
    std::vector<bool> seen(size, false);
    for (auto& x : in) {
        want[x.first] = seen[x.first] ? red(want[x.first], x) : x;
        seen[x.first] = true;
    }
    EXPECT_EQ(got, want);
}

TEST_P(OpsOracle, GroupByKeyMedian) {
    auto in = key_values(n(), 1 + n() / 20, 7);
    auto got = collect(p(), [&](Context& ctx) {
        return group_by_key(input_dia(ctx, in), [](const KV& x) { return x.first; }, [](std::uint64_t k, auto& items) {
            std::vector<std::uint64_t> v;
            while (items.has_next()) v.push_back(items.next().second);
            return KV(k, median(v));
        });
    });
    std::map<std::uint64_t, std::vector<std::uint64_t>> groups;
    for (auto& [k, v] : in) groups[k].push_back(v);
    std::vector<KV> want;
    for (auto& [k, v] : groups) want.emplace_back(k, median(v));
    EXPECT_EQ(sorted(got), want);
}

TEST_P(OpsOracle, GroupToIndex) {
    const std::size_t size = n() / 5 + 3;
    auto in = key_values(n(), size, 8);
    auto got = collect(p(), [&](Context& ctx) {
        return group_to_index(
            input_dia(ctx, in), [](const KV& x) { return std::size_t(x.first); },
            [](std::size_t, auto& items) {
                std::uint64_t s = 0;
                while (items.has_next()) s += items.next().second;
                return s;
            },
            size, std::uint64_t(777));
    });
    std::vector<std::uint64_t> want(size, 777);
    std::vector<bool> seen(size, false);
    for (auto& [k, v] : in) {
        if (!seen[k]) want[k] = 0;
        seen[k] = true;
        want[k] += v;
    }
    EXPECT_EQ(got, want);
}

TEST_P(OpsOracle, ZipAndZipWithIndex) {
    auto a = random_input(n(), 9, 100);
    auto b = random_input(n(), 10, 100);
    auto got = collect(p(), [&](Context& ctx) {
        // b arrives skewed so alignment needs an exchange
        auto db = collapse(input_dia(ctx, b).filter([](std::uint64_t) { return true; }));
        auto z = zip(input_dia(ctx, a), sort(zip_with_index(db)), [](std::uint64_t x, const std::pair<std::size_t, std::uint64_t>& y) {
            return std::make_pair(y.first, x + y.second);
        });
        return z;
    });
    std::vector<std::pair<std::size_t, std::uint64_t>> want;
    for (std::size_t i = 0; i < n(); ++i) want.emplace_back(i, a[i] + b[i]);
    EXPECT_EQ(got, want);
}

TEST_P(OpsOracle, SlidingAndDisjointWindows) {
    auto in = random_input(n(), 11, 100);
    for (std::size_t k : { std::size_t(1), std::size_t(3), std::size_t(7) }) {
        auto got = collect(p(), [&](Context& ctx) {
            return window(input_dia(ctx, in), k, [](std::size_t, std::span<const std::uint64_t> w) {
                return std::accumulate(w.begin(), w.end(), std::uint64_t(0));
            });
        });
        EXPECT_EQ(got, oracle_sliding_sum(in, k)) << "k=" << k;

        auto dis = collect(p(), [&](Context& ctx) {
            return disjoint_window(input_dia(ctx, in), k, [](std::size_t i, std::span<const std::uint64_t> w) {
                return std::make_pair(i, w.size());
            });
        });
        std::vector<std::pair<std::size_t, std::size_t>> want;
        for (std::size_t s = 0; s < in.size(); s += k) want.emplace_back(s, std::min(k, in.size() - s));
        EXPECT_EQ(dis, want) << "k=" << k;
    }
}

TEST_P(OpsOracle, UnionIsMultisetAndConcatIsOrdered) {
    auto a = random_input(n(), 12, 1000);
    auto b = random_input(n() / 2 + 1, 13, 1000);
    auto u = collect(p(), [&](Context& ctx) { return union_all(input_dia(ctx, a), input_dia(ctx, b)); });
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    EXPECT_EQ(sorted(u), sorted(both));
    auto c = collect(p(), [&](Context& ctx) { return concat(input_dia(ctx, a), input_dia(ctx, b)); });
    EXPECT_EQ(c, both);
}

TEST_P(OpsOracle, Actions) {
    auto in = random_input(n(), 14, 1u << 20);
    auto t = topology(p());
    run_local(t.hosts, t.workers, config(), [&](Context& ctx) {
        auto d = input_dia(ctx, in);
        EXPECT_EQ(size(d), in.size());
        EXPECT_EQ(sum(d), std::accumulate(in.begin(), in.end(), std::uint64_t(0)));
        EXPECT_EQ(min(d, std::uint64_t(1) << 40), in.empty() ? std::uint64_t(1) << 40 : *std::min_element(in.begin(), in.end()));
        EXPECT_EQ(max(d, std::uint64_t(0)), in.empty() ? 0 : *std::max_element(in.begin(), in.end()));
        EXPECT_EQ(all_gather(d), in);
    });
}

TEST_P(OpsOracle, ReadBinaryRoundTrip) {
    auto dir = scratch_dir("bin");
    auto in = key_values(n(), 1000, 15);
    std::vector<KV> got;
    auto t = topology(p());
    run_local(t.hosts, t.workers, config(), [&](Context& ctx) {
        write_binary(input_dia(ctx, in), dir.string());
        auto v = all_gather(read_binary<KV>(ctx, (dir / "part-*").string()));
        if (ctx.my_rank() == 0) got = v;
    });
    EXPECT_EQ(got, in);
    std::filesystem::remove_all(dir);
}

TEST_P(OpsOracle, ReadLinesRoundTrip) {
    auto dir = scratch_dir("lines");
    std::mt19937_64 rng(16);
    std::vector<std::string> in(n());
    for (auto& s : in) s = std::string(rng() % 40, char('a' + rng() % 26));
    std::vector<std::string> got;
    auto t = topology(p());
    run_local(t.hosts, t.workers, config(), [&](Context& ctx) {
        EXPECT_EQ(write_lines(input_dia(ctx, in), dir.string()), in.size());
        auto v = all_gather(read_lines(ctx, dir.string()));
        if (ctx.my_rank() == 0) got = v;
    });
    EXPECT_EQ(got, in);
    std::filesystem::remove_all(dir);
}

INSTANTIATE_TEST_SUITE_P(Sizes, OpsOracle,
                         ::testing::Combine(::testing::Values(1, 2, 4, 8), ::testing::Values(0, 1, 997, 100000)),
                         [](const auto& info) {
                             return "p" + std::to_string(std::get<0>(info.param)) + "_n" +
                                    std::to_string(std::get<1>(info.param));
                         });

// ------------------------------------------------------------------
// local operations and actions

TEST(LocalOps, FilterEven) {
    auto got = collect(2, [](Context& ctx) { return collapse(generate(ctx, 10).filter([](std::size_t x) { return x % 2 == 0; })); });
    EXPECT_EQ(got, (std::vector<std::size_t>{ 0, 2, 4, 6, 8 }));
}

TEST(LocalOps, FlatMapDoublesSize) {
    run_local(2, 2, config(), [](Context& ctx) {
        auto d = generate(ctx, 123).flat_map<std::size_t>([](std::size_t x, auto emit) {
            emit(x);
            emit(x);
        });
        EXPECT_EQ(size(d), 246u);
    });
}

TEST(LocalOps, BernoulliSampleEndpoints) {
    run_local(2, 2, config(), [](Context& ctx) {
        auto d = generate(ctx, 1000);
        EXPECT_EQ(all_gather(d.bernoulli_sample(1.0)), all_gather(d));
        EXPECT_EQ(size(d.bernoulli_sample(0.0)), 0u);
    });
}

TEST(LocalOps, BernoulliSampleIsReproducibleAndNearItsRate) {
    auto run = [] { return collect(4, [](Context& ctx) { return collapse(generate(ctx, 100000).bernoulli_sample(0.25)); }); };
    auto a = run(), b = run();
    EXPECT_EQ(a, b);
    // 5 standard deviations of a binomial(10^5, 0.25)
    EXPECT_NEAR(double(a.size()), 25000.0, 5 * std::sqrt(100000 * 0.25 * 0.75));
}

TEST(Actions, SizeOfGenerate) {
    run_local(1, 3, config(), [](Context& ctx) { EXPECT_EQ(size(generate(ctx, 7)), 7u); });
}

TEST(Actions, SumOfEmptyIsInitial) {
    run_local(2, 1, config(), [](Context& ctx) { EXPECT_EQ(sum(generate(ctx, 0), std::plus<>(), std::size_t(9)), 9u); });
}

TEST(Actions, MinOfEmptyWithoutInitialFails) {
    try {
        run_local(2, 1, config(), [](Context& ctx) { min(generate(ctx, 0)); });
        FAIL() << "expected an error";
    }
    catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos) << e.what();
    }
}

TEST(Actions, ExecuteMaterializesWithoutData) {
    std::atomic<int> calls{ 0 };
    run_local(2, 2, config(), [&](Context& ctx) {
        execute(generate(ctx, 100, [&](std::size_t i) {
            ++calls;
            return i;
        }));
    });
    EXPECT_EQ(calls.load(), 100);
}

TEST(Generate, BalancedWorkerRanges) {
    EXPECT_EQ(per_worker(4, [](Context& ctx) { return generate(ctx, 10); }), (std::vector<std::size_t>{ 3, 3, 2, 2 }));
    for (std::size_t w = 0; w < 3; ++w) EXPECT_EQ(balanced_range(4, 3, w).second - balanced_range(4, 3, w).first, w == 0 ? 2u : 1u);
    for (std::size_t i = 0; i < 10; ++i) {
        auto w = balanced_owner(10, 4, i);
        auto [lo, hi] = balanced_range(10, 4, w);
        EXPECT_TRUE(lo <= i && i < hi);
    }
}

// ------------------------------------------------------------------
// union / concat

TEST(Concat, SmallExamples) {
    auto c = collect(2, [](Context& ctx) {
        return concat(distribute(ctx, std::vector<int>{ 1, 2 }), distribute(ctx, std::vector<int>{ 3, 4 }));
    });
    EXPECT_EQ(c, (std::vector<int>{ 1, 2, 3, 4 }));
    auto u = collect(2, [](Context& ctx) {
        return union_all(distribute(ctx, std::vector<int>{ 1, 2 }), distribute(ctx, std::vector<int>{ 3 }));
    });
    EXPECT_EQ(sorted(u), (std::vector<int>{ 1, 2, 3 }));
}

TEST(Concat, Rebalances) {
    const std::size_t n = 100003;
    auto counts = per_worker(8, [&](Context& ctx) {
        // all of the first input on worker 0, the second spread evenly
        std::vector<std::size_t> a;
        if (ctx.my_rank() == 0) a.assign(n / 2, 1);
        return concat(from_local(ctx, a), generate(ctx, n - n / 2));
    });
    for (auto c : counts) EXPECT_LE(std::max(c, n / 8) - std::min(c, n / 8), 1u);
}

// ------------------------------------------------------------------
// reduce

TEST(Reduce, WordCountPairs) {
    using WC = std::pair<std::string, std::size_t>;
    auto got = collect(2, [](Context& ctx) {
        auto d = distribute(ctx, std::vector<WC>{ { "a", 1 }, { "b", 1 }, { "a", 1 }, { "a", 1 } });
        return reduce_pair(d, std::plus<>());
    });
    EXPECT_EQ(sorted(got), (std::vector<WC>{ { "a", 3 }, { "b", 1 } }));
}

TEST(Reduce, ToIndexOfEmptyIsAllNeutral) {
    auto got = collect(4, [](Context& ctx) {
        return reduce_to_index(generate(ctx, 0), [](std::size_t x) { return x; }, std::plus<>(), 4, std::size_t(0));
    });
    EXPECT_EQ(got, (std::vector<std::size_t>(4, 0)));
}

TEST(Reduce, IndexOutOfRangeIsAContractViolation) {
    try {
        run_local(1, 2, config(), [](Context& ctx) {
            size(reduce_to_index(generate(ctx, 10), [](std::size_t x) { return x; }, std::plus<>(), 5, std::size_t(0)));
        });
        FAIL() << "expected an error";
    }
    catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("index 5"), std::string::npos) << e.what();
    }
}

TEST(Reduce, SpillingGivesTheSameResult) {
    const std::size_t n = 200000;
    auto in = key_values(n, n / 2, 20);
    auto red = [](const KV& a, const KV& b) { return KV(a.first, a.second + b.second); };
    auto want = oracle_reduce<std::uint64_t>(in, [](const KV& x) { return x.first; }, red);
    for (std::size_t budget : { std::size_t(0), std::size_t(1) << 20, std::size_t(64) << 10 }) {
        EngineConfig cfg = budget ? config_with_op_memory(budget * 2) : config();
        std::vector<KV> got;
        auto report = run_local(2, 2, cfg, [&](Context& ctx) {
            auto v = all_gather(reduce_by_key(input_dia(ctx, in), [](const KV& x) { return x.first; }, red));
            if (ctx.my_rank() == 0) got = v;
        });
        EXPECT_EQ(sorted(got), want) << "budget " << budget;
        std::uint64_t spills = 0, recursions = 0;
        for (auto& s : report.stats) spills += s.reduce_spills, recursions += s.reduce_recursions;
        if (budget == (std::size_t(64) << 10)) {
            EXPECT_GT(spills, 0u);
            EXPECT_GT(recursions, 0u);
        }
        if (budget == 0) {
            EXPECT_EQ(spills, 0u);
        }
    }
}

TEST(Reduce, ProbingTableCombinesEqualKeys) {
    detail::ProbingTable<int, int> t;
    auto plus = [](int a, int b) { return a + b; };
    EXPECT_TRUE(t.insert(1, 10, 1, plus));
    EXPECT_FALSE(t.insert(1, 10, 2, plus));
    EXPECT_TRUE(t.insert(1, 11, 5, plus)); // same hash, different key
    EXPECT_EQ(t.size(), 2u);
    std::map<int, int> got;
    t.drain([&](auto& e) { got[e.key] = e.item; });
    EXPECT_EQ(got, (std::map<int, int>{ { 10, 3 }, { 11, 5 } }));
    EXPECT_EQ(t.size(), 0u);
}

TEST(Reduce, ProbingTableFillFactor) {
    detail::ProbingTable<int, int> t;
    auto plus = [](int a, int b) { return a + b; };
    for (int i = 0; i < 8; ++i) t.insert(std::uint64_t(i) * 0x9E3779B97F4A7C15ull, i, i, plus);
    EXPECT_FALSE(t.overfull());
    t.insert(99, 99, 99, plus);
    EXPECT_TRUE(t.overfull());
    t.grow();
    EXPECT_EQ(t.slots(), 32u);
    EXPECT_FALSE(t.overfull());
    EXPECT_EQ(t.size(), 9u);
}

// ------------------------------------------------------------------
// group

TEST(Group, MedianExample) {
    auto got = collect(2, [](Context& ctx) {
        auto d = distribute(ctx, std::vector<std::pair<char, int>>{ { 'a', 3 }, { 'a', 1 }, { 'b', 5 } });
        return group_by_key(d, [](const auto& x) { return x.first; }, [](char k, auto& items) {
            std::vector<std::uint64_t> v;
            while (items.has_next()) v.push_back(items.next().second);
            return std::make_pair(k, median(v));
        });
    });
    EXPECT_EQ(sorted(got), (std::vector<std::pair<char, std::uint64_t>>{ { 'a', 2 }, { 'b', 5 } }));
}

TEST(Group, FoldEqualsReduce) {
    auto in = key_values(50000, 300, 21);
    auto red = [](const KV& a, const KV& b) { return KV(a.first, a.second + b.second); };
    auto key = [](const KV& x) { return x.first; };
    auto g = collect(4, [&](Context& ctx) {
        return group_by_key(input_dia(ctx, in), key, [](std::uint64_t k, auto& items) {
            KV acc(k, 0);
            while (items.has_next()) acc.second += items.next().second;
            return acc;
        });
    });
    auto r = collect(4, [&](Context& ctx) { return reduce_by_key(input_dia(ctx, in), key, red); });
    EXPECT_EQ(sorted(g), sorted(r));
}

TEST(Group, ManyRunsGiveTheSameResult) {
    auto in = key_values(100000, 5000, 22);
    auto build = [&](Context& ctx) {
        return group_by_key(input_dia(ctx, in), [](const KV& x) { return x.first; }, [](std::uint64_t k, auto& items) {
            std::uint64_t h = 0;
            // order-sensitive digest: groups keep arrival order
            while (items.has_next()) h = h * 1000003 + items.next().second;
            return KV(k, h);
        });
    };
    auto one = collect(2, build);
    std::vector<KV> many;
    auto report = run_local(2, 1, config_with_op_memory(64 << 10), [&](Context& ctx) {
        auto v = all_gather(build(ctx));
        if (ctx.my_rank() == 0) many = v;
    });
    std::uint64_t runs = 0;
    for (auto& s : report.stats) runs += s.group_runs_spilled;
    EXPECT_GE(runs, 8u);
    EXPECT_EQ(many, one);
}

TEST(Group, UnreadItemsAreSkipped) {
    auto got = collect(2, [](Context& ctx) {
        return group_by_key(generate(ctx, 100), [](std::size_t x) { return x % 4; }, [](std::size_t k, auto& items) {
            items.next();
            return k;
        });
    });
    EXPECT_EQ(sorted(got), (std::vector<std::size_t>{ 0, 1, 2, 3 }));
}

// ------------------------------------------------------------------
// sort / merge

TEST(Sort, SplitterTreeForFourWorkers) {
    std::vector<SortKey<int>> s{ { 10, 0, 0 }, { 20, 0, 0 }, { 30, 0, 0 } };
    SplitterTree<int, std::less<int>> tree(s, {});
    EXPECT_EQ(tree.num_splitters(), 3u);
    EXPECT_EQ(tree.num_buckets(), 4u);
    EXPECT_EQ(tree.levels(), 2u);
    EXPECT_EQ(tree.classify(5, 0, 0), 0u);
    EXPECT_EQ(tree.classify(10, 0, 0), 0u);
    EXPECT_EQ(tree.classify(10, 0, 1), 1u);
    EXPECT_EQ(tree.classify(25, 0, 0), 2u);
    EXPECT_EQ(tree.classify(99, 0, 0), 3u);
}

TEST(Sort, SplitterTreePadsToPowerOfTwo) {
    std::vector<SortKey<int>> s{ { 10, 0, 0 }, { 20, 0, 0 }, { 30, 0, 0 }, { 40, 0, 0 } };
    SplitterTree<int, std::less<int>> tree(s, {});
    EXPECT_EQ(tree.num_buckets(), 8u);
    EXPECT_EQ(tree.tree_size(), 7u);
    for (int x = 0; x < 100; ++x) {
        std::size_t want = std::min<std::size_t>(4, x <= 10 ? 0 : (x - 1) / 10);
        EXPECT_EQ(tree.classify(x, 0, 0), want) << x;
    }
}

TEST(Sort, SampleSize) {
    EXPECT_EQ(sort_sample_size(1), 32u);
    EXPECT_EQ(sort_sample_size(2), 48u);
    EXPECT_EQ(sort_sample_size(8), 80u);
    EXPECT_EQ(sort_sample_size(9), 96u);
}

TEST(Sort, AllEqualKeysAreBalanced) {
    const std::size_t n = 100000;
    auto counts = per_worker(8, [&](Context& ctx) { return sort(generate(ctx, n, [](std::size_t) { return 42; })); });
    for (auto c : counts) EXPECT_LE(std::max(c, n / 8) - std::min(c, n / 8), 1u) << c;
}

TEST(Sort, AdversarialInputs) {
    const std::size_t n = 20000;
    std::vector<std::vector<std::uint64_t>> cases;
    std::vector<std::uint64_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    cases.push_back(v);
    std::reverse(v.begin(), v.end());
    cases.push_back(v);
    cases.push_back(std::vector<std::uint64_t>(n, 7));
    cases.push_back(random_input(n, 23, 2));
    for (const auto& in : cases) {
        auto got = collect(4, [&](Context& ctx) { return sort(input_dia(ctx, in)); });
        EXPECT_EQ(got, sorted(in));
    }
}

TEST(Sort, UniformInputIsBalanced) {
    const std::size_t n = 100000;
    auto in = random_input(n, 24);
    for (std::size_t p : { 2, 4, 8 }) {
        auto counts = per_worker(p, [&](Context& ctx) { return sort(input_dia(ctx, in)); });
        EXPECT_LE(*std::max_element(counts.begin(), counts.end()), 1.5 * double(n) / double(p)) << "p=" << p;
    }
}

TEST(Sort, SpillsRunsUnderSmallBudget) {
    auto in = random_input(200000, 25);
    std::vector<std::uint64_t> got;
    auto report = run_local(2, 1, config_with_op_memory(256 << 10), [&](Context& ctx) {
        auto v = all_gather(sort(input_dia(ctx, in)));
        if (ctx.my_rank() == 0) got = v;
    });
    std::uint64_t runs = 0;
    for (auto& s : report.stats) runs += s.sort_runs_spilled;
    EXPECT_GT(runs, 2u);
    EXPECT_EQ(got, sorted(in));
}

TEST(Sort, CustomComparator) {
    auto got = collect(4, [](Context& ctx) { return sort(generate(ctx, 1000), std::greater<>()); });
    std::vector<std::size_t> want(1000);
    std::iota(want.rbegin(), want.rend(), 0);
    EXPECT_EQ(got, want);
}

TEST(Merge, SmallExamples) {
    auto got = collect(2, [](Context& ctx) {
        return merge(distribute(ctx, std::vector<int>{ 1, 3 }), distribute(ctx, std::vector<int>{ 2, 4 }));
    });
    EXPECT_EQ(got, (std::vector<int>{ 1, 2, 3, 4 }));
    auto id = collect(2, [](Context& ctx) {
        return merge(distribute(ctx, std::vector<int>{ 1, 2, 5 }), distribute(ctx, std::vector<int>{}));
    });
    EXPECT_EQ(id, (std::vector<int>{ 1, 2, 5 }));
}

TEST(Merge, TiesKeepInputOrder) {
    auto got = collect(4, [](Context& ctx) {
        auto a = generate(ctx, 100, [](std::size_t i) { return KV(i / 10, 0); });
        auto b = generate(ctx, 100, [](std::size_t i) { return KV(i / 10, 1); });
        return merge(a, b, [](const KV& x, const KV& y) { return x.first < y.first; });
    });
    ASSERT_EQ(got.size(), 200u);
    for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(got[i], KV(i / 20, (i % 20) / 10)) << i;
}

TEST(Merge, UnsortedInputIsAContractViolation) {
    try {
        run_local(1, 2, config(), [](Context& ctx) {
            size(merge(distribute(ctx, std::vector<int>{ 3, 1 }), distribute(ctx, std::vector<int>{ 2 })));
        });
        FAIL() << "expected an error";
    }
    catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("not sorted"), std::string::npos) << e.what();
    }
}

// ------------------------------------------------------------------
// prefix sum, zip, window

TEST(PrefixSum, SmallExample) {
    auto got = collect(2, [](Context& ctx) { return prefix_sum(distribute(ctx, std::vector<int>{ 3, 1, 2 })); });
    EXPECT_EQ(got, (std::vector<int>{ 3, 4, 6 }));
    auto empty = collect(2, [](Context& ctx) { return prefix_sum(distribute(ctx, std::vector<int>{})); });
    EXPECT_TRUE(empty.empty());
}

TEST(PrefixSum, IndependentOfWorkerCount) {
    auto in = random_input(10007, 26, 1u << 30);
    auto one = collect(1, [&](Context& ctx) { return prefix_sum(input_dia(ctx, in)); });
    auto eight = collect(8, [&](Context& ctx) { return prefix_sum(input_dia(ctx, in)); });
    EXPECT_EQ(one, eight);
}

TEST(Zip, SmallExample) {
    auto got = collect(2, [](Context& ctx) {
        return zip(distribute(ctx, std::vector<int>{ 1, 2, 3 }), distribute(ctx, std::vector<int>{ 4, 5, 6 }), std::plus<>());
    });
    EXPECT_EQ(got, (std::vector<int>{ 5, 7, 9 }));
    auto idx = collect(2, [](Context& ctx) { return zip_with_index(distribute(ctx, std::vector<std::string>{ "a", "b" })); });
    EXPECT_EQ(idx, (std::vector<std::pair<std::size_t, std::string>>{ { 0, "a" }, { 1, "b" } }));
}

TEST(Zip, SkewedDistributions) {
    auto got = collect(2, [](Context& ctx) {
        std::vector<int> a, b;
        if (ctx.my_rank() == 0) a = { 1, 2, 3, 4 }, b = { 10 };
        else b = { 20, 30, 40 };
        return zip(from_local(ctx, a), from_local(ctx, b), [](int x, int y) { return x + y; });
    });
    EXPECT_EQ(got, (std::vector<int>{ 11, 22, 33, 44 }));
}

TEST(Zip, ThreeInputs) {
    auto got = collect(4, [](Context& ctx) {
        return zip(generate(ctx, 50), generate(ctx, 50, [](std::size_t i) { return i * 10; }),
                   sort(generate(ctx, 50, [](std::size_t i) { return 49 - i; })),
                   [](std::size_t a, std::size_t b, std::size_t c) { return a + b + c; });
    });
    ASSERT_EQ(got.size(), 50u);
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(got[i], 12 * i);
}

TEST(Zip, SizeMismatchReportsBothSizes) {
    try {
        run_local(1, 2, config(), [](Context& ctx) { size(zip(generate(ctx, 3), generate(ctx, 7), std::plus<>())); });
        FAIL() << "expected an error";
    }
    catch (const Error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find('3'), std::string::npos) << msg;
        EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    }
}

TEST(Zip, CutAndPad) {
    auto cut = collect(4, [](Context& ctx) { return zip_cut(generate(ctx, 3), generate(ctx, 7), std::plus<>()); });
    EXPECT_EQ(cut, (std::vector<std::size_t>{ 0, 2, 4 }));
    auto pad = collect(4, [](Context& ctx) {
        return zip_pad(generate(ctx, 3), generate(ctx, 5), std::plus<>(), std::size_t(100), std::size_t(0));
    });
    EXPECT_EQ(pad, (std::vector<std::size_t>{ 0, 2, 4, 103, 104 }));
}

TEST(Window, SlidingSumExample) {
    auto got = collect(2, [](Context& ctx) {
        return window(distribute(ctx, std::vector<int>{ 1, 2, 3 }), 2, [](std::size_t, std::span<const int> w) { return w[0] + w[1]; });
    });
    EXPECT_EQ(got, (std::vector<int>{ 3, 5 }));
}

TEST(Window, WholeInputIsOneWindow) {
    auto got = collect(4, [](Context& ctx) {
        return window(generate(ctx, 10), 10, [](std::size_t i, std::span<const std::size_t> w) { return i * 100 + w.size(); });
    });
    EXPECT_EQ(got, (std::vector<std::size_t>{ 10 }));
}

TEST(Window, CrossesEmptyWorkers) {
    auto got = collect(4, [](Context& ctx) {
        std::vector<int> local;
        if (ctx.my_rank() == 0) local = { 1, 2 };
        if (ctx.my_rank() == 3) local = { 3, 4 };
        return window(from_local(ctx, local), 3, [](std::size_t, std::span<const int> w) { return w[0] * 100 + w[1] * 10 + w[2]; });
    });
    EXPECT_EQ(got, (std::vector<int>{ 123, 234 }));
}

TEST(Window, FlatVariants) {
    auto got = collect(4, [](Context& ctx) {
        return flat_window<std::size_t>(generate(ctx, 20), 4, [](std::size_t i, std::span<const std::size_t> w, auto emit) {
            if (i % 5 == 0)
                for (auto x : w) emit(x);
        });
    });
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i + 4 <= 20; i += 5)
        for (std::size_t j = 0; j < 4; ++j) want.push_back(i + j);
    EXPECT_EQ(got, want);
    auto dis = collect(4, [](Context& ctx) {
        return flat_disjoint_window<std::size_t>(generate(ctx, 10), 4, [](std::size_t, std::span<const std::size_t> w, auto emit) {
            emit(w.back());
        });
    });
    EXPECT_EQ(dis, (std::vector<std::size_t>{ 3, 7, 9 }));
}

TEST(Window, SizeZeroIsAContractViolation) {
    EXPECT_THROW(run_local(1, 1, config(), [](Context& ctx) {
                     window(generate(ctx, 3), 0, [](std::size_t, std::span<const std::size_t>) { return 0; });
                 }),
                 ContractError);
}

// ------------------------------------------------------------------
// file input and output

TEST(ReadLines, FilesInBytewiseOrder) {
    auto dir = scratch_dir("order");
    write_text(dir / "b.txt", "b1\nb2\n");
    write_text(dir / "a.txt", "a1\na2");
    write_text(dir / "c.txt", "");
    auto got = collect(4, [&](Context& ctx) { return read_lines(ctx, (dir / "*.txt").string()); });
    EXPECT_EQ(got, (std::vector<std::string>{ "a1", "a2", "b1", "b2" }));
    std::filesystem::remove_all(dir);
}

TEST(ReadLines, EveryLineReadOnceForAnySplit) {
    auto dir = scratch_dir("split");
    std::mt19937_64 rng(27);
    std::vector<std::string> want;
    for (int f = 0; f < 5; ++f) {
        std::string text;
        for (int l = 0; l < 37; ++l) {
            std::string line(rng() % 17, char('a' + f));
            want.push_back(line);
            text += line + "\n";
        }
        write_text(dir / ("f" + std::to_string(f)), text);
    }
    for (std::size_t p : { 1, 2, 4, 8 })
        EXPECT_EQ(collect(p, [&](Context& ctx) { return read_lines(ctx, dir.string()); }), want) << "p=" << p;
    std::filesystem::remove_all(dir);
}

TEST(ReadLines, RawBytesPassThrough) {
    auto dir = scratch_dir("raw");
    std::string odd = "\xff\xfe\x80 ok\r";
    write_text(dir / "x", odd + "\n");
    auto got = collect(2, [&](Context& ctx) { return read_lines(ctx, (dir / "x").string()); });
    EXPECT_EQ(got, (std::vector<std::string>{ odd }));
    std::filesystem::remove_all(dir);
}

TEST(ReadLines, MissingPathNamesIt) {
    const std::string path = "/nonexistent/thrillette-input-*";
    try {
        run_local(1, 1, config(), [&](Context& ctx) { size(read_lines(ctx, path)); });
        FAIL() << "expected IoError";
    }
    catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(path), std::string::npos) << e.what();
    }
}

TEST(WriteLines, OnePartPerWorker) {
    auto dir = scratch_dir("parts");
    run_local(2, 2, config(), [&](Context& ctx) {
        write_lines(generate(ctx, 10).map([](std::size_t i) { return std::to_string(i); }), dir.string());
    });
    std::string all;
    for (int w = 0; w < 4; ++w) {
        char name[16];
        std::snprintf(name, sizeof(name), "part-%05d", w);
        std::ifstream in(dir / name);
        ASSERT_TRUE(in) << name;
        all += std::string(std::istreambuf_iterator<char>(in), {});
    }
    EXPECT_EQ(all, "0\n1\n2\n3\n4\n5\n6\n7\n8\n9\n");
    std::filesystem::remove_all(dir);
}

TEST(ReadBinary, HeaderRecordsFixedSize) {
    auto dir = scratch_dir("header");
    run_local(1, 1, config(), [&](Context& ctx) { write_binary(generate(ctx, 3, [](std::size_t i) { return std::uint64_t(i); }), dir.string()); });
    std::ifstream in(dir / "part-00000", std::ios::binary);
    std::string bytes(std::istreambuf_iterator<char>(in), {});
    ASSERT_EQ(bytes.size(), 16u + 24u);
    EXPECT_EQ(bytes.substr(0, 4), "DIAB");
    EXPECT_EQ(std::uint8_t(bytes[8]), 8);
    std::filesystem::remove_all(dir);
}

TEST(ReadBinary, RereadWithDifferentWorkerCount) {
    auto dir = scratch_dir("reread");
    auto in = random_input(100000, 28);
    run_local(1, 1, config(), [&](Context& ctx) { write_binary(input_dia(ctx, in), dir.string()); });
    auto counts = per_worker(4, [&](Context& ctx) { return read_binary<std::uint64_t>(ctx, (dir / "part-*").string()); });
    EXPECT_EQ(counts, (std::vector<std::size_t>(4, 25000)));
    EXPECT_EQ(collect(4, [&](Context& ctx) { return read_binary<std::uint64_t>(ctx, (dir / "part-*").string()); }), in);
    std::filesystem::remove_all(dir);
}

TEST(ReadBinary, VariableSizeItems) {
    auto dir = scratch_dir("var");
    std::vector<std::string> in;
    for (int i = 0; i < 5000; ++i) in.push_back(std::string(i % 13, 'x') + std::to_string(i));
    run_local(2, 2, config(), [&](Context& ctx) { write_binary(input_dia(ctx, in), dir.string()); });
    EXPECT_EQ(collect(8, [&](Context& ctx) { return read_binary<std::string>(ctx, (dir / "part-*").string()); }), in);
    std::filesystem::remove_all(dir);
}

TEST(ReadBinary, WrongItemTypeIsCorruption) {
    auto dir = scratch_dir("wrong");
    run_local(1, 1, config(), [&](Context& ctx) { write_binary(generate(ctx, 3, [](std::size_t i) { return std::uint64_t(i); }), dir.string()); });
    EXPECT_THROW(run_local(1, 1, config(), [&](Context& ctx) { size(read_binary<std::uint32_t>(ctx, dir.string())); }),
                 CorruptionError);
    std::filesystem::remove_all(dir);
}
