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
#include <thrillette/engine/config.hpp>
#include <thrillette/engine/context.hpp>
#include <thrillette/net/cluster_config.hpp>
#include <thrillette/net/mock.hpp>
#include <thrillette/net/tcp.hpp>

#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace thrillette {

/// What a run leaves behind for inspection.
struct RunReport
{
    /// per worker (indexed by global rank for mock runs, local rank for tcp)
    std::vector<std::vector<StageRecord>> stages;
    std::vector<WorkerStats> stats;
    /// per host
    std::vector<net::NetCounters> net;
    std::vector<data::PoolStats> pools;
    double wall_ms = 0;
};

namespace detail {

/// Keeps the most telling of the errors raised by the workers: an
/// operation failure beats other failures, which beat the network errors
/// caused by aborting the cluster.
class FirstError
{
public:
    void offer(std::exception_ptr e) {
        std::lock_guard lock(m_);
        int r = rank(e);
        if (!e_ || r > rank_) {
            e_ = e;
            rank_ = r;
        }
    }
    void rethrow() const {
        if (e_) std::rethrow_exception(e_);
    }
    bool any() const { return static_cast<bool>(e_); }

private:
    static int rank(std::exception_ptr e) {
        try {
            std::rethrow_exception(e);
        }
        catch (const StageError&) {
            return 3;
        }
        catch (const NetError&) {
            return 1;
        }
        catch (...) {
            return 2;
        }
    }

    std::mutex m_;
    std::exception_ptr e_;
    int rank_ = 0;
};

} // namespace detail

using WorkerFn = std::function<void(Context&)>;

/*
 * Runs `fn` on all h*c workers of an in-process cluster, one thread per
 * worker. The first failure aborts the whole cluster and is rethrown.
 */
inline RunReport run_local(std::size_t hosts, std::size_t workers_per_host, const EngineConfig& config,
                           const WorkerFn& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    // pools outlive the cluster: mailboxes may still hold blocks after an abort
    std::vector<std::unique_ptr<HostContext>> host_ctx;
    net::MockCluster cluster(hosts, workers_per_host);
    for (std::size_t h = 0; h < hosts; ++h)
        host_ctx.push_back(std::make_unique<HostContext>(cluster.host(h), config));

    const std::size_t p = hosts * workers_per_host;
    RunReport report;
    report.stages.resize(p);
    report.stats.resize(p);
    detail::FirstError err;
    std::vector<std::thread> threads;
    threads.reserve(p);
    for (std::size_t w = 0; w < p; ++w) {
        threads.emplace_back([&, w] {
            try {
                Context ctx(*host_ctx[w / workers_per_host], w);
                fn(ctx);
                ctx.net().barrier();
                report.stages[w] = ctx.stages();
                report.stats[w] = ctx.stats();
            }
            catch (...) {
                err.offer(std::current_exception());
                cluster.abort("worker " + std::to_string(w) + " failed");
            }
        });
    }
    for (auto& t : threads) t.join();
    err.rethrow();
    for (std::size_t h = 0; h < hosts; ++h) {
        report.net.push_back(cluster.host(h).counters());
        report.pools.push_back(host_ctx[h]->pool().stats());
    }
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

/*
 * Runs this host's c workers as one rank of a tcp cluster. `cluster`
 * carries the endpoint list and my_host; every host calls this with the
 * same topology.
 */
inline RunReport run_tcp(const net::ClusterConfig& cluster, const EngineConfig& config, const WorkerFn& fn,
                         std::chrono::milliseconds connect_timeout = std::chrono::seconds(10)) {
    const auto t0 = std::chrono::steady_clock::now();
    cluster.validate(net::Backend::tcp);
    net::HostNet host(cluster);
    net::TcpTransport::connect(host, connect_timeout);
    HostContext host_ctx(host, config);

    const std::size_t c = cluster.workers_per_host;
    RunReport report;
    report.stages.resize(c);
    report.stats.resize(c);
    detail::FirstError err;
    std::vector<std::thread> threads;
    for (std::size_t l = 0; l < c; ++l) {
        threads.emplace_back([&, l] {
            try {
                Context ctx(host_ctx, cluster.global_rank(cluster.my_host, l));
                fn(ctx);
                ctx.net().barrier();
                report.stages[l] = ctx.stages();
                report.stats[l] = ctx.stats();
            }
            catch (...) {
                err.offer(std::current_exception());
                host.abort("local worker " + std::to_string(l) + " failed");
            }
        });
    }
    for (auto& t : threads) t.join();
    if (!err.any()) host.shutdown();
    err.rethrow();
    report.net.push_back(host.counters());
    report.pools.push_back(host_ctx.pool().stats());
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace thrillette
