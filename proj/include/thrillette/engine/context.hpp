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
#include <thrillette/data/block_pool.hpp>
#include <thrillette/data/file.hpp>
#include <thrillette/data/stream.hpp>
#include <thrillette/engine/config.hpp>
#include <thrillette/net/group.hpp>
#include <thrillette/net/host_network.hpp>

#include <atomic>
#include <cstdint>
#include <iostream>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace thrillette {

/// State shared by the workers of one host.
class HostContext
{
public:
    HostContext(net::HostNet& net, EngineConfig config)
        : net_(net), config_(std::move(config)),
          pool_(config_.pool_budget(), config_.swap_dir.empty()
                                           ? std::filesystem::path()
                                           : std::filesystem::path(config_.swap_dir) /
                                                 ("host-" + std::to_string(net.host_id()))) { }

    net::HostNet& net() { return net_; }
    data::BlockPool& pool() { return pool_; }
    const EngineConfig& config() const { return config_; }

private:
    net::HostNet& net_;
    EngineConfig config_;
    data::BlockPool pool_;
};

/// One executed stage, as recorded for tracing and profiling.
struct StageRecord
{
    std::size_t stage_id = 0;
    std::vector<std::size_t> member_ids;
    std::vector<std::string> member_names;
    std::size_t budget_per_member = 0;
    /// members that received a memory share
    std::size_t memory_members = 0;
    double wall_ms = 0;
    std::uint64_t tx_bytes = 0;
    std::uint64_t rx_bytes = 0;
    std::size_t peak_pool_bytes = 0;
};

/// Instrumentation counters of one worker.
struct WorkerStats
{
    std::uint64_t nodes_created = 0;
    std::uint64_t main_executions = 0;
    std::uint64_t reduce_spills = 0;
    std::uint64_t reduce_recursions = 0;
    std::uint64_t sort_runs_spilled = 0;
    std::uint64_t group_runs_spilled = 0;
};

/// Per-worker handle: rank, communicator, host pool and memory budget.
class Context
{
public:
    Context(HostContext& host, std::size_t my_worker)
        : host_(host), group_(host.net(), my_worker),
          rng_(static_cast<std::uint64_t>(hash_combine(host.config().seed, my_worker))) { }

    Context(const Context&) = delete;
    Context& operator=(const Context&) = delete;

    std::size_t my_rank() const { return group_.my_rank(); }
    std::size_t num_workers() const { return group_.num_workers(); }
    std::size_t num_hosts() const { return group_.num_hosts(); }
    std::size_t workers_per_host() const { return group_.workers_per_host(); }
    std::size_t host_rank() const { return group_.my_host(); }

    net::Group& net() { return group_; }
    HostContext& host() { return host_; }
    data::BlockPool& pool() { return host_.pool(); }
    const EngineConfig& config() const { return host_.config(); }
    std::size_t block_size() const { return config().block_size; }
    std::uint64_t seed() const { return config().seed; }
    bool consume() const { return config().consume; }

    /// Operation memory available to one stage on this worker.
    std::size_t op_memory() const { return config().op_budget() / workers_per_host(); }

    std::mt19937_64& rng() { return rng_; }

    data::FilePtr make_file() { return std::make_shared<data::File>(pool(), block_size()); }

    std::uint32_t next_stream_id() { return next_stream_id_++; }

    std::unique_ptr<data::Stream> make_stream(std::uint32_t id, data::StreamKind kind) {
        return std::make_unique<data::Stream>(group_, pool(), id, kind, block_size());
    }

    std::size_t next_node_id() {
        ++stats_.nodes_created;
        return next_node_id_++;
    }
    std::size_t next_stage_id() { return next_stage_id_++; }

    WorkerStats& stats() { return stats_; }
    const std::vector<StageRecord>& stages() const { return stages_; }
    void record_stage(StageRecord r) {
        if (config().trace_stages && my_rank() == 0) trace(r);
        stages_.push_back(std::move(r));
    }

private:
    static void trace(const StageRecord& r) {
        static std::mutex m;
        std::lock_guard lock(m);
        std::cerr << "[stage " << r.stage_id << "] members=";
        for (std::size_t i = 0; i < r.member_names.size(); ++i)
            std::cerr << (i ? "," : "") << r.member_names[i] << "#" << r.member_ids[i];
        std::cerr << " budget=" << r.budget_per_member << " wall_ms=" << r.wall_ms
                  << " tx=" << r.tx_bytes << " rx=" << r.rx_bytes << "\n";
    }

    HostContext& host_;
    net::Group group_;
    std::mt19937_64 rng_;
    // stream id 0 is the collective channel
    std::uint32_t next_stream_id_ = 1;
    std::size_t next_node_id_ = 0;
    std::size_t next_stage_id_ = 0;
    WorkerStats stats_;
    std::vector<StageRecord> stages_;
};

} // namespace thrillette
