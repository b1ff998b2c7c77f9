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

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

namespace thrillette::net {

enum class Backend { mock, tcp };

inline Backend parse_backend(const std::string& s) {
    if (s == "mock") return Backend::mock;
    if (s == "tcp") return Backend::tcp;
    throw ContractError("unknown backend '" + s + "' (expected mock or tcp)");
}

/// Topology of h hosts with c workers each. Worker w lives on host w / c.
struct ClusterConfig
{
    std::size_t hosts = 1;
    std::size_t workers_per_host = 1;
    std::size_t my_host = 0;
    /// host:port per host, identical on every host (tcp only)
    std::vector<std::string> endpoints;

    std::size_t total_workers() const { return hosts * workers_per_host; }
    std::size_t host_of(std::size_t worker) const { return worker / workers_per_host; }
    std::size_t local_of(std::size_t worker) const { return worker % workers_per_host; }
    std::size_t global_rank(std::size_t host, std::size_t local) const {
        return host * workers_per_host + local;
    }

    void validate(Backend backend) const {
        if (hosts == 0 || workers_per_host == 0)
            throw ContractError("cluster needs at least one host and one worker per host");
        if (workers_per_host > 256)
            throw ContractError("at most 256 workers per host are supported");
        if (my_host >= hosts)
            throw ContractError("my_host " + std::to_string(my_host) +
                                " out of range for " + std::to_string(hosts) + " hosts");
        if (backend == Backend::tcp && endpoints.size() != hosts)
            throw ContractError("tcp backend needs " + std::to_string(hosts) +
                                " endpoints, got " + std::to_string(endpoints.size()));
    }

    /// Identity of the cluster shape, compared during the tcp handshake.
    std::uint64_t fingerprint() const {
        std::uint64_t h = hash_combine(mix64(hosts), workers_per_host);
        for (const auto& e : endpoints) h = hash_combine(h, hash_bytes(e.data(), e.size()));
        return h;
    }
};

inline std::vector<std::string> split_endpoints(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

/// Fills my_host and endpoints from THRILLETTE_RANK / THRILLETTE_ENDPOINTS
/// where the caller left them unset.
inline void apply_env_fallbacks(ClusterConfig& cfg, bool have_rank, bool have_endpoints) {
    if (!have_rank) {
        if (const char* r = std::getenv("THRILLETTE_RANK")) cfg.my_host = std::stoul(r);
    }
    if (!have_endpoints) {
        if (const char* e = std::getenv("THRILLETTE_ENDPOINTS")) cfg.endpoints = split_endpoints(e);
    }
}

} // namespace thrillette::net
