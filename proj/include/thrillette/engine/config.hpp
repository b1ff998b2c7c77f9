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
#include <thrillette/data/block.hpp>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>

namespace thrillette {

/// Parses sizes such as "4096", "64KiB", "1MiB", "2GiB", "512k".
inline std::size_t parse_size(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i == 0) throw ContractError("bad size '" + text + "'");
    std::size_t value = std::stoull(text.substr(0, i));
    std::string unit = text.substr(i);
    for (auto& ch : unit) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    std::size_t mult = 1;
    if (unit.empty() || unit == "b") mult = 1;
    else if (unit == "k" || unit == "kb" || unit == "kib") mult = std::size_t(1) << 10;
    else if (unit == "m" || unit == "mb" || unit == "mib") mult = std::size_t(1) << 20;
    else if (unit == "g" || unit == "gb" || unit == "gib") mult = std::size_t(1) << 30;
    else throw ContractError("bad size unit in '" + text + "'");
    return value * mult;
}

/*
 * Engine settings of one host. The memory limit is split into a block pool
 * part, an operation part (hash tables, sort buffers) and a user part;
 * each defaults to a third. The operation part is divided evenly among
 * the host's workers.
 */
struct EngineConfig
{
    std::size_t block_size = data::kDefaultBlockSize;
    std::size_t memory_limit = std::size_t(3) << 30;
    std::optional<std::size_t> pool_memory;
    std::optional<std::size_t> op_memory;
    std::string swap_dir;
    std::uint64_t seed = 42;
    /// Release a DIA's data while it is pushed to its last consumer.
    bool consume = false;
    bool trace_stages = false;

    std::size_t pool_budget() const { return pool_memory.value_or(memory_limit / 3); }
    std::size_t op_budget() const { return op_memory.value_or(memory_limit / 3); }
    std::size_t user_budget() const {
        std::size_t used = pool_budget() + op_budget();
        return memory_limit > used ? memory_limit - used : 0;
    }

    /// THRILLETTE_TRACE=stages switches on the per-stage trace.
    void apply_env() {
        if (const char* t = std::getenv("THRILLETTE_TRACE"))
            if (std::string(t).find("stages") != std::string::npos) trace_stages = true;
    }
};

} // namespace thrillette
