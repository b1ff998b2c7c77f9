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
#include <thrillette/data/serialization.hpp>

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

namespace thrillette::net {

/// One delivered message. Same-host senders may hand over an object by
/// reference in `attachment` instead of bytes.
struct Envelope
{
    std::uint32_t src = 0;
    bool end_of_channel = false;
    Buffer bytes;
    std::shared_ptr<const void> attachment;
};

/// Inbound queues of one worker, keyed by logical channel and sender.
class Mailbox
{
public:
    void push(std::uint32_t channel, Envelope e) {
        {
            std::lock_guard lock(mutex_);
            auto& ch = channels_[channel];
            ch.arrival.push_back(e.src);
            ch.per_src[e.src].push_back(std::move(e));
        }
        cv_.notify_all();
    }

    /// Next message on `channel` from `src`, blocking.
    Envelope pop(std::uint32_t channel, std::uint32_t src) {
        std::unique_lock lock(mutex_);
        for (;;) {
            auto& ch = channels_[channel];
            auto& q = ch.per_src[src];
            if (!q.empty()) {
                Envelope e = std::move(q.front());
                q.pop_front();
                auto it = std::find(ch.arrival.begin(), ch.arrival.end(), src);
                if (it != ch.arrival.end()) ch.arrival.erase(it);
                return e;
            }
            if (failure_) throw NetError(*failure_);
            cv_.wait(lock);
        }
    }

    /// Next message on `channel` from any sender, in arrival order.
    Envelope pop_any(std::uint32_t channel) {
        std::unique_lock lock(mutex_);
        for (;;) {
            auto& ch = channels_[channel];
            if (!ch.arrival.empty()) {
                std::uint32_t src = ch.arrival.front();
                ch.arrival.pop_front();
                auto& q = ch.per_src[src];
                Envelope e = std::move(q.front());
                q.pop_front();
                return e;
            }
            if (failure_) throw NetError(*failure_);
            cv_.wait(lock);
        }
    }

    void erase_channel(std::uint32_t channel) {
        std::lock_guard lock(mutex_);
        channels_.erase(channel);
    }

    std::size_t num_channels() const {
        std::lock_guard lock(mutex_);
        return channels_.size();
    }

    void fail(const std::string& reason) {
        {
            std::lock_guard lock(mutex_);
            if (!failure_) failure_ = reason;
        }
        cv_.notify_all();
    }

private:
    struct Channel
    {
        std::map<std::uint32_t, std::deque<Envelope>> per_src;
        std::deque<std::uint32_t> arrival;
    };

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::unordered_map<std::uint32_t, Channel> channels_;
    std::optional<std::string> failure_;
};

} // namespace thrillette::net
