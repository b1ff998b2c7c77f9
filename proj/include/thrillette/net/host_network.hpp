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
#include <thrillette/net/cluster_config.hpp>
#include <thrillette/net/frame.hpp>
#include <thrillette/net/mailbox.hpp>

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace thrillette::net {

/// Moves frames between hosts. Implementations must be safe to call from
/// several worker threads at once.
class Transport
{
public:
    virtual ~Transport() = default;
    virtual void send_frame(std::size_t dest_host, const FrameHeader& header,
                            std::span<const std::byte> payload) = 0;
    /// Orderly teardown after the final barrier.
    virtual void shutdown() { }
    /// Drop all connections without the goodbye handshake.
    virtual void abort() { }
};

/// Traffic counters of one host. Only bytes that cross a host boundary are
/// counted; same-host delivery never touches the transport.
struct NetCounters
{
    std::uint64_t tx_bytes = 0;
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_frames = 0;
    std::uint64_t rx_frames = 0;
};

/// Per-host messaging hub shared by the host's c workers and the transport.
class HostNet
{
public:
    explicit HostNet(ClusterConfig config)
        : config_(std::move(config)), mailboxes_(config_.workers_per_host) { }

    HostNet(const HostNet&) = delete;
    HostNet& operator=(const HostNet&) = delete;

    const ClusterConfig& config() const { return config_; }
    std::size_t host_id() const { return config_.my_host; }

    void set_transport(std::unique_ptr<Transport> t) { transport_ = std::move(t); }
    Transport* transport() const { return transport_.get(); }

    bool is_local(std::size_t worker) const { return config_.host_of(worker) == config_.my_host; }

    Mailbox& mailbox(std::size_t local_worker) { return mailboxes_.at(local_worker); }

    /// Sends bytes (or, same-host only, an attachment) on a logical channel.
    void send(std::uint32_t src_worker, std::uint32_t dest_worker, std::uint32_t channel,
              Buffer bytes, bool end_of_channel = false,
              std::shared_ptr<const void> attachment = {}) {
        if (dest_worker >= config_.total_workers())
            throw ContractError("send to worker " + std::to_string(dest_worker) + " out of range");
        if (end_of_channel && !bytes.empty())
            throw ContractError("end-of-channel message must not carry payload");
        check_failed();
        if (is_local(dest_worker)) {
            Envelope e;
            e.src = src_worker;
            e.end_of_channel = end_of_channel;
            e.bytes = std::move(bytes);
            e.attachment = std::move(attachment);
            mailbox(config_.local_of(dest_worker)).push(channel, std::move(e));
            return;
        }
        if (attachment)
            throw ContractError("attachments cannot cross host boundaries");
        if (bytes.size() > kMaxFramePayload) throw ContractError("message exceeds frame limit");
        if (!transport_) throw NetError("no transport configured for remote send");

        FrameHeader h;
        h.channel_id = make_wire_channel(channel, config_.local_of(dest_worker));
        h.sender_worker = src_worker;
        h.flags = end_of_channel ? kFlagEndOfChannel : 0;
        h.payload_length = static_cast<std::uint32_t>(bytes.size());
        {
            std::lock_guard lock(seq_mutex_);
            auto key = std::make_tuple(channel, src_worker, dest_worker);
            auto& seq = tx_seq_[key];
            h.sequence = seq++;
            if (end_of_channel) tx_seq_.erase(key);
        }
        transport_->send_frame(config_.host_of(dest_worker), h, bytes);
        tx_bytes_ += bytes.size();
        ++tx_frames_;
    }

    /// Called by the transport for every inbound frame.
    void deliver(const FrameHeader& h, Buffer payload) {
        std::uint32_t channel = wire_logical_channel(h.channel_id);
        std::size_t local = wire_receiver_local(h.channel_id);
        if (local >= config_.workers_per_host || h.sender_worker >= config_.total_workers())
            throw ProtocolError("frame addresses unknown worker");
        std::uint32_t dest = static_cast<std::uint32_t>(config_.global_rank(config_.my_host, local));
        {
            std::lock_guard lock(seq_mutex_);
            auto key = std::make_tuple(channel, h.sender_worker, dest);
            auto& expect = rx_seq_[key];
            if (h.sequence != expect)
                throw ProtocolError("sequence gap on channel " + std::to_string(channel) +
                                    " from worker " + std::to_string(h.sender_worker) +
                                    ": expected " + std::to_string(expect) + ", got " +
                                    std::to_string(h.sequence));
            ++expect;
            if (h.end_of_channel()) rx_seq_.erase(key);
        }
        rx_bytes_ += payload.size();
        ++rx_frames_;
        Envelope e;
        e.src = h.sender_worker;
        e.end_of_channel = h.end_of_channel();
        e.bytes = std::move(payload);
        mailbox(local).push(channel, std::move(e));
    }

    /// Fails every blocked and future receive on this host.
    void abort(const std::string& reason) {
        {
            std::lock_guard lock(fail_mutex_);
            if (!failure_.empty()) return;
            failure_ = reason;
        }
        for (auto& mb : mailboxes_) mb.fail(reason);
        if (transport_) transport_->abort();
    }

    bool failed() const {
        std::lock_guard lock(fail_mutex_);
        return !failure_.empty();
    }

    NetCounters counters() const {
        return NetCounters{ tx_bytes_.load(), rx_bytes_.load(), tx_frames_.load(), rx_frames_.load() };
    }

    void shutdown() {
        if (transport_) transport_->shutdown();
    }

private:
    void check_failed() const {
        std::lock_guard lock(fail_mutex_);
        if (!failure_.empty()) throw NetError(failure_);
    }

    ClusterConfig config_;
    std::vector<Mailbox> mailboxes_;
    std::unique_ptr<Transport> transport_;

    std::mutex seq_mutex_;
    std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t> tx_seq_, rx_seq_;

    std::atomic<std::uint64_t> tx_bytes_{ 0 }, rx_bytes_{ 0 }, tx_frames_{ 0 }, rx_frames_{ 0 };

    mutable std::mutex fail_mutex_;
    std::string failure_;
};

} // namespace thrillette::net
