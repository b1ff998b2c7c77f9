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
#include <thrillette/net/host_network.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace thrillette::net {

/// Logical channel reserved for collectives. Streams use ids >= 1.
inline constexpr std::uint32_t kCollectiveChannel = 0;

/*
 * Per-worker communication handle: point-to-point messages plus the
 * synchronous collectives. All p workers must call the collectives in the
 * same order. Every collective message carries an incrementing tag and a
 * mismatch throws CollectiveMismatch on the receiver.
 *
 * The collectives run over binomial trees rooted at worker 0 (or the
 * broadcast root). Each consists of an up-sweep followed by a down-sweep,
 * so no worker returns before all p have entered.
 */
class Group
{
public:
    Group(HostNet& host, std::size_t my_worker)
        : host_(&host), my_worker_(my_worker) {
        if (my_worker >= host.config().total_workers() || !host.is_local(my_worker))
            throw ContractError("worker " + std::to_string(my_worker) + " does not live on host " +
                                std::to_string(host.host_id()));
    }

    std::size_t my_rank() const { return my_worker_; }
    std::size_t num_workers() const { return host_->config().total_workers(); }
    std::size_t num_hosts() const { return host_->config().hosts; }
    std::size_t workers_per_host() const { return host_->config().workers_per_host; }
    std::size_t my_host() const { return host_->host_id(); }
    const ClusterConfig& config() const { return host_->config(); }
    HostNet& host() const { return *host_; }
    bool is_local(std::size_t worker) const { return host_->is_local(worker); }

    // ---- point to point ---------------------------------------------------

    void send(std::size_t dest, std::uint32_t channel, Buffer payload) {
        host_->send(rank32(), static_cast<std::uint32_t>(dest), channel, std::move(payload));
    }
    void send_end(std::size_t dest, std::uint32_t channel) {
        host_->send(rank32(), static_cast<std::uint32_t>(dest), channel, {}, true);
    }
    /// Same-host only: hands `object` over by reference.
    void send_local(std::size_t dest, std::uint32_t channel, std::shared_ptr<const void> object) {
        host_->send(rank32(), static_cast<std::uint32_t>(dest), channel, {}, false, std::move(object));
    }

    Envelope recv_envelope(std::size_t src, std::uint32_t channel) {
        if (src >= num_workers()) throw ContractError("recv from worker out of range");
        return mailbox().pop(channel, static_cast<std::uint32_t>(src));
    }
    Envelope recv_any(std::uint32_t channel) { return mailbox().pop_any(channel); }

    Buffer recv(std::size_t src, std::uint32_t channel) {
        Envelope e = recv_envelope(src, channel);
        if (e.end_of_channel) throw ProtocolError("unexpected end of channel");
        return std::move(e.bytes);
    }

    void release_channel(std::uint32_t channel) { mailbox().erase_channel(channel); }

    // ---- collectives --------------------------------------------------------

    template <typename T>
    T broadcast(const T& value, std::size_t root = 0) {
        const std::uint32_t tag = next_tag(Op::broadcast);
        const std::size_t p = num_workers();
        if (root >= p) throw ContractError("broadcast root out of range");
        if (p == 1) return value;
        const std::size_t rel = (my_worker_ + p - root) % p;
        auto abs = [&](std::size_t r) { return (r + root) % p; };

        // up-sweep: empty tokens, so the root waits for everyone
        for (std::size_t k = 1; k < p && (rel & k) == 0; k <<= 1)
            if (rel + k < p) expect_empty(abs(rel + k), tag);
        if (rel != 0) send_tagged(abs(rel - lowbit(rel)), tag, {});

        std::optional<T> v;
        if (rel == 0) v = value;
        else v = decode<T>(recv_tagged(abs(rel - lowbit(rel)), tag));
        Buffer enc = encode(*v);
        for (std::size_t k = top_child(rel, p); k > 0; k >>= 1)
            if (rel + k < p) send_tagged(abs(rel + k), tag, enc);
        return std::move(*v);
    }

    /// Left fold over all workers' values in rank order.
    template <typename T, typename Combine>
    T all_reduce(const T& value, Combine combine) {
        return all_reduce_as(Op::all_reduce, value, combine);
    }

    /// Worker w receives initial + v_0 + ... + v_{w-1}.
    template <typename T, typename Combine>
    T ex_prefix_sum(const T& value, Combine combine, const T& initial) {
        const std::uint32_t tag = next_tag(Op::prefix_sum);
        const std::size_t p = num_workers();
        if (p == 1) return initial;
        const std::size_t r = my_worker_;

        // up-sweep: subtree sums of the children, in ascending child order
        std::vector<std::pair<std::size_t, T>> child_sums;
        T subtree = value;
        for (std::size_t k = 1; k < p && (r & k) == 0; k <<= 1) {
            if (r + k >= p) break;
            T s = decode<T>(recv_tagged(r + k, tag));
            subtree = combine(subtree, s);
            child_sums.emplace_back(r + k, std::move(s));
        }
        if (r != 0) send_tagged(r - lowbit(r), tag, encode(subtree));

        // down-sweep: exclusive prefix for each child
        T prefix = (r == 0) ? initial : decode<T>(recv_tagged(r - lowbit(r), tag));
        T running = combine(prefix, value);
        for (auto& [child, s] : child_sums) {
            send_tagged(child, tag, encode(running));
            running = combine(running, s);
        }
        return prefix;
    }

    /// Concatenation of all workers' vectors in rank order, on every worker.
    template <typename T>
    std::vector<T> all_gather(const std::vector<T>& local) {
        auto gathered = gather(local, 0);
        return broadcast(gathered, 0);
    }

    template <typename T>
    std::vector<T> all_gather_value(const T& value) {
        return all_gather(std::vector<T>{ value });
    }

    /// Concatenation at the root only; other workers get an empty vector.
    template <typename T>
    std::vector<T> gather(const std::vector<T>& local, std::size_t root = 0) {
        const std::uint32_t tag = next_tag(Op::gather);
        const std::size_t p = num_workers();
        if (p == 1) return local;
        const std::size_t rel = (my_worker_ + p - root) % p;
        auto abs = [&](std::size_t r) { return (r + root) % p; };

        // relative rank order; root 0 keeps rank order exactly
        std::vector<std::pair<std::size_t, std::vector<T>>> parts;
        parts.emplace_back(my_worker_, local);
        for (std::size_t k = 1; k < p && (rel & k) == 0; k <<= 1) {
            if (rel + k >= p) break;
            auto sub = decode<std::vector<std::pair<std::size_t, std::vector<T>>>>(
                recv_tagged(abs(rel + k), tag));
            for (auto& s : sub) parts.push_back(std::move(s));
        }
        if (rel != 0) {
            send_tagged(abs(rel - lowbit(rel)), tag, encode(parts));
            return {};
        }
        std::sort(parts.begin(), parts.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<T> out;
        for (auto& [rank, v] : parts)
            for (auto& x : v) out.push_back(std::move(x));
        return out;
    }

    void barrier() {
        all_reduce_as<std::uint8_t>(Op::barrier, 0, [](std::uint8_t a, std::uint8_t) { return a; });
    }

    std::uint32_t collectives_issued() const { return seq_; }

private:
    enum class Op : std::uint8_t { broadcast = 1, all_reduce, prefix_sum, gather, barrier };

    static const char* op_name(std::uint32_t tag) {
        switch (tag & 0xF) {
        case 1: return "broadcast";
        case 2: return "all_reduce";
        case 3: return "ex_prefix_sum";
        case 4: return "gather";
        case 5: return "barrier";
        default: return "unknown";
        }
    }

    template <typename T, typename Combine>
    T all_reduce_as(Op op, const T& value, Combine combine) {
        const std::uint32_t tag = next_tag(op);
        const std::size_t p = num_workers();
        if (p == 1) return value;
        const std::size_t r = my_worker_;

        T acc = value;
        for (std::size_t k = 1; k < p && (r & k) == 0; k <<= 1)
            if (r + k < p) acc = combine(acc, decode<T>(recv_tagged(r + k, tag)));
        if (r != 0) {
            send_tagged(r - lowbit(r), tag, encode(acc));
            acc = decode<T>(recv_tagged(r - lowbit(r), tag));
        }
        Buffer enc = encode(acc);
        for (std::size_t k = top_child(r, p); k > 0; k >>= 1)
            if (r + k < p) send_tagged(r + k, tag, enc);
        return acc;
    }

    static std::size_t lowbit(std::size_t x) { return x & (~x + 1); }

    /// Largest child offset of relative rank r, or 0 for a leaf.
    static std::size_t top_child(std::size_t r, std::size_t p) {
        std::size_t limit = (r == 0) ? std::bit_ceil(p) : lowbit(r);
        return limit >> 1;
    }

    std::uint32_t rank32() const { return static_cast<std::uint32_t>(my_worker_); }
    Mailbox& mailbox() { return host_->mailbox(host_->config().local_of(my_worker_)); }
    /// Sequence number in the upper 28 bits, operation kind in the low 4.
    std::uint32_t next_tag(Op op) { return (seq_++ << 4) | static_cast<std::uint32_t>(op); }

    template <typename T>
    static Buffer encode(const T& v) { return data::serialize_to_buffer(v); }
    template <typename T>
    static T decode(const Buffer& b) { return data::deserialize_from_buffer<T>(b); }

    void send_tagged(std::size_t dest, std::uint32_t tag, const Buffer& body) {
        Buffer b;
        b.reserve(body.size() + 4);
        data::BufferWriter(b).put(tag);
        b.insert(b.end(), body.begin(), body.end());
        send(dest, kCollectiveChannel, std::move(b));
    }

    Buffer recv_tagged(std::size_t src, std::uint32_t tag) {
        Buffer b = recv(src, kCollectiveChannel);
        if (b.size() < 4) throw ProtocolError("collective message without tag");
        std::uint32_t got = data::detail::load_le<std::uint32_t>(b.data());
        if (got != tag)
            throw CollectiveMismatch("collective #" + std::to_string(tag >> 4) + " (" + op_name(tag) +
                                     ") on worker " + std::to_string(my_worker_) +
                                     " received collective #" + std::to_string(got >> 4) + " (" +
                                     op_name(got) + ") from worker " + std::to_string(src));
        b.erase(b.begin(), b.begin() + 4);
        return b;
    }

    void expect_empty(std::size_t src, std::uint32_t tag) {
        Buffer b = recv_tagged(src, tag);
        if (!b.empty()) throw ProtocolError("unexpected payload in collective token");
    }

    HostNet* host_;
    std::size_t my_worker_;
    std::uint32_t seq_ = 0;
};

} // namespace thrillette::net
