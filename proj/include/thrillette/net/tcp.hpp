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
#include <thrillette/net/host_network.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/uio.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace thrillette::net {

namespace tcp_detail {

inline constexpr std::uint32_t kControlChannel = 0xFFFFFFFFu;

struct Address
{
    std::string host;
    std::string port;
};

inline Address parse_address(const std::string& endpoint) {
    auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
        throw ContractError("endpoint '" + endpoint + "' is not host:port");
    return { endpoint.substr(0, colon), endpoint.substr(colon + 1) };
}

inline std::string errno_text() { return std::strerror(errno); }

inline addrinfo* resolve(const Address& a, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(a.host.c_str(), a.port.c_str(), &hints, &res);
    if (rc != 0)
        throw NetError("cannot resolve " + a.host + ":" + a.port + ": " + ::gai_strerror(rc));
    return res;
}

class Fd
{
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) { }
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) { }
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }
    int get() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline void write_all(int fd, const void* data, std::size_t size) {
    const auto* p = static_cast<const char*>(data);
    while (size > 0) {
        ssize_t n = ::send(fd, p, size, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError("socket write failed: " + errno_text());
        }
        p += n;
        size -= static_cast<std::size_t>(n);
    }
}

/// Returns false on clean EOF before the first byte.
inline bool read_all(int fd, void* data, std::size_t size) {
    auto* p = static_cast<char*>(data);
    std::size_t got = 0;
    while (got < size) {
        ssize_t n = ::recv(fd, p + got, size - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError("socket read failed: " + errno_text());
        }
        if (n == 0) {
            if (got == 0) return false;
            throw NetError("connection closed in the middle of a frame");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

inline void send_frame_on(int fd, const FrameHeader& h, std::span<const std::byte> payload) {
    std::array<std::byte, kFrameHeaderSize> hdr;
    encode_header(h, hdr);
    iovec iov[2];
    iov[0].iov_base = hdr.data();
    iov[0].iov_len = hdr.size();
    iov[1].iov_base = const_cast<std::byte*>(payload.data());
    iov[1].iov_len = payload.size();
    std::size_t total = hdr.size() + payload.size();
    msghdr msg{};
    msg.msg_iov = iov;
    msg.msg_iovlen = payload.empty() ? 1 : 2;
    ssize_t n;
    do {
        n = ::sendmsg(fd, &msg, MSG_NOSIGNAL);
    } while (n < 0 && errno == EINTR);
    if (n < 0) throw NetError("socket write failed: " + errno_text());
    if (static_cast<std::size_t>(n) == total) return;
    // finish a short write
    std::size_t done = static_cast<std::size_t>(n);
    if (done < hdr.size()) {
        write_all(fd, hdr.data() + done, hdr.size() - done);
        done = hdr.size();
    }
    write_all(fd, payload.data() + (done - hdr.size()), total - done);
}

inline bool recv_frame_on(int fd, MessageFrame& out) {
    std::array<std::byte, kFrameHeaderSize> hdr;
    if (!read_all(fd, hdr.data(), hdr.size())) return false;
    out.header = decode_header(hdr);
    out.payload.resize(out.header.payload_length);
    if (!out.payload.empty() && !read_all(fd, out.payload.data(), out.payload.size()))
        throw NetError("connection closed in the middle of a frame");
    return true;
}

inline Buffer hello_payload(std::uint64_t fingerprint, std::uint32_t host) {
    Buffer b;
    data::BufferWriter(b).put(fingerprint).put(host);
    return b;
}

} // namespace tcp_detail

/// Full-mesh tcp transport: one connection per peer host, one dispatcher
/// thread reading every socket.
class TcpTransport : public Transport
{
public:
    /// Blocks until connections to all h-1 peers are established.
    static void connect(HostNet& host, std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
        auto t = std::unique_ptr<TcpTransport>(new TcpTransport(host));
        t->establish(timeout);
        t->start_dispatcher();
        host.set_transport(std::move(t));
    }

    ~TcpTransport() override {
        abort();
        if (dispatcher_.joinable()) dispatcher_.join();
    }

    void send_frame(std::size_t dest_host, const FrameHeader& header,
                    std::span<const std::byte> payload) override {
        Peer& p = *peers_.at(dest_host);
        std::lock_guard lock(p.write_mutex);
        if (!p.fd) throw NetError("connection to host " + std::to_string(dest_host) + " is closed");
        try {
            tcp_detail::send_frame_on(p.fd.get(), header, payload);
        }
        catch (const NetError& e) {
            throw NetError("connection to host " + std::to_string(dest_host) + " lost: " + e.what());
        }
    }

    void shutdown() override {
        shutting_down_ = true;
        FrameHeader bye;
        bye.channel_id = tcp_detail::kControlChannel;
        bye.sender_worker = static_cast<std::uint32_t>(host_.host_id());
        bye.flags = kFlagEndOfChannel;
        for (std::size_t h = 0; h < peers_.size(); ++h) {
            if (!peers_[h]) continue;
            std::lock_guard lock(peers_[h]->write_mutex);
            try {
                if (peers_[h]->fd) tcp_detail::send_frame_on(peers_[h]->fd.get(), bye, {});
            }
            catch (const NetError&) { }
        }
        {
            std::unique_lock lock(state_mutex_);
            state_cv_.wait_for(lock, std::chrono::seconds(10),
                               [&] { return peers_done_ == num_peers_; });
        }
        stop_dispatcher();
    }

    /// Number of live peer connections (h-1 once connected).
    std::size_t num_connections() const {
        std::size_t n = 0;
        for (const auto& p : peers_)
            if (p && p->fd) ++n;
        return n;
    }

    void abort() override {
        shutting_down_ = true;
        for (auto& p : peers_)
            if (p && p->fd) ::shutdown(p->fd.get(), SHUT_RDWR);
        stop_dispatcher();
    }

private:
    struct Peer
    {
        tcp_detail::Fd fd;
        std::mutex write_mutex;
        bool said_bye = false;
        bool closed = false;
    };

    explicit TcpTransport(HostNet& host) : host_(host) {
        peers_.resize(host.config().hosts);
    }

    void establish(std::chrono::milliseconds timeout) {
        using namespace tcp_detail;
        const auto& cfg = host_.config();
        cfg.validate(Backend::tcp);
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        const std::size_t me = cfg.my_host;
        num_peers_ = cfg.hosts - 1;
        if (cfg.hosts == 1) return;

        Fd listener;
        if (me + 1 < cfg.hosts) listener = listen_on(parse_address(cfg.endpoints[me]));

        for (std::size_t j = 0; j < me; ++j) {
            Fd fd = connect_to(j, parse_address(cfg.endpoints[j]), deadline);
            Buffer hello = hello_payload(cfg.fingerprint(), static_cast<std::uint32_t>(me));
            FrameHeader h;
            h.channel_id = kControlChannel;
            h.sender_worker = static_cast<std::uint32_t>(me);
            h.payload_length = static_cast<std::uint32_t>(hello.size());
            send_frame_on(fd.get(), h, hello);
            MessageFrame reply;
            wait_readable(fd.get(), deadline, "handshake with host " + std::to_string(j));
            if (!recv_frame_on(fd.get(), reply))
                throw ProtocolError("host " + std::to_string(j) + " closed during handshake");
            check_hello(reply, j);
            add_peer(j, std::move(fd));
        }

        for (std::size_t accepted = 0; accepted < cfg.hosts - 1 - me; ++accepted) {
            wait_readable(listener.get(), deadline, "accepting peers");
            Fd fd(::accept(listener.get(), nullptr, nullptr));
            if (!fd) throw NetError("accept failed: " + errno_text());
            wait_readable(fd.get(), deadline, "handshake");
            MessageFrame hello;
            if (!recv_frame_on(fd.get(), hello)) throw ProtocolError("peer closed during handshake");
            {
                data::BufferReader r(hello.payload);
                auto fp = r.get<std::uint64_t>();
                auto peer = r.get<std::uint32_t>();
                if (peer <= me || peer >= cfg.hosts)
                    throw ProtocolError("unexpected peer host id " + std::to_string(peer));
                if (fp != cfg.fingerprint())
                    throw ProtocolError("cluster config mismatch with host " + std::to_string(peer));
                Buffer reply = hello_payload(cfg.fingerprint(), static_cast<std::uint32_t>(me));
                FrameHeader h;
                h.channel_id = kControlChannel;
                h.sender_worker = static_cast<std::uint32_t>(me);
                h.payload_length = static_cast<std::uint32_t>(reply.size());
                send_frame_on(fd.get(), h, reply);
                add_peer(peer, std::move(fd));
            }
        }
    }

    void check_hello(const MessageFrame& f, std::size_t expected_host) {
        data::BufferReader r(f.payload);
        auto fp = r.get<std::uint64_t>();
        auto peer = r.get<std::uint32_t>();
        if (f.header.channel_id != tcp_detail::kControlChannel || peer != expected_host)
            throw ProtocolError("unexpected handshake from host " + std::to_string(peer));
        if (fp != host_.config().fingerprint())
            throw ProtocolError("cluster config mismatch with host " + std::to_string(expected_host));
    }

    void add_peer(std::size_t h, tcp_detail::Fd fd) {
        int one = 1;
        ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        peers_[h] = std::make_unique<Peer>();
        peers_[h]->fd = std::move(fd);
    }

    static tcp_detail::Fd listen_on(const tcp_detail::Address& a) {
        using namespace tcp_detail;
        addrinfo* res = resolve(a, true);
        Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
        int one = 1;
        ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        int rc = ::bind(fd.get(), res->ai_addr, res->ai_addrlen);
        ::freeaddrinfo(res);
        if (rc != 0) throw NetError("cannot bind " + a.host + ":" + a.port + ": " + errno_text());
        if (::listen(fd.get(), 128) != 0) throw NetError("listen failed: " + errno_text());
        return fd;
    }

    static tcp_detail::Fd connect_to(std::size_t host, const tcp_detail::Address& a,
                                     std::chrono::steady_clock::time_point deadline) {
        using namespace tcp_detail;
        for (;;) {
            addrinfo* res = resolve(a, false);
            Fd fd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
            int rc = ::connect(fd.get(), res->ai_addr, res->ai_addrlen);
            ::freeaddrinfo(res);
            if (rc == 0) return fd;
            if (std::chrono::steady_clock::now() >= deadline)
                throw NetError("timeout connecting to host " + std::to_string(host) + " at " +
                               a.host + ":" + a.port + " (" + errno_text() + ")");
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }

    static void wait_readable(int fd, std::chrono::steady_clock::time_point deadline,
                              const std::string& what) {
        for (;;) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw NetError("timeout while " + what);
            pollfd p{ fd, POLLIN, 0 };
            int rc = ::poll(&p, 1, static_cast<int>(left.count()));
            if (rc > 0) return;
            if (rc < 0 && errno != EINTR) throw NetError("poll failed: " + tcp_detail::errno_text());
        }
    }

    void start_dispatcher() {
        if (num_peers_ == 0) return;
        if (::pipe(wake_pipe_) != 0) throw NetError("pipe failed: " + tcp_detail::errno_text());
        dispatcher_ = std::thread([this] { dispatch_loop(); });
    }

    void stop_dispatcher() {
        bool expected = false;
        if (!stopping_.compare_exchange_strong(expected, true)) return;
        if (wake_pipe_[1] >= 0) {
            char c = 0;
            [[maybe_unused]] auto n = ::write(wake_pipe_[1], &c, 1);
        }
        if (dispatcher_.joinable() && std::this_thread::get_id() != dispatcher_.get_id())
            dispatcher_.join();
        for (auto& p : peers_)
            if (p) {
                std::lock_guard lock(p->write_mutex);
                p->fd.reset();
            }
        for (int& fd : wake_pipe_)
            if (fd >= 0) {
                ::close(fd);
                fd = -1;
            }
    }

    void dispatch_loop() {
        std::vector<pollfd> fds;
        std::vector<std::size_t> owner;
        MessageFrame frame;
        for (;;) {
            fds.clear();
            owner.clear();
            fds.push_back({ wake_pipe_[0], POLLIN, 0 });
            owner.push_back(SIZE_MAX);
            for (std::size_t h = 0; h < peers_.size(); ++h)
                if (peers_[h] && !peers_[h]->closed) {
                    fds.push_back({ peers_[h]->fd.get(), POLLIN, 0 });
                    owner.push_back(h);
                }
            int rc = ::poll(fds.data(), fds.size(), -1);
            if (rc < 0) {
                if (errno == EINTR) continue;
                host_.abort("poll failed: " + tcp_detail::errno_text());
                return;
            }
            if (fds[0].revents) return;
            for (std::size_t i = 1; i < fds.size(); ++i) {
                if (!fds[i].revents) continue;
                Peer& peer = *peers_[owner[i]];
                try {
                    if (!tcp_detail::recv_frame_on(peer.fd.get(), frame)) {
                        if (!peer_closed(owner[i], peer)) return;
                        continue;
                    }
                    if (frame.header.channel_id == tcp_detail::kControlChannel) {
                        peer.said_bye = true;
                        mark_done();
                        continue;
                    }
                    host_.deliver(frame.header, std::move(frame.payload));
                }
                catch (const Error& e) {
                    if (shutting_down_ && peer.said_bye) {
                        peer.closed = true;
                        continue;
                    }
                    host_.abort("host " + std::to_string(owner[i]) + ": " + e.what());
                    return;
                }
            }
        }
    }

    /// Returns false when the loss aborted the host.
    bool peer_closed(std::size_t h, Peer& peer) {
        peer.closed = true;
        if (peer.said_bye) return true;
        if (!shutting_down_) {
            host_.abort("connection to host " + std::to_string(h) + " lost");
            return false;
        }
        mark_done();
        return true;
    }

    void mark_done() {
        std::lock_guard lock(state_mutex_);
        ++peers_done_;
        state_cv_.notify_all();
    }

    HostNet& host_;
    std::vector<std::unique_ptr<Peer>> peers_;
    std::size_t num_peers_ = 0;
    std::thread dispatcher_;
    int wake_pipe_[2] = { -1, -1 };
    std::atomic<bool> stopping_{ false };
    std::atomic<bool> shutting_down_{ false };
    std::mutex state_mutex_;
    std::condition_variable state_cv_;
    std::size_t peers_done_ = 0;
};

} // namespace thrillette::net
