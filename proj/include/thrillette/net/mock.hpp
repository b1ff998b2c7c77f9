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

#include <thrillette/net/host_network.hpp>

#include <memory>
#include <vector>

namespace thrillette::net {

/// In-process cluster of h hosts. Frames between hosts are encoded and
/// decoded exactly as on a socket, so byte counters and sequence checks
/// behave like the tcp backend.
class MockCluster
{
public:
    MockCluster(std::size_t hosts, std::size_t workers_per_host) {
        for (std::size_t h = 0; h < hosts; ++h) {
            ClusterConfig cfg;
            cfg.hosts = hosts;
            cfg.workers_per_host = workers_per_host;
            cfg.my_host = h;
            cfg.validate(Backend::mock);
            hosts_.push_back(std::make_unique<HostNet>(cfg));
        }
        for (std::size_t h = 0; h < hosts; ++h)
            hosts_[h]->set_transport(std::make_unique<Link>(*this));
    }

    std::size_t num_hosts() const { return hosts_.size(); }
    HostNet& host(std::size_t h) { return *hosts_.at(h); }

    void abort(const std::string& reason) {
        for (auto& h : hosts_) h->abort(reason);
    }

private:
    class Link : public Transport
    {
    public:
        explicit Link(MockCluster& cluster) : cluster_(cluster) { }

        void send_frame(std::size_t dest_host, const FrameHeader& header,
                        std::span<const std::byte> payload) override {
            MessageFrame f{ header, Buffer(payload.begin(), payload.end()) };
            Buffer wire = encode_frame(f);
            MessageFrame back = decode_frame(wire);
            cluster_.host(dest_host).deliver(back.header, std::move(back.payload));
        }

        void abort() override { }

    private:
        MockCluster& cluster_;
    };

    std::vector<std::unique_ptr<HostNet>> hosts_;
};

} // namespace thrillette::net
