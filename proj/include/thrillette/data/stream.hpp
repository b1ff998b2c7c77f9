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
#include <thrillette/data/block_reader.hpp>
#include <thrillette/data/block_writer.hpp>
#include <thrillette/data/file.hpp>
#include <thrillette/net/group.hpp>

#include <cstring>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace thrillette::data {

enum class StreamKind { cat, mix };

/*
 * One all-to-all channel between the p workers, used by exactly one
 * distributed operation. Every worker opens the same stream ids in the
 * same order. Sealed blocks travel as single messages: same-host peers get
 * a reference to the Block, remote peers a copy of its bytes prefixed by
 * two u32 fields (first-item offset relative to begin, number of items).
 */
class Stream
{
public:
    static constexpr std::size_t kRemotePrefix = 8;

    Stream(net::Group& group, BlockPool& pool, std::uint32_t id, StreamKind kind,
           std::size_t block_size = kDefaultBlockSize)
        : group_(&group), pool_(&pool), id_(id), kind_(kind), block_size_(block_size),
          closed_(group.num_workers(), false) { }

    Stream(const Stream&) = delete;
    Stream& operator=(const Stream&) = delete;

    ~Stream() {
        try {
            close();
        }
        catch (...) {
        }
    }

    std::uint32_t id() const { return id_; }
    StreamKind kind() const { return kind_; }
    std::size_t num_workers() const { return group_->num_workers(); }

    class Sink
    {
    public:
        Sink(Stream* s, std::size_t dest) : stream_(s), dest_(dest) { }
        void append(Block b) { stream_->send_block(dest_, b); }
        void close() { stream_->close_writer(dest_); }

    private:
        Stream* stream_;
        std::size_t dest_;
    };

    using Writer = BlockWriter<Sink>;

    /// One writer per destination worker.
    std::vector<Writer> writers() {
        if (writers_opened_) throw ContractError("stream writers opened twice");
        writers_opened_ = true;
        std::vector<Writer> out;
        out.reserve(num_workers());
        for (std::size_t d = 0; d < num_workers(); ++d)
            out.emplace_back(*pool_, Sink(this, d), block_size_);
        return out;
    }

    void send_block(std::size_t dest, const Block& b) {
        if (closed_.at(dest)) throw ContractError("send on closed stream writer");
        if (b.size() == 0) return;
        if (group_->is_local(dest)) {
            group_->send_local(dest, id_, std::make_shared<const Block>(b));
            return;
        }
        PinnedByteBlock pin = b.pin();
        Buffer msg(kRemotePrefix + b.size());
        detail::store_le(msg.data(), static_cast<std::uint32_t>(b.first_item() - b.begin()));
        detail::store_le(msg.data() + 4, static_cast<std::uint32_t>(b.num_items()));
        std::memcpy(msg.data() + kRemotePrefix, pin.data() + b.begin(), b.size());
        group_->send(dest, id_, std::move(msg));
    }

    void close_writer(std::size_t dest) {
        if (closed_.at(dest)) return;
        closed_[dest] = true;
        group_->send_end(dest, id_);
    }

    /// Partitions `file` so worker w receives items [offsets[w], offsets[w+1]).
    /// Sends nothing if the offsets are not a nondecreasing cover of the file.
    template <typename T>
    void scatter(const File& file, const std::vector<std::size_t>& offsets) {
        const std::size_t p = num_workers();
        if (offsets.size() != p + 1)
            throw ContractError("scatter needs p+1 offsets, got " + std::to_string(offsets.size()));
        if (offsets.front() != 0 || offsets.back() != file.size())
            throw ContractError("scatter offsets must span [0, " + std::to_string(file.size()) + "]");
        for (std::size_t w = 0; w < p; ++w)
            if (offsets[w] > offsets[w + 1])
                throw ContractError("scatter offsets decrease at worker " + std::to_string(w));
        if (writers_opened_) throw ContractError("scatter on a stream with open writers");
        writers_opened_ = true;
        for (std::size_t w = 0; w < p; ++w) {
            for (const Block& b : file.range<T>(offsets[w], offsets[w + 1])) send_block(w, b);
            close_writer(w);
        }
    }

    /// Reads everything worker `src` sends, as blocks. Blocks until the
    /// next block or the end marker arrives.
    class SenderSource
    {
    public:
        SenderSource(Stream* s, std::size_t src) : stream_(s), src_(src) { }
        std::optional<Block> next(bool) {
            if (done_) return std::nullopt;
            net::Envelope e = stream_->group_->recv_envelope(src_, stream_->id_);
            if (e.end_of_channel) {
                done_ = true;
                return std::nullopt;
            }
            return stream_->to_block(std::move(e));
        }
        bool done() const { return done_; }

    private:
        Stream* stream_;
        std::size_t src_;
        bool done_ = false;
    };

    /// Items of worker 0, then worker 1, ... then worker p-1.
    class CatSource
    {
    public:
        explicit CatSource(Stream* s) : stream_(s) { }
        std::optional<Block> next(bool need) {
            while (cur_ < stream_->num_workers()) {
                if (!src_) src_.emplace(stream_, cur_);
                auto b = src_->next(need);
                if (b) return b;
                src_.reset();
                ++cur_;
                if (need) return std::nullopt;
            }
            return std::nullopt;
        }

    private:
        Stream* stream_;
        std::size_t cur_ = 0;
        std::optional<SenderSource> src_;
    };

    using CatReader = BlockReader<CatSource>;

    CatReader cat_reader() {
        open_reader(StreamKind::cat);
        return CatReader(CatSource(this));
    }

    /// Appends all received blocks to `out` in sender rank order, without
    /// deserializing.
    void receive_cat(File& out) {
        open_reader(StreamKind::cat);
        for (std::size_t w = 0; w < num_workers(); ++w) {
            SenderSource src(this, w);
            while (auto b = src.next(true)) out.append_block(std::move(*b));
        }
    }

    /*
     * Items in block arrival order. Each sender has its own reader so an
     * item that spans blocks is reassembled from that sender's next block.
     */
    class MixReader
    {
    public:
        explicit MixReader(Stream* s) : stream_(s) {
            for (std::size_t w = 0; w < s->num_workers(); ++w)
                readers_.emplace_back(Pending(s, w));
        }

        bool has_next() {
            for (;;) {
                if (cur_ && readers_[*cur_].has_next()) return true;
                if (finished_ == readers_.size()) return false;
                net::Envelope e = stream_->group_->recv_any(stream_->id_);
                std::size_t src = e.src;
                if (e.end_of_channel) {
                    ++finished_;
                    continue;
                }
                readers_[src].source().queue.push_back(stream_->to_block(std::move(e)));
                cur_ = src;
            }
        }

        template <typename T>
        T next() {
            if (!has_next()) throw ContractError("read past the end of a stream");
            return readers_[*cur_].template next<T>();
        }

        /// Sender of the item returned by the last next().
        std::size_t last_source() const { return cur_.value_or(0); }

    private:
        struct Pending
        {
            Pending(Stream* s, std::size_t src) : stream(s), src(src) { }
            std::optional<Block> next(bool need) {
                if (!queue.empty()) {
                    Block b = std::move(queue.front());
                    queue.pop_front();
                    return b;
                }
                if (!need) return std::nullopt;
                // the rest of a spanning item comes in this sender's next block
                net::Envelope e = stream->group_->recv_envelope(src, stream->id_);
                if (e.end_of_channel) return std::nullopt;
                return stream->to_block(std::move(e));
            }
            Stream* stream;
            std::size_t src;
            std::deque<Block> queue;
        };

        Stream* stream_;
        std::vector<BlockReader<Pending>> readers_;
        std::optional<std::size_t> cur_;
        std::size_t finished_ = 0;
    };

    MixReader mix_reader() {
        open_reader(StreamKind::mix);
        return MixReader(this);
    }

    /// Closes all writers that are still open and releases the channel.
    void close() {
        if (done_) return;
        done_ = true;
        for (std::size_t d = 0; d < closed_.size(); ++d)
            if (!closed_[d]) close_writer(d);
        if (reader_opened_) group_->release_channel(id_);
    }

private:
    void open_reader(StreamKind kind) {
        if (kind != kind_) throw ContractError("stream reader kind does not match stream kind");
        if (reader_opened_) throw ContractError("stream reader opened twice");
        reader_opened_ = true;
    }

    Block to_block(net::Envelope e) {
        if (e.attachment) return *std::static_pointer_cast<const Block>(e.attachment);
        if (e.bytes.size() < kRemotePrefix) throw ProtocolError("stream block without prefix");
        auto first = detail::load_le<std::uint32_t>(e.bytes.data());
        auto n = detail::load_le<std::uint32_t>(e.bytes.data() + 4);
        std::size_t size = e.bytes.size();
        if (kRemotePrefix + first > size) throw ProtocolError("stream block first_item out of range");
        ByteBlockPtr bb = pool_->adopt(std::move(e.bytes));
        return Block(std::move(bb), kRemotePrefix, size, kRemotePrefix + first, n);
    }

    net::Group* group_;
    BlockPool* pool_;
    std::uint32_t id_;
    StreamKind kind_;
    std::size_t block_size_;
    std::vector<bool> closed_;
    bool writers_opened_ = false;
    bool reader_opened_ = false;
    bool done_ = false;
};

} // namespace thrillette::data
