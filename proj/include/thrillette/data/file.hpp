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
#include <thrillette/data/block_reader.hpp>
#include <thrillette/data/block_writer.hpp>

#include <algorithm>
#include <deque>
#include <future>
#include <memory>
#include <optional>
#include <vector>

namespace thrillette::data {

inline constexpr std::size_t kPrefetchBlocks = 2;

/// Ordered sequence of Blocks readable as one item stream.
class File
{
public:
    File() = default;
    explicit File(BlockPool& pool, std::size_t block_size = kDefaultBlockSize)
        : pool_(&pool), block_size_(block_size) { }

    class Sink
    {
    public:
        explicit Sink(File* f) : file_(f) { }
        void append(Block b) { file_->append_block(std::move(b)); }
        void close() { }

    private:
        File* file_;
    };

    using Writer = BlockWriter<Sink>;

    /// Reads whole blocks in order, pinning up to kPrefetchBlocks ahead.
    /// In consume mode each block reference is dropped as soon as it is
    /// handed to the reader.
    class Source
    {
    public:
        Source(File* f, std::size_t first, bool consume, std::vector<Block> view = {})
            : file_(f), index_(first), consume_(consume), view_(std::move(view)),
              use_view_(!view_.empty() || f == nullptr) { }

        std::optional<Block> next(bool) {
            prefetch();
            if (index_ >= count()) return std::nullopt;
            Block b = std::move(slot(index_));
            if (!consume_) slot(index_) = b;
            ++index_;
            held_.reset();
            if (!ahead_.empty()) {
                // taking the pin out leaves nothing behind in the I/O queue
                held_ = ahead_.front().get();
                ahead_.pop_front();
            }
            prefetch();
            return b;
        }

    private:
        std::size_t count() const { return use_view_ ? view_.size() : file_->blocks_.size(); }
        Block& slot(std::size_t i) { return use_view_ ? view_[i] : file_->blocks_[i]; }

        void prefetch() {
            while (ahead_.size() < kPrefetchBlocks && index_ + ahead_.size() < count()) {
                Block& b = slot(index_ + ahead_.size());
                ahead_.push_back(b.byte_block()->pool().pin_async(b.byte_block()));
            }
        }

        File* file_;
        std::size_t index_;
        bool consume_;
        std::vector<Block> view_;
        bool use_view_;
        std::deque<std::future<PinnedByteBlock>> ahead_;
        // keeps the block just handed out pinned until the reader pins it
        std::optional<PinnedByteBlock> held_;
    };

    using Reader = BlockReader<Source>;

    BlockPool& pool() const {
        if (!pool_) throw ContractError("File without pool");
        return *pool_;
    }
    std::size_t block_size() const { return block_size_; }

    Writer writer() { return Writer(pool(), Sink(this), block_size_); }

    /// Reader over all items. A consuming reader leaves the File empty.
    Reader reader(bool consume = false) {
        if (consume) {
            auto blocks = std::move(blocks_);
            clear();
            return Reader(Source(nullptr, 0, true, std::move(blocks)));
        }
        return Reader(Source(this, 0, false));
    }

    /// Reader starting at item `index`.
    template <typename T>
    Reader reader_at(std::size_t index) {
        return Reader(Source(nullptr, 0, false, range<T>(index, size())));
    }

    void append_block(Block b) {
        if (!b.valid() || b.size() == 0) return;
        items_before_.push_back(total_items_);
        total_items_ += b.num_items();
        total_bytes_ += b.size();
        blocks_.push_back(std::move(b));
    }

    std::size_t size() const { return total_items_; }
    bool empty() const { return total_items_ == 0; }
    std::size_t num_blocks() const { return blocks_.size(); }
    const Block& block(std::size_t i) const { return blocks_.at(i); }
    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t total_bytes() const { return total_bytes_; }

    void clear() {
        blocks_.clear();
        items_before_.clear();
        total_items_ = 0;
        total_bytes_ = 0;
    }

    /// Block views covering exactly items [from, to).
    template <typename T>
    std::vector<Block> range(std::size_t from, std::size_t to) const {
        if (from > to || to > total_items_)
            throw ContractError("item range [" + std::to_string(from) + "," + std::to_string(to) +
                                ") outside file of " + std::to_string(total_items_) + " items");
        std::vector<Block> out;
        if (from == to) return out;
        auto [ia, oa] = locate<T>(from);
        std::size_t ib, ob;
        if (to == total_items_) {
            ib = blocks_.size() - 1;
            ob = blocks_.back().end();
        }
        else {
            std::tie(ib, ob) = locate<T>(to);
        }
        for (std::size_t i = ia; i <= ib; ++i) {
            const Block& b = blocks_[i];
            std::size_t begin = (i == ia) ? oa : b.begin();
            std::size_t end = (i == ib) ? ob : b.end();
            std::size_t lo = std::max(from, items_before_[i]);
            std::size_t hi = std::min(to, items_before_[i] + b.num_items());
            std::size_t n = hi > lo ? hi - lo : 0;
            std::size_t first = (i == ia) ? oa : (n ? b.first_item() : end);
            if (begin == end) continue;
            out.emplace_back(b.byte_block(), begin, end, first, n);
        }
        return out;
    }

    /// Block index and byte offset where item `index` starts.
    template <typename T>
    std::pair<std::size_t, std::size_t> locate(std::size_t index) const {
        auto it = std::upper_bound(items_before_.begin(), items_before_.end(), index);
        std::size_t i = static_cast<std::size_t>(it - items_before_.begin()) - 1;
        while (blocks_[i].num_items() == 0 || items_before_[i] + blocks_[i].num_items() <= index)
            ++i;
        const Block& b = blocks_[i];
        std::size_t k = index - items_before_[i];
        if (k == 0) return { i, b.first_item() };
        if constexpr (is_fixed_size_v<T>) {
            return { i, b.first_item() + k * fixed_size_v<T> };
        }
        else {
            PinnedByteBlock pin = b.pin();
            BufferReader r(std::span<const std::byte>(pin.data() + b.first_item(),
                                                      b.end() - b.first_item()));
            for (std::size_t j = 0; j < k; ++j) Serialization<T>::skip(r);
            return { i, b.first_item() + r.position() };
        }
    }

private:
    BlockPool* pool_ = nullptr;
    std::size_t block_size_ = kDefaultBlockSize;
    std::vector<Block> blocks_;
    std::vector<std::size_t> items_before_;
    std::size_t total_items_ = 0;
    std::size_t total_bytes_ = 0;
};

using FilePtr = std::shared_ptr<File>;

/// Convenience: all items of a File as a vector.
template <typename T>
std::vector<T> read_all(File& f) {
    std::vector<T> out;
    out.reserve(f.size());
    auto r = f.reader();
    while (r.has_next()) out.push_back(r.template next<T>());
    return out;
}

} // namespace thrillette::data
