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

#include <thrillette/data/block.hpp>
#include <thrillette/data/serialization.hpp>

#include <cstring>
#include <utility>

namespace thrillette::data {

/*
 * Serializes items straight into pool blocks. A block is allocated only
 * when the first byte is written, sealed when full and handed to
 * `sink.append(Block)`. Items may span any number of blocks. close()
 * seals the partial last block and calls `sink.close()`.
 */
template <typename Sink>
class BlockWriter
{
public:
    BlockWriter(BlockPool& pool, Sink sink, std::size_t block_size = kDefaultBlockSize)
        : pool_(&pool), sink_(std::move(sink)), block_size_(block_size) {
        if (block_size_ == 0) throw ContractError("block size must be positive");
    }

    BlockWriter(BlockWriter&& o) noexcept
        : pool_(o.pool_), sink_(std::move(o.sink_)), block_size_(o.block_size_),
          cur_(std::move(o.cur_)), pos_(o.pos_), first_item_(o.first_item_),
          num_items_(o.num_items_), items_written_(o.items_written_), closed_(o.closed_) {
        o.closed_ = true;
    }
    BlockWriter& operator=(BlockWriter&&) = delete;
    BlockWriter(const BlockWriter&) = delete;

    ~BlockWriter() {
        if (!closed_) {
            try {
                close();
            }
            catch (...) {
            }
        }
    }

    template <typename T>
    BlockWriter& put(const T& item) {
        if (closed_) throw ContractError("write to closed BlockWriter");
        if (!cur_ || pos_ == block_size_) seal();
        if (num_items_ == 0) first_item_ = pos_;
        ++num_items_;
        ++items_written_;
        Serialization<T>::write(*this, item);
        return *this;
    }

    void put_bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const std::byte*>(data);
        while (size > 0) {
            if (!cur_ || pos_ == block_size_) seal();
            std::size_t n = std::min(size, block_size_ - pos_);
            std::memcpy(cur_.data() + pos_, p, n);
            pos_ += n, p += n, size -= n;
        }
    }

    /// Seals the current partial block, if any, without closing.
    void flush() {
        if (cur_ && pos_ > 0) emit();
        cur_.reset();
        pos_ = 0;
    }

    void close() {
        if (closed_) return;
        flush();
        closed_ = true;
        sink_.close();
    }

    std::size_t items_written() const { return items_written_; }
    Sink& sink() { return sink_; }

private:
    void seal() {
        if (cur_) emit();
        cur_ = pool_->allocate(block_size_);
        pos_ = 0;
        first_item_ = 0;
        num_items_ = 0;
    }

    void emit() {
        if (pos_ < cur_.size()) pool_->shrink(cur_, pos_);
        Block b(cur_.block(), 0, pos_, num_items_ ? first_item_ : pos_, num_items_);
        cur_.reset();
        num_items_ = 0;
        sink_.append(std::move(b));
    }

    BlockPool* pool_;
    Sink sink_;
    std::size_t block_size_;
    PinnedByteBlock cur_;
    std::size_t pos_ = 0;
    std::size_t first_item_ = 0;
    std::size_t num_items_ = 0;
    std::size_t items_written_ = 0;
    bool closed_ = false;
};

} // namespace thrillette::data
