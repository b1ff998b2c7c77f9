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
#include <thrillette/data/serialization.hpp>

#include <cstring>
#include <optional>
#include <utility>

namespace thrillette::data {

/*
 * Deserializes items from a sequence of blocks.
 *
 * Source must provide `std::optional<Block> next(bool need_bytes)`. The
 * flag is true when the reader is in the middle of an item and cannot
 * continue without another block; a source may then block, and returning
 * nullopt is a corruption error. With the flag false the reader is at an
 * item boundary and a non-blocking source may return nullopt to signal
 * "nothing more right now".
 */
template <typename Source>
class BlockReader
{
public:
    explicit BlockReader(Source source) : source_(std::move(source)) { }

    BlockReader(BlockReader&&) noexcept = default;
    BlockReader& operator=(BlockReader&&) noexcept = default;

    /// True if another item starts in a block already obtained or in one
    /// the source hands out now.
    bool has_next() {
        while (items_left_ == 0) {
            if (!advance(false)) return false;
        }
        return true;
    }

    template <typename T>
    T next() {
        if (!has_next()) throw ContractError("read past the last item");
        --items_left_;
        ++items_read_;
        return Serialization<T>::read(*this);
    }

    template <typename T>
    void skip() {
        if (!has_next()) throw ContractError("skip past the last item");
        --items_left_;
        ++items_read_;
        Serialization<T>::skip(*this);
    }

    void get_bytes(void* dst, std::size_t size) {
        auto* out = static_cast<std::byte*>(dst);
        while (size > 0) {
            if (pos_ == end_ && !advance(true))
                throw CorruptionError("stream ended inside an item");
            std::size_t n = std::min(size, end_ - pos_);
            std::memcpy(out, pin_.data() + pos_, n);
            pos_ += n, out += n, size -= n;
        }
    }

    void skip_bytes(std::size_t size) {
        while (size > 0) {
            if (pos_ == end_ && !advance(true))
                throw CorruptionError("stream ended inside an item");
            std::size_t n = std::min(size, end_ - pos_);
            pos_ += n, size -= n;
        }
    }

    std::size_t items_read() const { return items_read_; }
    Source& source() { return source_; }

    /// Drops the pin on the current block once all its bytes are read.
    void release_if_done() {
        if (pos_ == end_) pin_.reset();
    }

private:
    bool advance(bool need_bytes) {
        pin_.reset();
        std::optional<Block> b = source_.next(need_bytes);
        if (!b) {
            if (need_bytes) throw CorruptionError("stream ended inside an item");
            pos_ = end_ = 0;
            return false;
        }
        if (!need_bytes && b->num_items() > 0 && pos_ != end_)
            throw CorruptionError("trailing bytes after the last item of a block");
        pin_ = b->pin();
        // Starting at an item boundary skips any tail that belongs to an
        // item the reader never saw.
        pos_ = need_bytes ? b->begin() : b->first_item();
        end_ = b->end();
        items_left_ += b->num_items();
        return true;
    }

    Source source_;
    PinnedByteBlock pin_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::size_t items_left_ = 0;
    std::size_t items_read_ = 0;
};

} // namespace thrillette::data
