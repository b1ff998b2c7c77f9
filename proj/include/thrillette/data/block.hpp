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
#include <thrillette/data/block_pool.hpp>

#include <cstddef>
#include <span>
#include <string>

namespace thrillette::data {

inline constexpr std::size_t kDefaultBlockSize = std::size_t(2) << 20;

/*
 * A window into a ByteBlock holding serialized items back to back.
 *
 *   begin       first valid byte (may be the tail of an item that started
 *               in an earlier block)
 *   end         one past the last valid byte
 *   first_item  offset of the first item that starts in this block; equals
 *               end if none does
 *   num_items   number of items starting in [first_item, end)
 */
class Block
{
public:
    Block() = default;
    Block(ByteBlockPtr bytes, std::size_t begin, std::size_t end, std::size_t first_item,
          std::size_t num_items)
        : bytes_(std::move(bytes)), begin_(begin), end_(end), first_item_(first_item),
          num_items_(num_items) {
        if (!(begin_ <= first_item_ && first_item_ <= end_ && end_ <= capacity()))
            throw ContractError("block metadata out of order: begin=" + std::to_string(begin_) +
                                " first_item=" + std::to_string(first_item_) +
                                " end=" + std::to_string(end_) +
                                " capacity=" + std::to_string(capacity()));
        if (num_items_ > 0 && first_item_ == end_)
            throw ContractError("block claims items but first_item == end");
    }

    const ByteBlockPtr& byte_block() const { return bytes_; }
    std::size_t begin() const { return begin_; }
    std::size_t end() const { return end_; }
    std::size_t first_item() const { return first_item_; }
    std::size_t num_items() const { return num_items_; }
    std::size_t size() const { return end_ - begin_; }
    std::size_t capacity() const { return bytes_ ? bytes_->size() : 0; }
    bool valid() const { return bytes_ != nullptr; }

    PinnedByteBlock pin() const { return bytes_->pool().pin(bytes_); }

    void reset() { *this = Block(); }

private:
    ByteBlockPtr bytes_;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
    std::size_t first_item_ = 0;
    std::size_t num_items_ = 0;
};

} // namespace thrillette::data
