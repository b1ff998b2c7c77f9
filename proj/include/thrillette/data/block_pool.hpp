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

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace thrillette::data {

class BlockPool;

/// Raw buffer owned by a BlockPool. Its bytes may live in RAM or in a swap
/// file; they can only be accessed through a PinnedByteBlock.
class ByteBlock
{
public:
    ByteBlock(const ByteBlock&) = delete;
    ByteBlock& operator=(const ByteBlock&) = delete;

    std::uint64_t id() const { return id_; }
    std::size_t size() const { return size_; }
    BlockPool& pool() const { return *pool_; }

private:
    friend class BlockPool;
    friend class PinnedByteBlock;
    ByteBlock(BlockPool* pool, std::uint64_t id, std::size_t size)
        : pool_(pool), id_(id), size_(size) { }

    BlockPool* pool_;
    std::uint64_t id_;
    std::size_t size_;
    std::byte* data() { return raw_ ? raw_.get() : vec_.data(); }
    void drop_bytes() {
        raw_.reset();
        Buffer().swap(vec_);
    }

    Buffer vec_;
    std::unique_ptr<std::byte[]> raw_;
    bool in_ram_ = false;
    bool on_disk_ = false;
    std::size_t pins_ = 0;
    bool in_lru_ = false;
    std::list<ByteBlock*>::iterator lru_pos_;
};

using ByteBlockPtr = std::shared_ptr<ByteBlock>;

/// Holds a pin on a ByteBlock: its bytes stay resident while this lives.
class PinnedByteBlock
{
public:
    PinnedByteBlock() = default;
    PinnedByteBlock(const PinnedByteBlock& o);
    PinnedByteBlock(PinnedByteBlock&& o) noexcept = default;
    PinnedByteBlock& operator=(PinnedByteBlock o) noexcept {
        std::swap(block_, o.block_);
        std::swap(data_, o.data_);
        return *this;
    }
    ~PinnedByteBlock();

    const ByteBlockPtr& block() const { return block_; }
    std::byte* data() const { return data_; }
    std::size_t size() const { return block_ ? block_->size() : 0; }
    explicit operator bool() const { return block_ != nullptr; }
    void reset() {
        PinnedByteBlock empty;
        swap_into(empty);
    }

private:
    friend class BlockPool;
    PinnedByteBlock(ByteBlockPtr b, std::byte* data) : block_(std::move(b)), data_(data) { }
    void swap_into(PinnedByteBlock& o) noexcept {
        std::swap(block_, o.block_);
        std::swap(data_, o.data_);
    }

    ByteBlockPtr block_;
    std::byte* data_ = nullptr;
};

struct PoolStats
{
    std::size_t memory_limit = 0;
    std::size_t bytes_in_ram = 0;
    std::size_t bytes_on_disk = 0;
    std::size_t bytes_pinned = 0;
    std::size_t peak_bytes_in_ram = 0;
    /// total bytes ever accounted by allocate/adopt
    std::uint64_t bytes_allocated = 0;
    /// bytes of blocks destroyed after their last reference dropped
    std::uint64_t bytes_released = 0;
    std::uint64_t blocks_allocated = 0;
    std::uint64_t blocks_live = 0;
    std::uint64_t evictions = 0;
    std::uint64_t restores = 0;
};

/*
 * Host-wide store for all ByteBlocks. Tracks resident bytes against a memory
 * limit and swaps least-recently-used unpinned blocks out to
 * <swap_dir>/block-<id>.swp when the limit would be exceeded. A pinned
 * block is never evicted, so the limit can be overshot while every resident
 * block is pinned. All entry points are thread-safe.
 */
class BlockPool
{
public:
    static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

    explicit BlockPool(std::size_t memory_limit = kUnlimited, std::filesystem::path swap_dir = {})
        : memory_limit_(memory_limit), swap_dir_(std::move(swap_dir)) {
        if (swap_dir_.empty()) {
            static std::atomic<unsigned> instance{ 0 };
            swap_dir_ = std::filesystem::temp_directory_path() /
                        ("thrillette-" + std::to_string(::getpid()) + "-" +
                         std::to_string(instance++));
            owns_swap_dir_ = true;
        }
    }

    BlockPool(const BlockPool&) = delete;
    BlockPool& operator=(const BlockPool&) = delete;

    ~BlockPool() {
        {
            std::lock_guard lock(io_mutex_);
            io_stop_ = true;
        }
        io_cv_.notify_all();
        if (io_thread_.joinable()) io_thread_.join();
        if (owns_swap_dir_) {
            std::error_code ec;
            std::filesystem::remove_all(swap_dir_, ec);
        }
    }

    std::size_t memory_limit() const { return memory_limit_; }
    const std::filesystem::path& swap_dir() const { return swap_dir_; }

    void set_memory_limit(std::size_t limit) {
        std::lock_guard lock(mutex_);
        memory_limit_ = limit;
        make_room(0);
    }

    /// New uninitialized block, returned pinned.
    PinnedByteBlock allocate(std::size_t size) {
        if (size == 0) throw ContractError("zero-sized block");
        std::lock_guard lock(mutex_);
        make_room(size);
        ByteBlockPtr b = create(size);
        b->raw_.reset(new std::byte[size]);
        b->in_ram_ = true;
        account_new(size);
        b->pins_ = 1;
        bytes_pinned_ += size;
        return PinnedByteBlock(b, b->data());
    }

    /// Cuts a pinned, exclusively written block down to its first `size`
    /// bytes. The released tail counts as released memory.
    void shrink(PinnedByteBlock& pinned, std::size_t size) {
        ByteBlock* b = pinned.block_.get();
        if (size == 0 || size >= b->size_) return;
        std::unique_ptr<std::byte[]> fresh(new std::byte[size]);
        std::memcpy(fresh.get(), b->data(), size);
        std::lock_guard lock(mutex_);
        const std::size_t cut = b->size_ - size;
        b->drop_bytes();
        b->raw_ = std::move(fresh);
        b->size_ = size;
        bytes_in_ram_ -= cut;
        bytes_pinned_ -= cut;
        bytes_released_ += cut;
        pinned.data_ = b->data();
    }

    /// Turns an existing buffer into an unpinned pool block without copying.
    ByteBlockPtr adopt(Buffer&& bytes) {
        std::lock_guard lock(mutex_);
        const std::size_t size = bytes.size();
        make_room(size);
        ByteBlockPtr b = create(size);
        b->vec_ = std::move(bytes);
        b->in_ram_ = true;
        account_new(size);
        lru_insert(b.get());
        return b;
    }

    /// Pins `b`, reading it back from its swap file if evicted.
    PinnedByteBlock pin(const ByteBlockPtr& b) {
        if (!b) throw ContractError("pin of null block");
        if (b->pool_ != this) throw ContractError("block belongs to a different pool");
        std::lock_guard lock(mutex_);
        if (!b->in_ram_) restore(b.get());
        if (b->pins_++ == 0) {
            lru_erase(b.get());
            bytes_pinned_ += b->size_;
        }
        return PinnedByteBlock(b, b->data());
    }

    /// Requests a pin ahead of need; the I/O thread restores swapped blocks.
    std::future<PinnedByteBlock> pin_async(ByteBlockPtr b) {
        {
            std::lock_guard lock(mutex_);
            if (b && b->pool_ == this && b->in_ram_) {
                std::promise<PinnedByteBlock> ready;
                if (b->pins_++ == 0) {
                    lru_erase(b.get());
                    bytes_pinned_ += b->size_;
                }
                ready.set_value(PinnedByteBlock(b, b->data()));
                return ready.get_future();
            }
        }
        auto task = std::make_shared<std::packaged_task<PinnedByteBlock()>>(
            [this, b = std::move(b)]() mutable {
                // drop the reference before the future becomes ready
                ByteBlockPtr local = std::move(b);
                return pin(local);
            });
        auto fut = task->get_future();
        {
            std::lock_guard lock(io_mutex_);
            if (!io_thread_.joinable()) io_thread_ = std::thread([this] { io_loop(); });
            io_queue_.push_back([task] { (*task)(); });
        }
        io_cv_.notify_one();
        return fut;
    }

    /// Forces `b` out to disk if it is resident and unpinned.
    bool evict(const ByteBlockPtr& b) {
        std::lock_guard lock(mutex_);
        if (!b->in_ram_ || b->pins_ > 0) return false;
        evict_one(b.get());
        return true;
    }

    bool is_resident(const ByteBlockPtr& b) const {
        std::lock_guard lock(mutex_);
        return b->in_ram_;
    }

    PoolStats stats() const {
        std::lock_guard lock(mutex_);
        PoolStats s;
        s.memory_limit = memory_limit_;
        s.bytes_in_ram = bytes_in_ram_;
        s.bytes_on_disk = bytes_on_disk_;
        s.bytes_pinned = bytes_pinned_;
        s.peak_bytes_in_ram = peak_in_ram_;
        s.bytes_allocated = bytes_allocated_;
        s.bytes_released = bytes_released_;
        s.blocks_allocated = blocks_allocated_;
        s.blocks_live = blocks_live_;
        s.evictions = evictions_;
        s.restores = restores_;
        return s;
    }

    void reset_peak() {
        std::lock_guard lock(mutex_);
        peak_in_ram_ = bytes_in_ram_;
    }

    std::filesystem::path swap_path(std::uint64_t id) const {
        return swap_dir_ / ("block-" + std::to_string(id) + ".swp");
    }

private:
    friend class PinnedByteBlock;

    ByteBlockPtr create(std::size_t size) {
        auto* raw = new ByteBlock(this, next_id_++, size);
        return ByteBlockPtr(raw, [](ByteBlock* b) { b->pool_->destroy(b); });
    }

    void account_new(std::size_t size) {
        bytes_in_ram_ += size;
        peak_in_ram_ = std::max(peak_in_ram_, bytes_in_ram_);
        bytes_allocated_ += size;
        ++blocks_allocated_;
        ++blocks_live_;
    }

    void destroy(ByteBlock* b) {
        {
            std::lock_guard lock(mutex_);
            lru_erase(b);
            if (b->in_ram_) bytes_in_ram_ -= b->size_;
            if (b->on_disk_) {
                bytes_on_disk_ -= b->size_;
                std::error_code ec;
                std::filesystem::remove(swap_path(b->id_), ec);
            }
            bytes_released_ += b->size_;
            --blocks_live_;
        }
        delete b;
    }

    void unpin(ByteBlock* b) {
        std::lock_guard lock(mutex_);
        if (b->pins_ == 0) throw ContractError("unbalanced unpin");
        if (--b->pins_ == 0) {
            bytes_pinned_ -= b->size_;
            lru_insert(b);
            make_room(0);
        }
    }

    void lru_insert(ByteBlock* b) {
        if (b->in_lru_) return;
        lru_.push_back(b);
        b->lru_pos_ = std::prev(lru_.end());
        b->in_lru_ = true;
    }

    void lru_erase(ByteBlock* b) {
        if (!b->in_lru_) return;
        lru_.erase(b->lru_pos_);
        b->in_lru_ = false;
    }

    /// Evicts LRU unpinned blocks until `extra` more bytes fit under the limit.
    void make_room(std::size_t extra) {
        while (!lru_.empty() && over_limit(extra)) evict_one(lru_.front());
    }

    bool over_limit(std::size_t extra) const {
        return memory_limit_ != kUnlimited && bytes_in_ram_ + extra > memory_limit_;
    }

    void evict_one(ByteBlock* b) {
        if (!b->on_disk_) {
            std::error_code ec;
            std::filesystem::create_directories(swap_dir_, ec);
            auto path = swap_path(b->id_);
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(b->data()),
                      static_cast<std::streamsize>(b->size_));
            out.close();
            if (!out) throw IoError("cannot write swap file " + path.string());
            b->on_disk_ = true;
            bytes_on_disk_ += b->size_;
        }
        lru_erase(b);
        b->drop_bytes();
        b->in_ram_ = false;
        bytes_in_ram_ -= b->size_;
        ++evictions_;
    }

    void restore(ByteBlock* b) {
        make_room(b->size_);
        auto path = swap_path(b->id_);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("swap file vanished: " + path.string());
        b->raw_.reset(new std::byte[b->size_]);
        in.read(reinterpret_cast<char*>(b->data()), static_cast<std::streamsize>(b->size_));
        if (in.gcount() != static_cast<std::streamsize>(b->size_))
            throw IoError("short read from swap file " + path.string());
        in.close();
        std::error_code ec;
        std::filesystem::remove(path, ec);
        b->on_disk_ = false;
        bytes_on_disk_ -= b->size_;
        b->in_ram_ = true;
        bytes_in_ram_ += b->size_;
        peak_in_ram_ = std::max(peak_in_ram_, bytes_in_ram_);
        ++restores_;
    }

    void io_loop() {
        for (;;) {
            std::function<void()> job;
            {
                std::unique_lock lock(io_mutex_);
                io_cv_.wait(lock, [&] { return io_stop_ || !io_queue_.empty(); });
                if (io_queue_.empty()) return;
                job = std::move(io_queue_.front());
                io_queue_.pop_front();
            }
            job();
        }
    }

    mutable std::mutex mutex_;
    std::size_t memory_limit_;
    std::filesystem::path swap_dir_;
    bool owns_swap_dir_ = false;
    std::uint64_t next_id_ = 0;
    std::list<ByteBlock*> lru_;

    std::size_t bytes_in_ram_ = 0;
    std::size_t bytes_on_disk_ = 0;
    std::size_t bytes_pinned_ = 0;
    std::size_t peak_in_ram_ = 0;
    std::uint64_t bytes_allocated_ = 0;
    std::uint64_t bytes_released_ = 0;
    std::uint64_t blocks_allocated_ = 0;
    std::uint64_t blocks_live_ = 0;
    std::uint64_t evictions_ = 0;
    std::uint64_t restores_ = 0;

    std::mutex io_mutex_;
    std::condition_variable io_cv_;
    std::deque<std::function<void()>> io_queue_;
    std::thread io_thread_;
    bool io_stop_ = false;
};

inline PinnedByteBlock::PinnedByteBlock(const PinnedByteBlock& o) : block_(o.block_), data_(o.data_) {
    if (block_) {
        std::lock_guard lock(block_->pool_->mutex_);
        if (block_->pins_++ == 0) throw ContractError("copy of released pin");
    }
}

inline PinnedByteBlock::~PinnedByteBlock() {
    if (block_) block_->pool_->unpin(block_.get());
}

} // namespace thrillette::data
