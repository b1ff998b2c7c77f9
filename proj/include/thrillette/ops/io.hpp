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
#include <thrillette/data/binary_format.hpp>
#include <thrillette/data/serialization.hpp>
#include <thrillette/engine/dia.hpp>
#include <thrillette/ops/generate.hpp>

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace thrillette {

namespace detail {

struct InputFile
{
    std::string path;
    std::uint64_t size = 0;
    std::uint64_t begin = 0; // offset in the concatenation of all files
};

/// Files matching `pattern`, or the regular files inside it when it names
/// a directory, in bytewise path order.
inline std::vector<InputFile> list_inputs(const std::string& pattern) {
    namespace fs = std::filesystem;
    std::vector<std::string> paths;
    std::error_code ec;
    if (fs::is_directory(pattern, ec)) {
        for (const auto& e : fs::directory_iterator(pattern, ec))
            if (e.is_regular_file()) paths.push_back(e.path().string());
        if (ec) throw IoError("cannot list " + pattern + ": " + ec.message());
    }
    else {
        glob_t g{};
        int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
        if (rc == 0)
            for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
        ::globfree(&g);
        if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("cannot expand " + pattern);
        if (paths.empty()) throw IoError("no input files match " + pattern);
    }
    std::sort(paths.begin(), paths.end());
    std::vector<InputFile> out;
    std::uint64_t off = 0;
    for (auto& p : paths) {
        auto sz = fs::file_size(p, ec);
        if (ec) throw IoError("cannot read " + p + ": " + ec.message());
        out.push_back({ std::move(p), sz, off });
        off += sz;
    }
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path);
    return out;
}

inline std::string part_path(const std::string& dir, std::size_t rank) {
    char name[32];
    std::snprintf(name, sizeof(name), "part-%05zu", rank);
    return (std::filesystem::path(dir) / name).string();
}

inline void make_output_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

/// Serialization reader over an input file stream with a byte limit.
class StreamByteReader
{
public:
    StreamByteReader(std::istream& in, std::uint64_t remaining, const std::string& path)
        : in_(in), remaining_(remaining), path_(path) { }

    bool at_end() const { return remaining_ == 0; }

    void get_bytes(void* dst, std::size_t n) {
        if (n > remaining_ || !in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
            throw CorruptionError("truncated item in " + path_);
        remaining_ -= n;
    }
    void skip_bytes(std::size_t n) {
        if (n > remaining_) throw CorruptionError("truncated item in " + path_);
        in_.seekg(static_cast<std::streamoff>(n), std::ios::cur);
        remaining_ -= n;
    }

private:
    std::istream& in_;
    std::uint64_t remaining_;
    const std::string& path_;
};

class StreamByteWriter
{
public:
    explicit StreamByteWriter(std::ostream& out) : out_(out) { }
    void put_bytes(const void* src, std::size_t n) { out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n)); }

private:
    std::ostream& out_;
};

/// Byte range [lo, hi) of worker w over `total` bytes.
inline std::pair<std::uint64_t, std::uint64_t> byte_range(std::uint64_t total, std::size_t p, std::size_t w) {
    auto at = [&](std::size_t v) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(total) * v) / p);
    };
    return { at(w), at(w + 1) };
}

} // namespace detail

/// Lines of the input files. A line belongs to the worker whose byte range
/// contains its first byte; the trailing '\n' is removed.
class ReadLinesNode : public DIANode<std::string>
{
public:
    ReadLinesNode(Context& ctx, const std::string& pattern)
        : DIANode<std::string>(ctx, "ReadLines", {}), files_(detail::list_inputs(pattern)) {
        std::uint64_t total = files_.empty() ? 0 : files_.back().begin + files_.back().size;
        std::tie(lo_, hi_) = detail::byte_range(total, ctx.num_workers(), ctx.my_rank());
    }

    void execute() override { }

protected:
    void run_push(bool) override {
        std::string line;
        for (const auto& f : files_) {
            const std::uint64_t fe = f.begin + f.size;
            if (f.size == 0 || fe <= lo_ || f.begin >= hi_) continue;
            auto in = detail::open_input(f.path);
            std::uint64_t pos = std::max(lo_, f.begin) - f.begin;
            const std::uint64_t stop = std::min(hi_, fe) - f.begin;
            if (pos > 0) {
                // advance to the first line starting at or after pos
                in.seekg(static_cast<std::streamoff>(pos - 1));
                char c;
                if (!in.get(c)) throw IoError("cannot read " + f.path);
                if (c != '\n') {
                    std::getline(in, line);
                    pos += line.size() + (in.eof() ? 0 : 1);
                }
            }
            while (pos < stop && std::getline(in, line)) {
                pos += line.size() + (in.eof() ? 0 : 1);
                emit(line);
            }
            if (in.bad()) throw IoError("cannot read " + f.path);
        }
    }

private:
    std::vector<detail::InputFile> files_;
    std::uint64_t lo_ = 0, hi_ = 0;
};

inline DIA<std::string> read_lines(Context& ctx, const std::string& pattern) {
    return DIA<std::string>(std::make_shared<ReadLinesNode>(ctx, pattern));
}

/*
 * Fixed-size items are split by item count over all files; variable-size
 * items are split by whole files, a file going to the worker whose byte
 * range contains its first byte.
 */
template <typename T>
class ReadBinaryNode : public DIANode<T>
{
public:
    ReadBinaryNode(Context& ctx, const std::string& pattern)
        : DIANode<T>(ctx, "ReadBinary", {}), files_(detail::list_inputs(pattern)) {
        constexpr std::uint32_t fixed = data::binary_fixed_size<T>();
        std::uint64_t items = 0, bytes = 0;
        for (auto& f : files_) {
            auto in = detail::open_input(f.path);
            std::byte head[data::kBinaryHeaderSize];
            if (!in.read(reinterpret_cast<char*>(head), sizeof(head)))
                throw CorruptionError("not a binary DIA file: " + f.path);
            auto h = data::decode_binary_header(head, f.path);
            if (h.fixed_size != fixed)
                throw CorruptionError("item size " + std::to_string(h.fixed_size) + " in " + f.path +
                                      " does not match the requested type (" + std::to_string(fixed) + ")");
            const std::uint64_t body = f.size - data::kBinaryHeaderSize;
            if (fixed && body % fixed) throw CorruptionError("truncated item in " + f.path);
            f.begin = fixed ? items : bytes;
            items += fixed ? body / fixed : 0;
            bytes += body;
        }
        const std::size_t p = ctx.num_workers(), me = ctx.my_rank();
        if constexpr (fixed > 0) {
            std::tie(lo_, hi_) = balanced_range(items, p, me);
        }
        else {
            std::tie(lo_, hi_) = detail::byte_range(bytes, p, me);
        }
    }

    void execute() override { }

protected:
    void run_push(bool) override {
        constexpr std::uint32_t fixed = data::binary_fixed_size<T>();
        for (const auto& f : files_) {
            const std::uint64_t body = f.size - data::kBinaryHeaderSize;
            std::uint64_t first = 0, count = 0;
            if constexpr (fixed > 0) {
                const std::uint64_t n = body / fixed, fe = f.begin + n;
                if (fe <= lo_ || f.begin >= hi_) continue;
                first = std::max(lo_, f.begin) - f.begin;
                count = std::min(hi_, fe) - f.begin - first;
            }
            else {
                if (f.begin < lo_ || f.begin >= hi_ || body == 0) continue;
            }
            auto in = detail::open_input(f.path);
            in.seekg(static_cast<std::streamoff>(data::kBinaryHeaderSize + first * fixed));
            detail::StreamByteReader r(in, fixed ? count * fixed : body, f.path);
            while (!r.at_end()) this->emit(data::Serialization<T>::read(r));
        }
    }

private:
    std::vector<detail::InputFile> files_;
    std::uint64_t lo_ = 0, hi_ = 0;
};

template <typename T>
DIA<T> read_binary(Context& ctx, const std::string& pattern) {
    return DIA<T>(std::make_shared<ReadBinaryNode<T>>(ctx, pattern));
}

/// Writes this worker's items to `<dir>/part-<rank>`; the result is the
/// global number of items written.
template <typename T, bool Binary>
class WriteNode : public ActionNode<std::size_t>
{
public:
    WriteNode(Context& ctx, DIABasePtr parent, std::string dir)
        : ActionNode<std::size_t>(ctx, Binary ? "WriteBinary" : "WriteLines", { std::move(parent) }),
          dir_(std::move(dir)) { }

    void start_pre_op(std::size_t) override {
        detail::make_output_dir(dir_);
        path_ = detail::part_path(dir_, context().my_rank());
        out_.emplace(detail::open_output(path_));
        if constexpr (Binary) {
            data::BinaryHeader h;
            h.fixed_size = data::binary_fixed_size<T>();
            auto bytes = data::encode_binary_header(h);
            out_->write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        }
    }

    void add(const T& x) {
        if constexpr (Binary) {
            detail::StreamByteWriter w(*out_);
            data::Serialization<T>::write(w, x);
        }
        else {
            out_->write(x.data(), static_cast<std::streamsize>(x.size()));
            out_->put('\n');
        }
        ++count_;
    }

    void stop_pre_op(std::size_t) override {
        out_->close();
        if (!*out_) throw IoError("cannot write " + path_);
        out_.reset();
    }

    void execute() override {
        set_result(context().net().all_reduce(count_, [](std::size_t a, std::size_t b) { return a + b; }));
    }

private:
    std::string dir_, path_;
    std::optional<std::ofstream> out_;
    std::size_t count_ = 0;
};

namespace detail {

template <bool Binary, typename T, typename S>
Future<std::size_t> make_write(const DIA<T, S>& in, const std::string& dir) {
    auto node = std::make_shared<WriteNode<T, Binary>>(in.context(), in.base(), dir);
    in.link(node.get(), 0, [n = node.get()](const T& x) { n->add(x); });
    return Future<std::size_t>(node);
}

} // namespace detail

/// One line per item; returns the number of lines written.
template <typename S>
std::size_t write_lines(const DIA<std::string, S>& in, const std::string& dir) {
    return detail::make_write<false>(in, dir).get();
}

template <typename S>
Future<std::size_t> write_lines_future(const DIA<std::string, S>& in, const std::string& dir) {
    return detail::make_write<false>(in, dir);
}

template <typename T, typename S>
std::size_t write_binary(const DIA<T, S>& in, const std::string& dir) {
    return detail::make_write<true>(in, dir).get();
}

template <typename T, typename S>
Future<std::size_t> write_binary_future(const DIA<T, S>& in, const std::string& dir) {
    return detail::make_write<true>(in, dir);
}

} // namespace thrillette
