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

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace thrillette::data {

/*
 * Header of binary DIA files, 16 bytes, little-endian:
 *   magic 'D' 'I' 'A' 'B', format version u32, fixed item size u32
 *   (0 = variable-length items), reserved u32.
 */
inline constexpr std::uint32_t kBinaryMagic = 0x44494142;
inline constexpr std::uint32_t kBinaryVersion = 1;
inline constexpr std::size_t kBinaryHeaderSize = 16;

struct BinaryHeader
{
    std::uint32_t version = kBinaryVersion;
    std::uint32_t fixed_size = 0;
    std::uint32_t reserved = 0;
};

inline std::array<std::byte, kBinaryHeaderSize> encode_binary_header(const BinaryHeader& h) {
    std::array<std::byte, kBinaryHeaderSize> out{};
    out[0] = std::byte{ 'D' };
    out[1] = std::byte{ 'I' };
    out[2] = std::byte{ 'A' };
    out[3] = std::byte{ 'B' };
    detail::store_le(out.data() + 4, h.version);
    detail::store_le(out.data() + 8, h.fixed_size);
    detail::store_le(out.data() + 12, h.reserved);
    return out;
}

inline BinaryHeader decode_binary_header(const std::byte* in, const std::string& path) {
    if (in[0] != std::byte{ 'D' } || in[1] != std::byte{ 'I' } || in[2] != std::byte{ 'A' } ||
        in[3] != std::byte{ 'B' })
        throw CorruptionError("not a binary DIA file: " + path);
    BinaryHeader h;
    h.version = detail::load_le<std::uint32_t>(in + 4);
    h.fixed_size = detail::load_le<std::uint32_t>(in + 8);
    h.reserved = detail::load_le<std::uint32_t>(in + 12);
    if (h.version != kBinaryVersion)
        throw CorruptionError("unsupported binary DIA version " + std::to_string(h.version) +
                              " in " + path);
    return h;
}

template <typename T>
constexpr std::uint32_t binary_fixed_size() {
    if constexpr (is_fixed_size_v<T>) return static_cast<std::uint32_t>(fixed_size_v<T>);
    else return 0;
}

} // namespace thrillette::data
