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

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace thrillette::net {

/*
 * Wire framing between hosts. Header layout, 21 bytes:
 *
 *   0  magic          4 bytes  'T' 'H' 'R' 'I'
 *   4  channel_id     u32 le
 *   8  sender_worker  u32 le
 *  12  sequence       u32 le
 *  16  flags          u8       bit 0: end of channel
 *  17  payload_length u32 le
 *  21  payload
 *
 * The wire channel id carries the receiving host-local worker in its low
 * eight bits and the logical channel in the upper 24 bits.
 */
inline constexpr std::uint32_t kFrameMagic = 0x54485249;
inline constexpr std::size_t kFrameHeaderSize = 21;
inline constexpr std::uint8_t kFlagEndOfChannel = 0x01;
inline constexpr std::uint32_t kMaxFramePayload = 1u << 30;

struct FrameHeader
{
    std::uint32_t channel_id = 0;
    std::uint32_t sender_worker = 0;
    std::uint32_t sequence = 0;
    std::uint8_t flags = 0;
    std::uint32_t payload_length = 0;

    bool end_of_channel() const { return flags & kFlagEndOfChannel; }
    friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

struct MessageFrame
{
    FrameHeader header;
    Buffer payload;

    friend bool operator==(const MessageFrame&, const MessageFrame&) = default;
};

inline std::uint32_t make_wire_channel(std::uint32_t logical, std::size_t receiver_local) {
    if (logical >= (1u << 24) - 1) throw ContractError("channel id exhausted the 24-bit space");
    return (logical << 8) | static_cast<std::uint32_t>(receiver_local);
}
inline std::uint32_t wire_logical_channel(std::uint32_t wire) { return wire >> 8; }
inline std::size_t wire_receiver_local(std::uint32_t wire) { return wire & 0xFF; }

inline void encode_header(const FrameHeader& h, std::span<std::byte, kFrameHeaderSize> out) {
    using data::detail::store_le;
    out[0] = std::byte{ 'T' };
    out[1] = std::byte{ 'H' };
    out[2] = std::byte{ 'R' };
    out[3] = std::byte{ 'I' };
    store_le(out.data() + 4, h.channel_id);
    store_le(out.data() + 8, h.sender_worker);
    store_le(out.data() + 12, h.sequence);
    out[16] = std::byte{ h.flags };
    store_le(out.data() + 17, h.payload_length);
}

inline FrameHeader decode_header(std::span<const std::byte, kFrameHeaderSize> in) {
    using data::detail::load_le;
    if (in[0] != std::byte{ 'T' } || in[1] != std::byte{ 'H' } ||
        in[2] != std::byte{ 'R' } || in[3] != std::byte{ 'I' })
        throw ProtocolError("bad frame magic");
    FrameHeader h;
    h.channel_id = load_le<std::uint32_t>(in.data() + 4);
    h.sender_worker = load_le<std::uint32_t>(in.data() + 8);
    h.sequence = load_le<std::uint32_t>(in.data() + 12);
    h.flags = std::to_integer<std::uint8_t>(in[16]);
    h.payload_length = load_le<std::uint32_t>(in.data() + 17);
    if (h.payload_length > kMaxFramePayload) throw ProtocolError("frame payload too large");
    if (h.end_of_channel() && h.payload_length != 0)
        throw ProtocolError("end-of-channel frame carries payload");
    return h;
}

inline Buffer encode_frame(const MessageFrame& f) {
    Buffer out(kFrameHeaderSize + f.payload.size());
    FrameHeader h = f.header;
    h.payload_length = static_cast<std::uint32_t>(f.payload.size());
    encode_header(h, std::span<std::byte, kFrameHeaderSize>(out.data(), kFrameHeaderSize));
    std::copy(f.payload.begin(), f.payload.end(), out.begin() + kFrameHeaderSize);
    return out;
}

inline MessageFrame decode_frame(std::span<const std::byte> in) {
    if (in.size() < kFrameHeaderSize) throw ProtocolError("frame shorter than its header");
    MessageFrame f;
    f.header = decode_header(in.first<kFrameHeaderSize>());
    if (in.size() != kFrameHeaderSize + f.header.payload_length)
        throw ProtocolError("frame length does not match payload_length");
    f.payload.assign(in.begin() + kFrameHeaderSize, in.end());
    return f;
}

} // namespace thrillette::net
