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

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

namespace thrillette {

using Buffer = std::vector<std::byte>;

namespace data {

/*
 * Item serialization.
 *
 * Fixed-length primitives are stored with zero overhead in little-endian
 * byte order, variable-length items carry an unsigned LEB128 length prefix,
 * and compounds are stored as the concatenation of their components.
 *
 * A Writer is anything with put_bytes(const void*, size_t); a Reader has
 * get_bytes(void*, size_t) and skip_bytes(size_t). Add support for a user
 * type by specializing Serialization<T>, or derive the specialization from
 * PodSerialization<T> for trivially copyable records.
 */
template <typename T, typename Enable = void>
struct Serialization;

template <typename T>
concept Serializable = requires { Serialization<std::remove_cvref_t<T>>::is_fixed_size; };

template <typename T>
inline constexpr bool is_fixed_size_v = Serialization<T>::is_fixed_size;

template <typename T>
inline constexpr std::size_t fixed_size_v = Serialization<T>::fixed_size;

template <typename Writer>
void put_varint(Writer& w, std::uint64_t v) {
    std::uint8_t buf[10];
    std::size_t n = 0;
    do {
        std::uint8_t byte = v & 0x7F;
        v >>= 7;
        if (v != 0) byte |= 0x80;
        buf[n++] = byte;
    } while (v != 0);
    w.put_bytes(buf, n);
}

template <typename Reader>
std::uint64_t get_varint(Reader& r) {
    std::uint64_t v = 0;
    for (unsigned shift = 0; shift < 64; shift += 7) {
        std::uint8_t byte;
        r.get_bytes(&byte, 1);
        v |= std::uint64_t(byte & 0x7F) << shift;
        if ((byte & 0x80) == 0) return v;
    }
    throw CorruptionError("varint longer than 10 bytes");
}

namespace detail {

template <typename T>
void store_le(void* dst, T value) {
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        std::memcpy(dst, &value, sizeof(T));
    }
    else {
        auto* src = reinterpret_cast<const unsigned char*>(&value);
        auto* out = static_cast<unsigned char*>(dst);
        for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = src[sizeof(T) - 1 - i];
    }
}

template <typename T>
T load_le(const void* src) {
    T value;
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        std::memcpy(&value, src, sizeof(T));
    }
    else {
        auto* in = static_cast<const unsigned char*>(src);
        auto* out = reinterpret_cast<unsigned char*>(&value);
        for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = in[sizeof(T) - 1 - i];
    }
    return value;
}

} // namespace detail

/// Arithmetic types and enums: raw little-endian bytes.
template <typename T>
struct Serialization<T, std::enable_if_t<std::is_arithmetic_v<T> || std::is_enum_v<T>>>
{
    static constexpr bool is_fixed_size = true;
    static constexpr std::size_t fixed_size = sizeof(T);

    template <typename Writer>
    static void write(Writer& w, const T& x) {
        unsigned char buf[sizeof(T)];
        detail::store_le(buf, x);
        w.put_bytes(buf, sizeof(T));
    }
    template <typename Reader>
    static T read(Reader& r) {
        unsigned char buf[sizeof(T)];
        r.get_bytes(buf, sizeof(T));
        return detail::load_le<T>(buf);
    }
    template <typename Reader>
    static void skip(Reader& r) { r.skip_bytes(sizeof(T)); }
};

/// Trivially copyable records stored as their object representation.
template <typename T>
struct PodSerialization
{
    static_assert(std::is_trivially_copyable_v<T>);
    static constexpr bool is_fixed_size = true;
    static constexpr std::size_t fixed_size = sizeof(T);

    template <typename Writer>
    static void write(Writer& w, const T& x) { w.put_bytes(&x, sizeof(T)); }
    template <typename Reader>
    static T read(Reader& r) {
        T x;
        r.get_bytes(&x, sizeof(T));
        return x;
    }
    template <typename Reader>
    static void skip(Reader& r) { r.skip_bytes(sizeof(T)); }
};

template <>
struct Serialization<std::string>
{
    static constexpr bool is_fixed_size = false;
    static constexpr std::size_t fixed_size = 0;

    template <typename Writer>
    static void write(Writer& w, const std::string& s) {
        put_varint(w, s.size());
        w.put_bytes(s.data(), s.size());
    }
    template <typename Reader>
    static std::string read(Reader& r) {
        std::string s(get_varint(r), '\0');
        r.get_bytes(s.data(), s.size());
        return s;
    }
    template <typename Reader>
    static void skip(Reader& r) { r.skip_bytes(get_varint(r)); }
};

template <typename A, typename B>
struct Serialization<std::pair<A, B>>
{
    using SA = Serialization<A>;
    using SB = Serialization<B>;
    static constexpr bool is_fixed_size = SA::is_fixed_size && SB::is_fixed_size;
    static constexpr std::size_t fixed_size = SA::fixed_size + SB::fixed_size;

    template <typename Writer>
    static void write(Writer& w, const std::pair<A, B>& x) {
        SA::write(w, x.first);
        SB::write(w, x.second);
    }
    template <typename Reader>
    static std::pair<A, B> read(Reader& r) {
        A a = SA::read(r);
        B b = SB::read(r);
        return { std::move(a), std::move(b) };
    }
    template <typename Reader>
    static void skip(Reader& r) {
        SA::skip(r);
        SB::skip(r);
    }
};

template <typename... Ts>
struct Serialization<std::tuple<Ts...>>
{
    static constexpr bool is_fixed_size = (Serialization<Ts>::is_fixed_size && ...);
    static constexpr std::size_t fixed_size = (std::size_t(0) + ... + Serialization<Ts>::fixed_size);

    template <typename Writer>
    static void write(Writer& w, const std::tuple<Ts...>& x) {
        std::apply([&](const auto&... e) { (Serialization<Ts>::write(w, e), ...); }, x);
    }
    template <typename Reader>
    static std::tuple<Ts...> read(Reader& r) {
        // braced init fixes left-to-right evaluation order
        return std::tuple<Ts...>{ Serialization<Ts>::read(r)... };
    }
    template <typename Reader>
    static void skip(Reader& r) { (Serialization<Ts>::skip(r), ...); }
};

template <typename T, std::size_t N>
struct Serialization<std::array<T, N>>
{
    using ST = Serialization<T>;
    static constexpr bool is_fixed_size = ST::is_fixed_size;
    static constexpr std::size_t fixed_size = N * ST::fixed_size;

    template <typename Writer>
    static void write(Writer& w, const std::array<T, N>& x) {
        if constexpr (std::is_arithmetic_v<T> && sizeof(T) == 1) {
            w.put_bytes(x.data(), N);
        }
        else {
            for (const auto& e : x) ST::write(w, e);
        }
    }
    template <typename Reader>
    static std::array<T, N> read(Reader& r) {
        std::array<T, N> x;
        if constexpr (std::is_arithmetic_v<T> && sizeof(T) == 1) {
            r.get_bytes(x.data(), N);
        }
        else {
            for (auto& e : x) e = ST::read(r);
        }
        return x;
    }
    template <typename Reader>
    static void skip(Reader& r) {
        if constexpr (ST::is_fixed_size) {
            r.skip_bytes(fixed_size);
        }
        else {
            for (std::size_t i = 0; i < N; ++i) ST::skip(r);
        }
    }
};

template <typename T>
struct Serialization<std::vector<T>>
{
    using ST = Serialization<T>;
    static constexpr bool is_fixed_size = false;
    static constexpr std::size_t fixed_size = 0;

    template <typename Writer>
    static void write(Writer& w, const std::vector<T>& x) {
        put_varint(w, x.size());
        for (const auto& e : x) ST::write(w, e);
    }
    template <typename Reader>
    static std::vector<T> read(Reader& r) {
        std::uint64_t n = get_varint(r);
        std::vector<T> x;
        x.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) x.push_back(ST::read(r));
        return x;
    }
    template <typename Reader>
    static void skip(Reader& r) {
        std::uint64_t n = get_varint(r);
        if constexpr (ST::is_fixed_size) {
            r.skip_bytes(n * ST::fixed_size);
        }
        else {
            for (std::uint64_t i = 0; i < n; ++i) ST::skip(r);
        }
    }
};

template <typename T>
struct Serialization<std::optional<T>>
{
    using ST = Serialization<T>;
    static constexpr bool is_fixed_size = false;
    static constexpr std::size_t fixed_size = 0;

    template <typename Writer>
    static void write(Writer& w, const std::optional<T>& x) {
        std::uint8_t flag = x.has_value();
        w.put_bytes(&flag, 1);
        if (x) ST::write(w, *x);
    }
    template <typename Reader>
    static std::optional<T> read(Reader& r) {
        std::uint8_t flag;
        r.get_bytes(&flag, 1);
        if (!flag) return std::nullopt;
        return ST::read(r);
    }
    template <typename Reader>
    static void skip(Reader& r) {
        std::uint8_t flag;
        r.get_bytes(&flag, 1);
        if (flag) ST::skip(r);
    }
};

/// Appends to a byte vector.
class BufferWriter
{
public:
    explicit BufferWriter(Buffer& out) : out_(out) { }

    void put_bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const std::byte*>(data);
        out_.insert(out_.end(), p, p + size);
    }

    template <typename T>
    BufferWriter& put(const T& item) {
        Serialization<T>::write(*this, item);
        return *this;
    }

private:
    Buffer& out_;
};

/// Reads from a contiguous byte span.
class BufferReader
{
public:
    explicit BufferReader(std::span<const std::byte> in) : in_(in) { }

    void get_bytes(void* dst, std::size_t size) {
        if (size > in_.size() - pos_)
            throw CorruptionError("buffer truncated inside an item");
        std::memcpy(dst, in_.data() + pos_, size);
        pos_ += size;
    }
    void skip_bytes(std::size_t size) {
        if (size > in_.size() - pos_)
            throw CorruptionError("buffer truncated inside an item");
        pos_ += size;
    }

    template <typename T>
    T get() { return Serialization<T>::read(*this); }

    bool empty() const { return pos_ == in_.size(); }
    std::size_t position() const { return pos_; }

private:
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

template <typename T>
Buffer serialize_to_buffer(const T& item) {
    Buffer b;
    BufferWriter(b).put(item);
    return b;
}

template <typename T>
T deserialize_from_buffer(std::span<const std::byte> bytes) {
    BufferReader r(bytes);
    T x = r.get<T>();
    if (!r.empty()) throw CorruptionError("trailing bytes after item");
    return x;
}

/// Counts serialized bytes without storing them.
class SizeCounter
{
public:
    void put_bytes(const void*, std::size_t size) { size_ += size; }
    std::size_t size() const { return size_; }

private:
    std::size_t size_ = 0;
};

template <typename T>
std::size_t serialized_size(const T& item) {
    if constexpr (is_fixed_size_v<T>) {
        return fixed_size_v<T>;
    }
    else {
        SizeCounter c;
        Serialization<T>::write(c, item);
        return c.size();
    }
}

} // namespace data
} // namespace thrillette
