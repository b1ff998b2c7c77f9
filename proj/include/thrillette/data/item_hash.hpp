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

#include <thrillette/common/hash.hpp>
#include <thrillette/data/serialization.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>

namespace thrillette::data {

/// Seeded 64-bit hash of any serializable item. Integers and strings take
/// a direct path; other types hash their serialized bytes.
template <typename T>
std::uint64_t item_hash(const T& x, std::uint64_t seed = 0) {
    if constexpr (std::is_integral_v<T> || std::is_enum_v<T>) {
        return mix64(static_cast<std::uint64_t>(x) ^ mix64(seed));
    }
    else if constexpr (std::is_same_v<T, std::string>) {
        return hash_bytes(x.data(), x.size(), seed);
    }
    else {
        Buffer b = serialize_to_buffer(x);
        return hash_bytes(b.data(), b.size(), seed);
    }
}

} // namespace thrillette::data
