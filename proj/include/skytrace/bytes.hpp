/*
   Copyright 2026 the skytrace authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skytrace {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(BytesView b) {
  return std::string(b.begin(), b.end());
}

struct EncodingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string to_hex(BytesView data);
Bytes from_hex(std::string_view hex);  // throws EncodingError

// Standard alphabet, padded. Decoding is strict: rejects bad lengths,
// characters outside the alphabet, misplaced padding and non-zero
// trailing bits, so no two distinct encodings decode to the same bytes.
std::string base64_encode(BytesView data);
Bytes base64_decode(std::string_view text);  // throws EncodingError

}  // namespace skytrace
