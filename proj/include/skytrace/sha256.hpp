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

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

#include "skytrace/bytes.hpp"

namespace skytrace {

using Digest32 = std::array<uint8_t, 32>;

inline Digest32 sha256(BytesView data) {
  Digest32 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

inline Digest32 sha256(std::string_view s) {
  return sha256(BytesView(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

}  // namespace skytrace
