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

#include <array>
#include <string>

#include "skytrace/bytes.hpp"

namespace skytrace::crypto {

using PublicKey = std::array<uint8_t, 32>;
using SecretSeed = std::array<uint8_t, 32>;
using Signature = std::array<uint8_t, 64>;

struct KeyPair {
  SecretSeed seed{};
  PublicKey pub{};

  static KeyPair from_seed(const SecretSeed& seed);
  static KeyPair generate();  // from the OS entropy source

  std::string pub_hex() const;
};

// Ed25519 signatures are deterministic: same key and message, same bytes.
Signature sign(const SecretSeed& seed, BytesView message);
bool verify(const PublicKey& pub, BytesView message, const Signature& sig);

}  // namespace skytrace::crypto
