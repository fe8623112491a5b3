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

#include "skytrace/ed25519.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <memory>
#include <stdexcept>

#include "skytrace/bytes.hpp"

namespace skytrace::crypto {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct CtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

PkeyPtr private_key(const SecretSeed& seed) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
  if (!key) throw std::runtime_error("ed25519: bad private key");
  return key;
}

PkeyPtr public_key(const PublicKey& pub) {
  PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub.data(), pub.size()));
  if (!key) throw std::runtime_error("ed25519: bad public key");
  return key;
}

}  // namespace

KeyPair KeyPair::from_seed(const SecretSeed& seed) {
  KeyPair kp;
  kp.seed = seed;
  PkeyPtr key = private_key(seed);
  size_t len = kp.pub.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), kp.pub.data(), &len) != 1 || len != kp.pub.size()) {
    throw std::runtime_error("ed25519: public key derivation failed");
  }
  return kp;
}

KeyPair KeyPair::generate() {
  SecretSeed seed{};
  if (RAND_bytes(seed.data(), seed.size()) != 1) {
    throw std::runtime_error("ed25519: entropy source failed");
  }
  return from_seed(seed);
}

std::string KeyPair::pub_hex() const {
  return to_hex(BytesView(pub.data(), pub.size()));
}

Signature sign(const SecretSeed& seed, BytesView message) {
  PkeyPtr key = private_key(seed);
  CtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    throw std::runtime_error("ed25519: sign init failed");
  }
  Signature sig{};
  size_t len = sig.size();
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1 ||
      len != sig.size()) {
    throw std::runtime_error("ed25519: sign failed");
  }
  return sig;
}

bool verify(const PublicKey& pub, BytesView message, const Signature& sig) {
  PkeyPtr key = public_key(pub);
  CtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    throw std::runtime_error("ed25519: verify init failed");
  }
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), message.data(), message.size()) == 1;
}

}  // namespace skytrace::crypto
