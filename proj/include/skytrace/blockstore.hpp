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

#include <compare>
#include <cstring>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "skytrace/bytes.hpp"
#include "skytrace/sha256.hpp"

namespace skytrace::blockstore {

// Content identifier: SHA-256 digest of the block bytes, printed as 64
// lowercase hex characters. Equal bytes, equal cid; nothing else collides.
struct Cid {
  Digest32 digest{};

  static Cid of(BytesView bytes) { return Cid{sha256(bytes)}; }
  static Cid parse(std::string_view hex);  // throws EncodingError

  std::string hex() const { return to_hex(BytesView(digest.data(), digest.size())); }

  auto operator<=>(const Cid&) const = default;
};

struct CidHash {
  size_t operator()(const Cid& c) const {
    size_t h;
    std::memcpy(&h, c.digest.data(), sizeof(h));
    return h;
  }
};

struct NotFound : std::runtime_error {
  explicit NotFound(const Cid& cid) : std::runtime_error("block not found: " + cid.hex()) {}
};
struct BlockTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptBlock : std::runtime_error {
  CorruptBlock(const Cid& cid, const std::string& what)
      : std::runtime_error("corrupt block " + cid.hex() + ": " + what), cid(cid) {}
  Cid cid;
};

constexpr size_t kDefaultMaxBlockSize = 1 << 20;  // 1 MiB

// A block plus the cids its payload links to. Links come from the canonical
// "parents" field when the payload is a JSON object carrying one.
struct Block {
  Cid cid;
  Bytes bytes;
  std::vector<Cid> links;
};

std::vector<Cid> extract_links(BytesView bytes);

class BlockStore {
 public:
  virtual ~BlockStore() = default;

  // Re-putting identical bytes returns the same cid and stores nothing new.
  virtual Cid put(BytesView bytes) = 0;
  virtual Bytes get(const Cid& cid) const = 0;  // throws NotFound
  virtual bool has(const Cid& cid) const = 0;
  virtual size_t count() const = 0;

  Block get_block(const Cid& cid) const;
  // True when every link under `cid` resolves transitively.
  bool pinned(const Cid& cid) const;

  size_t max_block_size() const { return max_block_size_; }

 protected:
  explicit BlockStore(size_t max_block_size) : max_block_size_(max_block_size) {}
  void check_size(size_t n) const;

 private:
  size_t max_block_size_;
};

class MemoryBlockStore final : public BlockStore {
 public:
  explicit MemoryBlockStore(size_t max_block_size = kDefaultMaxBlockSize)
      : BlockStore(max_block_size) {}

  Cid put(BytesView bytes) override;
  Bytes get(const Cid& cid) const override;
  bool has(const Cid& cid) const override;
  size_t count() const override;

 private:
  mutable std::mutex mu_;
  std::unordered_map<Cid, Bytes, CidHash> blocks_;
};

// One file per block under a two-level fan-out: <root>/<hh>/<hex>.blk.
// Writes go through a temp file and rename, so a block file is either absent
// or complete. Reads trust the file; scrub() re-hashes everything.
class DiskBlockStore final : public BlockStore {
 public:
  explicit DiskBlockStore(std::filesystem::path root,
                          size_t max_block_size = kDefaultMaxBlockSize);

  Cid put(BytesView bytes) override;
  Bytes get(const Cid& cid) const override;
  bool has(const Cid& cid) const override;
  size_t count() const override;

  // Throws CorruptBlock naming the first cid whose bytes no longer hash to it.
  void scrub() const;

  void for_each(const std::function<void(const Cid&)>& fn) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path path_for(const Cid& cid) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace skytrace::blockstore
