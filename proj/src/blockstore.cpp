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

#include "skytrace/blockstore.hpp"

#include <unistd.h>

#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace skytrace::blockstore {

namespace fs = std::filesystem;

Cid Cid::parse(std::string_view hex) {
  Bytes raw = from_hex(hex);
  if (raw.size() != 32) throw EncodingError("cid must be 64 hex characters");
  Cid cid;
  std::copy(raw.begin(), raw.end(), cid.digest.begin());
  return cid;
}

std::vector<Cid> extract_links(BytesView bytes) {
  std::vector<Cid> links;
  auto doc = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return links;
  auto it = doc.find("parents");
  if (it == doc.end() || !it->is_array()) return links;
  for (const auto& p : *it) {
    if (!p.is_string()) return {};
    links.push_back(Cid::parse(p.get<std::string>()));
  }
  return links;
}

Block BlockStore::get_block(const Cid& cid) const {
  Block b;
  b.cid = cid;
  b.bytes = get(cid);
  b.links = extract_links(b.bytes);
  return b;
}

bool BlockStore::pinned(const Cid& cid) const {
  std::unordered_set<Cid, CidHash> seen;
  std::vector<Cid> stack{cid};
  while (!stack.empty()) {
    Cid cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    if (!has(cur)) return false;
    for (const Cid& link : extract_links(get(cur))) stack.push_back(link);
  }
  return true;
}

void BlockStore::check_size(size_t n) const {
  if (n > max_block_size_) {
    throw BlockTooLarge("payload of " + std::to_string(n) + " bytes exceeds max block size " +
                        std::to_string(max_block_size_));
  }
}

Cid MemoryBlockStore::put(BytesView bytes) {
  check_size(bytes.size());
  Cid cid = Cid::of(bytes);
  std::lock_guard lock(mu_);
  blocks_.try_emplace(cid, Bytes(bytes.begin(), bytes.end()));
  return cid;
}

Bytes MemoryBlockStore::get(const Cid& cid) const {
  std::lock_guard lock(mu_);
  auto it = blocks_.find(cid);
  if (it == blocks_.end()) throw NotFound(cid);
  return it->second;
}

bool MemoryBlockStore::has(const Cid& cid) const {
  std::lock_guard lock(mu_);
  return blocks_.contains(cid);
}

size_t MemoryBlockStore::count() const {
  std::lock_guard lock(mu_);
  return blocks_.size();
}

DiskBlockStore::DiskBlockStore(fs::path root, size_t max_block_size)
    : BlockStore(max_block_size), root_(std::move(root)) {
  fs::create_directories(root_);
}

fs::path DiskBlockStore::path_for(const Cid& cid) const {
  std::string hex = cid.hex();
  return root_ / hex.substr(0, 2) / (hex + ".blk");
}

Cid DiskBlockStore::put(BytesView bytes) {
  check_size(bytes.size());
  Cid cid = Cid::of(bytes);
  fs::path target = path_for(cid);
  std::lock_guard lock(mu_);
  if (fs::exists(target)) return cid;  // dedup
  fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += "." + std::to_string(::getpid()) + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("block write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
  return cid;
}

Bytes DiskBlockStore::get(const Cid& cid) const {
  fs::path p = path_for(cid);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFound(cid);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

bool DiskBlockStore::has(const Cid& cid) const {
  return fs::exists(path_for(cid));
}

size_t DiskBlockStore::count() const {
  size_t n = 0;
  for_each([&n](const Cid&) { ++n; });
  return n;
}

void DiskBlockStore::for_each(const std::function<void(const Cid&)>& fn) const {
  if (!fs::exists(root_)) return;
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (!dir.is_directory()) continue;
    for (const auto& file : fs::directory_iterator(dir.path())) {
      std::string name = file.path().filename().string();
      if (name.size() == 68 && name.ends_with(".blk")) {
        fn(Cid::parse(name.substr(0, 64)));
      }
    }
  }
}

void DiskBlockStore::scrub() const {
  for_each([this](const Cid& cid) {
    Bytes bytes = get(cid);
    if (Cid::of(bytes) != cid) {
      throw CorruptBlock(cid, "stored bytes do not hash to the block name");
    }
  });
}

}  // namespace skytrace::blockstore
