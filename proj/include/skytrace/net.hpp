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

#include <optional>
#include <string>

#include "skytrace/bytes.hpp"

namespace skytrace::net {

struct NetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Frame = 4-byte big-endian payload length + payload bytes.
constexpr size_t kMaxFrameSize = 16 << 20;

Bytes frame(BytesView payload);

// Owning socket fd.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();

  void write_frame(BytesView payload) const;
  // nullopt on clean EOF before any frame byte.
  std::optional<Bytes> read_frame(int timeout_ms = -1) const;

 private:
  int fd_ = -1;
};

// host:port helpers; host defaults to 127.0.0.1 when omitted.
std::pair<std::string, uint16_t> split_host_port(const std::string& address);

Socket listen_on(const std::string& address, int backlog = 16);
std::optional<Socket> accept_on(const Socket& listener, int timeout_ms);
Socket connect_to(const std::string& address, int timeout_ms = 2000);  // throws NetError

}  // namespace skytrace::net
