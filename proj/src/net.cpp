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

#include "skytrace/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace skytrace::net {

namespace {

void write_all(int fd, const uint8_t* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<size_t>(n);
  }
}

// Returns false on clean EOF at the first byte; throws mid-buffer.
bool read_exact(int fd, uint8_t* out, size_t len, int timeout_ms) {
  size_t off = 0;
  while (off < len) {
    if (timeout_ms >= 0) {
      pollfd pfd{fd, POLLIN, 0};
      int rc = ::poll(&pfd, 1, timeout_ms);
      if (rc == 0) throw NetError("read timed out");
      if (rc < 0 && errno != EINTR) throw NetError(std::strerror(errno));
      if (rc < 0) continue;
    }
    ssize_t n = ::recv(fd, out + off, len - off, 0);
    if (n == 0) {
      if (off == 0) return false;
      throw NetError("connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError(std::string("recv failed: ") + std::strerror(errno));
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

}  // namespace

Bytes frame(BytesView payload) {
  Bytes out;
  out.reserve(payload.size() + 4);
  uint32_t len = static_cast<uint32_t>(payload.size());
  out.push_back(static_cast<uint8_t>(len >> 24));
  out.push_back(static_cast<uint8_t>(len >> 16));
  out.push_back(static_cast<uint8_t>(len >> 8));
  out.push_back(static_cast<uint8_t>(len));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Socket::~Socket() {
  close();
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::write_frame(BytesView payload) const {
  if (payload.size() > kMaxFrameSize) throw NetError("frame too large");
  Bytes framed = frame(payload);
  write_all(fd_, framed.data(), framed.size());
}

std::optional<Bytes> Socket::read_frame(int timeout_ms) const {
  uint8_t header[4];
  if (!read_exact(fd_, header, 4, timeout_ms)) return std::nullopt;
  uint32_t len = (static_cast<uint32_t>(header[0]) << 24) |
                 (static_cast<uint32_t>(header[1]) << 16) |
                 (static_cast<uint32_t>(header[2]) << 8) | header[3];
  if (len > kMaxFrameSize) throw NetError("oversized frame");
  Bytes payload(len);
  if (len > 0 && !read_exact(fd_, payload.data(), len, timeout_ms)) {
    throw NetError("connection closed mid-frame");
  }
  return payload;
}

std::pair<std::string, uint16_t> split_host_port(const std::string& address) {
  auto pos = address.rfind(':');
  if (pos == std::string::npos) throw NetError("address needs host:port: " + address);
  std::string host = address.substr(0, pos);
  if (host.empty()) host = "127.0.0.1";
  int port = std::stoi(address.substr(pos + 1));
  if (port <= 0 || port > 65535) throw NetError("bad port in " + address);
  return {host, static_cast<uint16_t>(port)};
}

Socket listen_on(const std::string& address, int backlog) {
  auto [host, port] = split_host_port(address);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError(std::strerror(errno));
  Socket sock(fd);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw NetError("bad listen host: " + host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw NetError("bind " + address + " failed: " + std::strerror(errno));
  }
  if (::listen(fd, backlog) != 0) throw NetError(std::strerror(errno));
  return sock;
}

std::optional<Socket> accept_on(const Socket& listener, int timeout_ms) {
  pollfd pfd{listener.fd(), POLLIN, 0};
  int rc = ::poll(&pfd, 1, timeout_ms);
  if (rc <= 0) return std::nullopt;
  int fd = ::accept(listener.fd(), nullptr, nullptr);
  if (fd < 0) return std::nullopt;
  return Socket(fd);
}

Socket connect_to(const std::string& address, int timeout_ms) {
  auto [host, port] = split_host_port(address);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError(std::strerror(errno));
  Socket sock(fd);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw NetError("bad host: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw NetError("connect " + address + " failed: " + std::strerror(errno));
  }
  (void)timeout_ms;
  return sock;
}

}  // namespace skytrace::net
