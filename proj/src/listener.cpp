// Copyright 2026 The Availscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "availscope/error.hpp"
#include "availscope/ingest.hpp"

namespace availscope {

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint must be host:port: " + endpoint);
  }
  std::string host = endpoint.substr(0, colon);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(endpoint.substr(colon + 1), &used);
    if (used != endpoint.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in endpoint " + endpoint);
  }
  if (host.empty()) host = "0.0.0.0";
  return {host, port};
}

MetricListener::MetricListener(IngestConfig config, MetricStore& store)
    : config_(std::move(config)), store_(store) {}

MetricListener::~MetricListener() { stop(); }

void MetricListener::start() {
  const auto [host, port] = parse_endpoint(config_.listen_endpoint);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kBindFailure, "cannot resolve " + config_.listen_endpoint);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    throw Error(ErrorCode::kBindFailure, std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    const std::string why = std::strerror(errno);
    freeaddrinfo(res);
    ::close(fd);
    throw Error(ErrorCode::kBindFailure, "cannot bind " + config_.listen_endpoint + ": " + why);
  }
  freeaddrinfo(res);

  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  listen_fd_ = fd;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void MetricListener::accept_loop() {
  while (running_) {
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if (client < 0) {
      if (!running_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    std::lock_guard lock(conn_mu_);
    if (!running_) {
      ::close(client);
      break;
    }
    connections_.fetch_add(1);
    open_fds_.insert(client);
    workers_.emplace_back([this, client] { serve_connection(client); });
  }
}

void MetricListener::serve_connection(int fd) {
  LineAssembler assembler(store_);
  char buf[16384];
  while (true) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n > 0) {
      assembler.feed(std::string_view(buf, static_cast<std::size_t>(n)));
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    break;  // peer closed or connection error: only this connection ends
  }
  assembler.finish();
  std::lock_guard lock(conn_mu_);
  if (open_fds_.erase(fd) > 0) ::close(fd);
}

void MetricListener::stop() {
  if (!running_.exchange(false)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();

  std::vector<std::thread> workers;
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : open_fds_) ::close(fd);
    open_fds_.clear();
  }
  listen_fd_ = -1;
  stopped_cv_.notify_all();
}

void MetricListener::wait() {
  std::unique_lock lock(conn_mu_);
  stopped_cv_.wait(lock, [this] { return !running_.load(); });
}

void run_listener(const IngestConfig& config, MetricStore& store) {
  MetricListener listener(config, store);
  listener.start();
  while (true) listener.wait();
}

}  // namespace availscope
