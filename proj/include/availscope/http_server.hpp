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

// HTTP binding of Engine::handle.

#ifndef AVAILSCOPE_HTTP_SERVER_HPP_
#define AVAILSCOPE_HTTP_SERVER_HPP_

#include <memory>
#include <string>

#include "availscope/engine.hpp"

namespace availscope {

class HttpServer {
 public:
  explicit HttpServer(Engine& engine);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds host:port (port 0 picks a free port). Throws Error(kBindFailure).
  void bind(const std::string& host, int port);
  int port() const { return port_; }
  // Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace availscope

#endif  // AVAILSCOPE_HTTP_SERVER_HPP_
