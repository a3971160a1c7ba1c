// Copyright 2026 The midctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef MIDCTL_NET_H_
#define MIDCTL_NET_H_

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "midctl/json_bridge.h"
#include "midctl/proto.h"

namespace midctl {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Byte stream over a TCP socket. Reads never block.
std::unique_ptr<ByteChannel> TcpConnect(const std::string& host, uint16_t port);

// "host:port"; throws NetError when malformed
std::pair<std::string, uint16_t> ParseHostPort(const std::string& text);

class TcpListener {
 public:
  // port 0 picks a free one
  TcpListener(const std::string& host, uint16_t port);
  ~TcpListener();
  uint16_t port() const;
  // blocks until a peer connects
  std::unique_ptr<ByteChannel> Accept();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// WebSocket endpoint carrying the JSON bridge, one browser at a time. Runs its
// own I/O thread; the frame loop only touches the queues.
class WebSocketBridge {
 public:
  // binds 127.0.0.1; port 0 picks a free one
  explicit WebSocketBridge(uint16_t port);
  ~WebSocketBridge();
  WebSocketBridge(const WebSocketBridge&) = delete;
  WebSocketBridge& operator=(const WebSocketBridge&) = delete;

  uint16_t port() const;
  bool connected() const;

  // dropped when no browser is connected
  void SendText(std::string text);
  void Send(const Message& msg) { SendText(EncodeJson(msg)); }
  void Send(const HudState& hud) { SendText(ToJson(hud).dump()); }

  std::vector<std::string> PollText();
  // decoded browser messages; undecodable text goes to TakeErrors
  std::vector<Message> Poll();
  std::vector<std::string> TakeErrors();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  std::vector<std::string> errors_;
};

}  // namespace midctl

#endif  // MIDCTL_NET_H_
