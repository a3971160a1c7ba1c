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


#include "midctl/net.h"

#include <atomic>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace midctl {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class TcpChannel : public ByteChannel {
 public:
  TcpChannel(std::unique_ptr<asio::io_context> io, tcp::socket socket)
      : io_(std::move(io)), socket_(std::move(socket)) {
    socket_.set_option(tcp::no_delay(true));
    socket_.non_blocking(true);
  }

  void Write(std::span<const uint8_t> bytes) override {
    if (closed_) throw NetError("write on a closed socket");
    size_t done = 0;
    while (done < bytes.size()) {
      boost::system::error_code ec;
      done += socket_.write_some(asio::buffer(bytes.data() + done, bytes.size() - done), ec);
      if (ec == asio::error::would_block || ec == asio::error::try_again) {
        socket_.wait(tcp::socket::wait_write, ec);
        continue;
      }
      if (ec) {
        closed_ = true;
        throw NetError("socket write failed: " + ec.message());
      }
    }
  }

  std::vector<uint8_t> ReadAvailable() override {
    std::vector<uint8_t> out;
    if (closed_) return out;
    uint8_t buf[4096];
    for (;;) {
      boost::system::error_code ec;
      const size_t n = socket_.read_some(asio::buffer(buf), ec);
      out.insert(out.end(), buf, buf + n);
      if (ec == asio::error::would_block || ec == asio::error::try_again) break;
      if (ec) {  // eof or reset
        closed_ = true;
        break;
      }
    }
    return out;
  }

  bool closed() const override { return closed_; }

  void Close() override {
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    closed_ = true;
  }

 private:
  std::unique_ptr<asio::io_context> io_;
  tcp::socket socket_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<ByteChannel> TcpConnect(const std::string& host, uint16_t port) {
  auto io = std::make_unique<asio::io_context>();
  tcp::socket socket(*io);
  boost::system::error_code ec;
  tcp::resolver resolver(*io);
  const auto endpoints = resolver.resolve(host, std::to_string(port), ec);
  if (!ec) asio::connect(socket, endpoints, ec);
  if (ec) {
    throw NetError("cannot connect to " + host + ":" + std::to_string(port) + ": " +
                   ec.message());
  }
  return std::make_unique<TcpChannel>(std::move(io), std::move(socket));
}

struct TcpListener::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
};

std::pair<std::string, uint16_t> ParseHostPort(const std::string& text) {
  const size_t colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw NetError("expected host:port, got '" + text + "'");
  }
  const std::string port = text.substr(colon + 1);
  if (port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5 ||
      std::stoul(port) > 65535) {
    throw NetError("bad port in '" + text + "'");
  }
  return {text.substr(0, colon), static_cast<uint16_t>(std::stoul(port))};
}

TcpListener::TcpListener(const std::string& host, uint16_t port)
    : impl_(std::make_unique<Impl>()) {
  boost::system::error_code ec;
  const auto address = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
  if (ec) throw NetError("bad listen address '" + host + "': " + ec.message());
  const tcp::endpoint ep(address, port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw NetError("cannot listen on port " + std::to_string(port) + ": " + ec.message());
}

TcpListener::~TcpListener() = default;

uint16_t TcpListener::port() const { return impl_->acceptor.local_endpoint().port(); }

std::unique_ptr<ByteChannel> TcpListener::Accept() {
  auto io = std::make_unique<asio::io_context>();
  tcp::socket socket(*io);
  boost::system::error_code ec;
  impl_->acceptor.accept(socket, ec);
  if (ec) throw NetError("accept failed: " + ec.message());
  return std::make_unique<TcpChannel>(std::move(io), std::move(socket));
}

// --- websocket ---------------------------------------------------------------

struct WebSocketBridge::Impl : std::enable_shared_from_this<Impl> {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread thread;

  // I/O thread only
  std::unique_ptr<websocket::stream<tcp::socket>> ws;
  beast::flat_buffer read_buffer;
  std::deque<std::string> writes;
  bool writing = false;

  mutable std::mutex mu;
  std::vector<std::string> inbox;
  std::atomic<bool> open{false};

  void Accept() {
    acceptor.async_accept([self = shared_from_this()](boost::system::error_code ec,
                                                      tcp::socket socket) {
      if (ec) return;  // acceptor closed
      self->ws = std::make_unique<websocket::stream<tcp::socket>>(std::move(socket));
      self->ws->async_accept([self](boost::system::error_code ec2) {
        if (ec2) {
          self->Drop();
          return;
        }
        self->open = true;
        self->Read();
      });
    });
  }

  void Read() {
    ws->async_read(read_buffer, [self = shared_from_this()](boost::system::error_code ec,
                                                            size_t) {
      if (ec) {
        self->Drop();
        return;
      }
      {
        std::lock_guard lock(self->mu);
        self->inbox.push_back(beast::buffers_to_string(self->read_buffer.data()));
      }
      self->read_buffer.consume(self->read_buffer.size());
      self->Read();
    });
  }

  void Write() {
    if (writing || writes.empty() || !ws) return;
    writing = true;
    ws->text(true);
    ws->async_write(asio::buffer(writes.front()),
                    [self = shared_from_this()](boost::system::error_code ec, size_t) {
                      self->writing = false;
                      if (ec) {
                        self->Drop();
                        return;
                      }
                      self->writes.pop_front();
                      self->Write();
                    });
  }

  // forget the browser and wait for the next one
  void Drop() {
    if (!ws) return;
    open = false;
    boost::system::error_code ec;
    beast::get_lowest_layer(*ws).close(ec);
    ws.reset();
    writes.clear();
    writing = false;
    read_buffer.consume(read_buffer.size());
    Accept();
  }
};

WebSocketBridge::WebSocketBridge(uint16_t port) : impl_(std::make_shared<Impl>()) {
  boost::system::error_code ec;
  const tcp::endpoint ep(asio::ip::make_address("127.0.0.1"), port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw NetError("cannot listen on port " + std::to_string(port) + ": " + ec.message());
  impl_->Accept();
  impl_->thread = std::thread([impl = impl_] { impl->io.run(); });
}

WebSocketBridge::~WebSocketBridge() {
  asio::post(impl_->io, [impl = impl_] {
    boost::system::error_code ec;
    impl->acceptor.close(ec);
    if (impl->ws) beast::get_lowest_layer(*impl->ws).close(ec);
    impl->io.stop();
  });
  impl_->thread.join();
}

uint16_t WebSocketBridge::port() const { return impl_->acceptor.local_endpoint().port(); }

bool WebSocketBridge::connected() const { return impl_->open; }

void WebSocketBridge::SendText(std::string text) {
  asio::post(impl_->io, [impl = impl_, text = std::move(text)]() mutable {
    if (!impl->open) return;
    impl->writes.push_back(std::move(text));
    impl->Write();
  });
}

std::vector<std::string> WebSocketBridge::PollText() {
  std::lock_guard lock(impl_->mu);
  return std::exchange(impl_->inbox, {});
}

std::vector<Message> WebSocketBridge::Poll() {
  std::vector<Message> out;
  for (const std::string& text : PollText()) {
    try {
      out.push_back(DecodeJson(text));
    } catch (const ProtocolError& e) {
      errors_.push_back(e.what());
    }
  }
  return out;
}

std::vector<std::string> WebSocketBridge::TakeErrors() { return std::exchange(errors_, {}); }

}  // namespace midctl
