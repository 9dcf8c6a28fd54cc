#include "ppmp/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <memory>
#include <set>
#include <thread>

#include "ppmp/error.hpp"

namespace ppmp {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Hub;

class Client : public std::enable_shared_from_this<Client> {
 public:
  Client(tcp::socket socket, Hub& hub, BridgeCore& core, std::size_t max_pending)
      : ws_(std::move(socket)), hub_(hub), core_(core), max_pending_(max_pending) {}

  void start();
  // Runs on the io thread.
  void send(std::shared_ptr<const std::string> text, bool droppable);
  void close();

 private:
  void read();
  void write();

  websocket::stream<tcp::socket> ws_;
  Hub& hub_;
  BridgeCore& core_;
  std::size_t max_pending_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
  bool writing_ = false;
  bool open_ = false;
};

class Hub {
 public:
  void add(const std::shared_ptr<Client>& c) { clients_.insert(c); }
  void remove(const std::shared_ptr<Client>& c) { clients_.erase(c); }
  void broadcast(const std::shared_ptr<const std::string>& text) {
    for (const auto& c : clients_) c->send(text, true);
  }
  void close_all() {
    auto copy = clients_;
    for (const auto& c : copy) c->close();
    clients_.clear();
  }

 private:
  std::set<std::shared_ptr<Client>> clients_;
};

void Client::start() {
  auto self = shared_from_this();
  ws_.text(true);
  ws_.async_accept([self](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->hub_.add(self);
    self->read();
  });
}

void Client::read() {
  auto self = shared_from_this();
  ws_.async_read(buffer_, [self](beast::error_code ec, std::size_t) {
    if (ec) {
      self->open_ = false;
      self->hub_.remove(self);
      return;
    }
    const std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    std::optional<std::string> reason;
    try {
      reason = self->core_.enqueue(parse_control_message(std::string_view(text)));
    } catch (const ConfigError& e) {
      reason = e.what();
    }
    if (reason) {
      auto frame = std::make_shared<const std::string>(error_frame(self->core_.tick(), *reason).dump());
      self->send(frame, false);
    }
    self->read();
  });
}

void Client::send(std::shared_ptr<const std::string> text, bool droppable) {
  if (!open_) return;
  if (droppable && outbox_.size() >= max_pending_) return;
  outbox_.push_back(std::move(text));
  if (!writing_) write();
}

void Client::write() {
  writing_ = true;
  auto self = shared_from_this();
  ws_.async_write(net::buffer(*outbox_.front()), [self](beast::error_code ec, std::size_t) {
    self->outbox_.pop_front();
    if (ec) {
      self->open_ = false;
      self->writing_ = false;
      self->hub_.remove(self);
      return;
    }
    if (self->outbox_.empty()) {
      self->writing_ = false;
    } else {
      self->write();
    }
  });
}

void Client::close() {
  if (!open_) return;
  open_ = false;
  beast::error_code ec;
  ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
  ws_.next_layer().close(ec);
}

void accept_loop(tcp::acceptor& acceptor, Hub& hub, BridgeCore& core, std::size_t max_pending) {
  acceptor.async_accept([&acceptor, &hub, &core, max_pending](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<Client>(std::move(socket), hub, core, max_pending)->start();
    accept_loop(acceptor, hub, core, max_pending);
  });
}

}  // namespace

void serve(BridgeCore& core, const ServeOptions& options) {
  if (options.rate_hz < 0.0) throw ConfigError("serve: rate must be >= 0");
  net::io_context ioc;
  Hub hub;
  tcp::acceptor acceptor(ioc);
  beast::error_code ec;
  const tcp::endpoint endpoint(net::ip::make_address(options.address, ec), options.port);
  if (ec) throw ConfigError("serve: bad address '" + options.address + "'");
  acceptor.open(endpoint.protocol());
  acceptor.set_option(net::socket_base::reuse_address(true));
  acceptor.bind(endpoint, ec);
  if (ec) throw ConfigError("serve: cannot bind port " + std::to_string(options.port) + ": " + ec.message());
  acceptor.listen();
  if (options.on_listen) options.on_listen(acceptor.local_endpoint().port());
  accept_loop(acceptor, hub, core, options.max_pending_frames);

  auto guard = net::make_work_guard(ioc);
  std::thread io([&ioc] { ioc.run(); });

  using clock = std::chrono::steady_clock;
  const auto period = options.rate_hz > 0.0
                          ? std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / options.rate_hz))
                          : clock::duration::zero();
  auto next = clock::now();
  try {
    for (long k = 0; options.max_ticks == 0 || k < options.max_ticks; ++k) {
      if (options.stop && options.stop->load()) break;
      BridgeCore::Step step = core.step();
      auto frame = std::make_shared<const std::string>(frame_to_json(step.frame).dump());
      std::vector<std::shared_ptr<const std::string>> errors;
      for (const auto& e : step.errors) errors.push_back(std::make_shared<const std::string>(e.dump()));
      net::post(ioc, [&hub, frame, errors] {
        for (const auto& e : errors) hub.broadcast(e);
        hub.broadcast(frame);
      });
      if (options.on_step) options.on_step(step);
      if (period > clock::duration::zero()) {
        next += period;
        std::this_thread::sleep_until(next);
      }
    }
  } catch (...) {
    net::post(ioc, [&] {
      acceptor.close();
      hub.close_all();
    });
    guard.reset();
    ioc.stop();
    io.join();
    throw;
  }
  net::post(ioc, [&] {
    beast::error_code ignored;
    acceptor.close(ignored);
    hub.close_all();
  });
  guard.reset();
  io.join();
}

}  // namespace ppmp
