#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <string>

#include "ppmp/bridge.hpp"

namespace ppmp {

struct ServeOptions {
  std::string address = "127.0.0.1";
  // 0 picks a free port; the bound port is reported through on_listen.
  unsigned short port = 8765;
  // Simulation ticks per wall-clock second; 0 runs as fast as possible.
  double rate_hz = 30.0;
  // Stop after this many ticks; 0 runs until `stop` is set.
  long max_ticks = 0;
  // Frames queued per client before new frames are dropped for it.
  std::size_t max_pending_frames = 8;
  std::function<void(unsigned short)> on_listen;
  std::function<void(const BridgeCore::Step&)> on_step;
  const std::atomic<bool>* stop = nullptr;
};

// WebSocket front end: every client receives each state frame as one JSON
// text message and may send ControlMessages; malformed ones are answered with
// an error frame on that connection only. The simulation loop never waits on
// a client.
void serve(BridgeCore& core, const ServeOptions& options);

}  // namespace ppmp
