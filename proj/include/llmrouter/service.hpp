#pragma once

#include <memory>
#include <string>

#include "llmrouter/routing_api.hpp"

namespace llmrouter {

/// Stateless HTTP JSON service over an immutable store and fitted smoother.
/// Handlers run concurrently; nothing is mutated after construction.
class RoutingService {
 public:
  explicit RoutingService(RouteContext ctx);
  ~RoutingService();

  RoutingService(const RoutingService&) = delete;
  RoutingService& operator=(const RoutingService&) = delete;

  /// Blocks until stop() is called from another thread.
  void listen(const std::string& host, int port);

  /// Binds to an OS-assigned port and serves on a background thread.
  /// Returns the bound port.
  int start_async(const std::string& host);

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace llmrouter
