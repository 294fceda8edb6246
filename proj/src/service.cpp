#include "llmrouter/service.hpp"

#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace llmrouter {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void set_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct RoutingService::Impl {
  RouteContext ctx;
  httplib::Server server;
  std::thread worker;

  explicit Impl(RouteContext c) : ctx(std::move(c)) {
    server.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      set_json(res, 200, ordered_json{{"status", "ok"}});
    });

    server.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
      ordered_json body;
      body["models"] = ordered_json::array();
      for (const auto& m : ctx.store->models()) {
        body["models"].push_back({{"model_id", m.model_id},
                                  {"n_params_b", m.n_params_b},
                                  {"display_name", m.display_name}});
      }
      set_json(res, 200, body);
    });

    server.Post("/v1/route", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      json request;
      try {
        request = json::parse(req.body);
      } catch (const json::exception& e) {
        set_json(res, 400,
                 ordered_json{{"error", "bad_json"}, {"message", e.what()}});
        return;
      }
      try {
        set_json(res, 200, handle_route_request(ctx, request));
      } catch (const RequestError& e) {
        set_json(res, e.status,
                 ordered_json{{"error", e.reason}, {"message", e.what()}});
      } catch (const RouterError& e) {
        set_json(res, 400,
                 ordered_json{{"error", "router_error"}, {"message", e.what()}});
      }
    });
  }
};

RoutingService::RoutingService(RouteContext ctx)
    : impl_(std::make_unique<Impl>(std::move(ctx))) {}

RoutingService::~RoutingService() { stop(); }

void RoutingService::listen(const std::string& host, int port) {
  impl_->server.listen(host, port);
}

int RoutingService::start_async(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void RoutingService::stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace llmrouter
