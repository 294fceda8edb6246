#include <future>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "json.hpp"
#include "llmrouter/ood.hpp"
#include "llmrouter/routing_api.hpp"
#include "llmrouter/service.hpp"

using namespace llmrouter;
using namespace llmrouter::testing;
using nlohmann::json;

namespace {

struct Fixture {
  BenchmarkStore store;
  SmootherModel smoother;
  RouteContext ctx;
  RoutingService service;
  int port;

  Fixture()
      : store(random_store(3, 20, 4, 3, 1234)),
        smoother([this] {
          PairGenerationConfig cfg;
          cfg.predictor.k = 3;
          cfg.distance.kappa = 3;
          cfg.alphas = {0.0, 0.1};
          cfg.repeats = 2;
          return generate_pairs(store, cfg);
        }()),
        ctx([this] {
          RouteContext c;
          c.store = &store;
          c.smoother = &smoother;
          c.predictor.k = 3;
          c.distance.kappa = 3;
          return c;
        }()),
        service(ctx),
        port(service.start_async("127.0.0.1")) {}

  httplib::Client client() { return httplib::Client("127.0.0.1", port); }

  json sample_request(int n_inputs, std::uint64_t seed) const {
    Rng rng(seed);
    json request;
    request["inputs"] = json::array();
    for (int i = 0; i < n_inputs; ++i) {
      json row = json::array();
      for (int d = 0; d < 4; ++d) row.push_back(rng.next_gaussian());
      request["inputs"].push_back(row);
    }
    return request;
  }
};

}  // namespace

TEST_CASE("service endpoints") {
  Fixture fx;
  auto client = fx.client();

  SUBCASE("healthz") {
    const auto res = client.Get("/v1/healthz");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["status"] == "ok");
  }

  SUBCASE("models lists the roster") {
    const auto res = client.Get("/v1/models");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = json::parse(res->body);
    REQUIRE(body["models"].size() == 3);
    CHECK(body["models"][0]["model_id"] == "m00");
    CHECK(body["models"][0].contains("n_params_b"));
  }

  SUBCASE("route agrees byte-for-byte with the in-process handler") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto request = fx.sample_request(4, seed);
      if (seed % 2 == 1) request["score"] = "s3";
      const auto res = client.Post("/v1/route", request.dump(), "application/json");
      REQUIRE(res);
      REQUIRE(res->status == 200);
      CHECK(res->body == handle_route_request(fx.ctx, request).dump());
    }
  }

  SUBCASE("per-instance decisions match route_per_instance") {
    auto request = fx.sample_request(3, 42);
    request["per_instance"] = true;
    const auto res = client.Post("/v1/route", request.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto body = json::parse(res->body);
    REQUIRE(body["decisions"].size() == 3);
    const auto reference = fx.store.all_indices();
    for (std::size_t i = 0; i < 3; ++i) {
      const auto input =
          request["inputs"][i].get<std::vector<double>>();
      const auto [chosen, g] =
          route_per_instance(fx.store, input, reference, fx.ctx.predictor);
      CHECK(body["decisions"][i]["chosen_model"] == chosen);
    }
  }

  SUBCASE("dimension mismatch is a 400 with a machine-readable reason") {
    json request;
    request["inputs"] = {{1.0, 0.0}};  // store dimension is 4
    const auto res = client.Post("/v1/route", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"] == "dimension_mismatch");
  }

  SUBCASE("empty inputs is a 422") {
    json request;
    request["inputs"] = json::array();
    const auto res = client.Post("/v1/route", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["error"] == "empty_inputs");
  }

  SUBCASE("malformed body and unknown candidate errors") {
    const auto bad = client.Post("/v1/route", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto request = fx.sample_request(2, 7);
    request["candidates"] = {"m00", "zz"};
    const auto res = client.Post("/v1/route", request.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"] == "unknown_model");
  }

  SUBCASE("concurrent identical requests return identical bodies") {
    const auto request = fx.sample_request(4, 9).dump();
    auto worker = [&] {
      auto c = fx.client();
      const auto res = c.Post("/v1/route", request, "application/json");
      return res ? res->body : std::string("<fail>");
    };
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 8; ++i) futures.push_back(std::async(std::launch::async, worker));
    const std::string first = futures[0].get();
    CHECK(first != "<fail>");
    for (std::size_t i = 1; i < futures.size(); ++i) CHECK(futures[i].get() == first);
  }
}

TEST_CASE("request option handling in the shared handler") {
  Fixture fx;

  SUBCASE("max_params filters candidates") {
    double min_params = 1e18;
    std::string smallest;
    for (const auto& m : fx.store.models()) {
      if (m.n_params_b < min_params) {
        min_params = m.n_params_b;
        smallest = m.model_id;
      }
    }
    auto request = fx.sample_request(3, 11);
    request["max_params"] = min_params;
    const auto response = handle_route_request(fx.ctx, request);
    CHECK(response["chosen_model"] == smallest);
    CHECK(response["scores"].size() == 1);
  }

  SUBCASE("explicit candidate filter restricts scores") {
    auto request = fx.sample_request(3, 12);
    request["candidates"] = {"m01", "m02"};
    const auto response = handle_route_request(fx.ctx, request);
    CHECK(response["scores"].size() == 2);
    CHECK(!response["scores"].contains("m00"));
  }

  SUBCASE("s3 responses carry selection metadata") {
    auto request = fx.sample_request(5, 13);
    request["score"] = "s3";
    const auto response = handle_route_request(fx.ctx, request);
    CHECK(response["selection"]["rule"] == "eta_gated");
    CHECK(response["selection"].contains("m3"));
    CHECK(response["selection"].contains("m_star"));
    CHECK(response.contains("p_estimates"));
    CHECK(response.contains("u"));
  }

  SUBCASE("s3 without a smoother is rejected") {
    RouteContext bare = fx.ctx;
    bare.smoother = nullptr;
    auto request = fx.sample_request(2, 14);
    request["score"] = "s3";
    CHECK_THROWS_AS(handle_route_request(bare, request), RequestError);
  }
}
