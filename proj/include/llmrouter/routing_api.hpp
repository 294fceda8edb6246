#pragma once

#include <string>

#include "json.hpp"
#include "llmrouter/errors.hpp"
#include "llmrouter/ood.hpp"
#include "llmrouter/predictor.hpp"
#include "llmrouter/scores.hpp"
#include "llmrouter/store.hpp"

namespace llmrouter {

/// Request-level failure with an HTTP-compatible status and machine-readable
/// reason code.
struct RequestError : RouterError {
  RequestError(int status_, std::string reason_, const std::string& message)
      : RouterError(message), status(status_), reason(std::move(reason_)) {}
  int status;
  std::string reason;
};

struct RouteContext {
  const BenchmarkStore* store = nullptr;
  const SmootherModel* smoother = nullptr;  // required for s3 routing
  PredictorConfig predictor;
  DistanceConfig distance;
  double eta = 0.6;
  ScoreKind default_score = ScoreKind::s1;
};

/// Shared routing entry point for the CLI and the HTTP service; both emit
/// the returned JSON verbatim, which keeps the two paths byte-identical.
///
/// Request schema:
///   {"inputs": [[f,...],...], "score": "s1|s2|s3", "per_instance": bool,
///    "max_params": f?, "candidates": [id,...]?, "k": n?, "threshold": f?,
///    "kappa": n?, "eta": f?}
nlohmann::ordered_json handle_route_request(const RouteContext& ctx,
                                            const nlohmann::json& request);

}  // namespace llmrouter
