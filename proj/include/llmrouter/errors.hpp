#pragma once

#include <stdexcept>
#include <string>

namespace llmrouter {

struct RouterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (bad JSON, wrong embedding length, missing field).
struct SchemaError : RouterError {
  using RouterError::RouterError;
};

// Well-formed input violating a store invariant (label range, unknown model).
struct ValidationError : RouterError {
  using RouterError::RouterError;
};

struct NotFoundError : RouterError {
  using RouterError::RouterError;
};

struct EmptyStoreError : RouterError {
  using RouterError::RouterError;
};

// Operation requires a label mode the store does not have.
struct ModeError : RouterError {
  using RouterError::RouterError;
};

struct DomainError : RouterError {
  using RouterError::RouterError;
};

struct IoError : RouterError {
  using RouterError::RouterError;
};

struct NotFittedError : RouterError {
  using RouterError::RouterError;
};

}  // namespace llmrouter
