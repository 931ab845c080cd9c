#pragma once

#include <stdexcept>
#include <string>

namespace ppl {

// Incompatible shapes: broadcasting, matmul inner dimensions, mis-shaped feeds.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A value outside the support of the distribution it is scored under.
struct SupportError : std::domain_error {
  using std::domain_error::domain_error;
};

// A distribution parameter outside its valid range (sigma <= 0, alpha <= 0, ...).
struct InvalidParameter : std::domain_error {
  using std::domain_error::domain_error;
};

struct NotReparameterizable : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid configuration of a model, inference problem or algorithm.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// A sample store has no free rows left.
struct StoreFull : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ppl
