#pragma once
#include <stdexcept>
#include <string>

namespace volrank {

// Bad user input: unknown scenario, malformed config, invalid matrix, ...
// CLI maps this to exit code 2.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A statistic could not be formed from the data (S <= 0, path too short).
// Reported, never silently patched; CLI maps this to exit code 1.
struct degenerate_statistic : std::runtime_error {
  explicit degenerate_statistic(const std::string& what) : std::runtime_error(what) {}
};

struct too_short_path : degenerate_statistic {
  explicit too_short_path(const std::string& what) : degenerate_statistic(what) {}
};

// Operation asked for outside its supported regime (e.g. limit integrals for
// a model whose coefficients are not deterministic functions of time).
struct unsupported_model : std::runtime_error {
  explicit unsupported_model(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace volrank
