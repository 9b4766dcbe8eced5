#pragma once

#include <stdexcept>
#include <string>

namespace walshflow {

// A single leg ran past its step cap before X crossed zero.
struct LegOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by code paths that require a driver grid when none is stored.
struct MissingDriver : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace walshflow
