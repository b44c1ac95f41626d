#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace delayoco {

using Vector = Eigen::VectorXd;

// Bad input to an operation: schedule, dimension, constants, config values.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A runtime check (identity, invariant, audit) that did not hold.
class CheckFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string &msg) {
    if (!ok)
        throw ValidationError(msg);
}

} // namespace delayoco
