#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ngrad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

/// Invalid user input: bad config file, inconsistent shapes, out-of-range flags.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation produced or would produce non-finite values.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// The unit-wise Fisher matrix is numerically singular (saturated unit).
struct SingularFisher : NumericError {
  explicit SingularFisher(const std::string& what) : NumericError(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ngrad
