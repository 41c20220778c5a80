// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_CORE_ERROR_HPP_
#define NOISESIM_CORE_ERROR_HPP_

#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace noisesim {

// Precondition violations on caller-supplied values.
struct InvalidInput : std::invalid_argument {
  explicit InvalidInput(const std::string& msg) : std::invalid_argument(msg) {}
};

// Tensor/matrix dimension mismatches.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Missing or inconsistent configuration (absent head, wrong embed dim, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File format / filesystem failures, including corrupt checkpoints.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or domain violations discovered mid-computation.
struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
class LogLine {
 public:
  explicit LogLine(const char* level) { os_ << "[" << level << "] "; }
  ~LogLine() { std::cerr << os_.str() << std::endl; }
  template <typename T>
  LogLine& operator<<(const T& v) {
    os_ << v;
    return *this;
  }

 private:
  std::ostringstream os_;
};
}  // namespace detail

#define NS_LOG ::noisesim::detail::LogLine("info")
#define NS_WARN ::noisesim::detail::LogLine("warn")

#define NS_CHECK(cond, exc_type, msg)              \
  do {                                             \
    if (!(cond)) {                                 \
      std::ostringstream nscheck_os_;              \
      nscheck_os_ << msg;                          \
      throw ::noisesim::exc_type(nscheck_os_.str()); \
    }                                              \
  } while (0)

}  // namespace noisesim

#endif  // NOISESIM_CORE_ERROR_HPP_
