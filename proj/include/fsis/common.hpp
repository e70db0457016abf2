// Shared types, error classes and tolerance settings for the fsis toolkit.
#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <system_error>

namespace fsis {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is a 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Expression evaluation failure (division by zero, overflow).
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double frequency)
      : Error(what + " at frequency " + std::to_string(frequency)), frequency_(frequency) {}
  double frequency() const noexcept { return frequency_; }

 private:
  double frequency_;
};

/// Scenario or generator record that violates the input schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field_path, const std::string& what)
      : Error(field_path + ": " + what), field_path_(field_path) {}
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

/// A numerical invariant that holds by construction was violated.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Numerical policy knobs. Every report echoes the values that were used.
struct Tolerances {
  double rank_tol = 1e-10;   // relative singular-value cut for ranks
  double spec_tol = 1e-10;   // relative eigenvalue cut for zero/nonzero spectrum
  double conv_eps = 1e-10;   // alternating-projection stopping residual
  int max_iter = 10000;      // alternating-projection iteration budget
  double close_eps = 1e-4;   // closedness threshold on the Friedrichs cosine
};

/// Shortest round-trip decimal representation, locale independent.
inline std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw Error("cannot format floating point value");
  return std::string(buffer, end);
}

inline double frobenius_distance(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

}  // namespace fsis
