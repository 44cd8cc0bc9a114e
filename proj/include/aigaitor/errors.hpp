#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aigaitor {

// Every library failure derives from Error so callers can map categories to
// exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration or parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Precondition on a value's type/shape (e.g. 3D op on a 2D sequence).
class TypeError : public Error {
 public:
  using Error::Error;
};

// Mathematical domain violation, e.g. projecting a point with z <= 0.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, long frame = -1, long joint = -1)
      : Error(what), frame_(frame), joint_(joint) {}
  long frame() const { return frame_; }
  long joint() const { return joint_; }

 private:
  long frame_;
  long joint_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public FormatError {
 public:
  TruncationError(std::size_t expected, std::size_t actual)
      : FormatError("pose file truncated: expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// Shape mismatch between a model and its input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A name that does not resolve (unknown stage profile, unknown link).
class ReferenceError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public AnalysisError {
 public:
  using AnalysisError::AnalysisError;
};

class InconsistencyError : public Error {
 public:
  InconsistencyError(const std::string& what, double observed, double modeled)
      : Error(what), observed_(observed), modeled_(modeled) {}
  double observed() const { return observed_; }
  double modeled() const { return modeled_; }

 private:
  double observed_;
  double modeled_;
};

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace aigaitor
