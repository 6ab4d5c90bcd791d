#pragma once

#include <stdexcept>
#include <string>

namespace lamestab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Raised when Omega_d has no element at the current mesh resolution.
class EmptySubdomainError : public GeometryError {
 public:
  EmptySubdomainError(double d, const std::string& what)
      : GeometryError(what), d_(d) {}
  double d() const { return d_; }

 private:
  double d_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, long iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

/// The measured strain carries no information about mu on some region.
class IllPosedError : public Error {
 public:
  IllPosedError(const std::string& what, double cx, double cy, double radius)
      : Error(what), cx_(cx), cy_(cy), radius_(radius) {}
  double center_x() const { return cx_; }
  double center_y() const { return cy_; }
  double radius() const { return radius_; }

 private:
  double cx_, cy_, radius_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = -1, std::string field = {})
      : Error(what), line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace lamestab
