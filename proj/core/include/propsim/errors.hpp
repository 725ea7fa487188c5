#pragma once

#include <stdexcept>
#include <string>

namespace propsim {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File ingestion failure: syntax, schema, or unit violation.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::string field, const std::string& reason)
      : Error(file + ": " + (field.empty() ? reason : field + ": " + reason)),
        file_(std::move(file)),
        field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

/// Dense solve hit a pivot below the singularity threshold.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(int pivot, const std::string& context)
      : Error("singular matrix: pivot " + std::to_string(pivot) +
              " below threshold" + (context.empty() ? "" : " (" + context + ")")),
        pivot_(pivot) {}

  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Simulation state left the sane range (|q| > 1e3 or |qdot| > 1e5).
class DivergenceError : public Error {
 public:
  DivergenceError(long step, const std::string& what_diverged)
      : Error("simulation diverged at step " + std::to_string(step) + ": " +
              what_diverged),
        step_(step) {}

  long step() const { return step_; }

 private:
  long step_;
};

/// A tetrahedral element reached non-positive volume (det F <= 0).
class InvertedElementError : public Error {
 public:
  InvertedElementError(int tet, long step)
      : Error("inverted element: tet " + std::to_string(tet) +
              (step >= 0 ? " at step " + std::to_string(step) : "")),
        tet_(tet),
        step_(step) {}

  int tet() const { return tet_; }
  long step() const { return step_; }

 private:
  int tet_;
  long step_;
};

}  // namespace propsim
