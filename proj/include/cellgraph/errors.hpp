#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellgraph {

// Input or state that violates a documented contract. The CLI maps these to
// exit code 1.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Filesystem failures. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CELLGRAPH_DEFINE_ERROR(Name)                                   \
  class Name : public ValidationError {                                \
   public:                                                             \
    explicit Name(const std::string& what) : ValidationError(#Name, what) {} \
  };

// spatial model
CELLGRAPH_DEFINE_ERROR(SchemaError)
CELLGRAPH_DEFINE_ERROR(GeometryError)
CELLGRAPH_DEFINE_ERROR(DanglingRef)
CELLGRAPH_DEFINE_ERROR(UnresolvedRef)
CELLGRAPH_DEFINE_ERROR(OutOfRange)
CELLGRAPH_DEFINE_ERROR(MissingAoiParams)
// graph / index
CELLGRAPH_DEFINE_ERROR(EmptyIndex)
CELLGRAPH_DEFINE_ERROR(NoCellOnLevel)
// localization
CELLGRAPH_DEFINE_ERROR(CollinearBeacons)
CELLGRAPH_DEFINE_ERROR(Underdetermined)
// embedding
CELLGRAPH_DEFINE_ERROR(EmptyCorpus)
CELLGRAPH_DEFINE_ERROR(ZeroVector)
CELLGRAPH_DEFINE_ERROR(UnknownCell)
CELLGRAPH_DEFINE_ERROR(KTooLarge)
// classifier
CELLGRAPH_DEFINE_ERROR(MissingEmbedding)
CELLGRAPH_DEFINE_ERROR(DimensionMismatch)
// harness / cli
CELLGRAPH_DEFINE_ERROR(ConfigError)

#undef CELLGRAPH_DEFINE_ERROR

// Malformed STEP physical file content; carries the 1-based source line.
class StepSyntaxError : public ValidationError {
 public:
  StepSyntaxError(std::size_t line, const std::string& what)
      : ValidationError("StepSyntaxError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cellgraph
