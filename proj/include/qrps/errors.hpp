#pragma once

#include <stdexcept>
#include <string>

namespace qrps {

// Base for all library errors. `name()` is stable and machine-readable; the
// CLI maps names onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

struct CycleError : Error {
  explicit CycleError(const std::string& what) : Error("CycleError", what) {}
};

struct TooLargeError : Error {
  explicit TooLargeError(const std::string& what) : Error("TooLargeError", what) {}
};

struct ZeroSupportError : Error {
  explicit ZeroSupportError(const std::string& what) : Error("ZeroSupportError", what) {}
};

struct BudgetExceededError : Error {
  explicit BudgetExceededError(const std::string& what) : Error("BudgetExceededError", what) {}
};

struct DegenerateTargetError : Error {
  explicit DegenerateTargetError(const std::string& what) : Error("DegenerateTargetError", what) {}
};

struct EmptyEnsembleError : Error {
  explicit EmptyEnsembleError(const std::string& what) : Error("EmptyEnsembleError", what) {}
};

struct EmptyCellError : Error {
  explicit EmptyCellError(const std::string& what) : Error("EmptyCellError", what) {}
};

struct ModelError : Error {
  explicit ModelError(const std::string& what) : Error("ModelError", what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

}  // namespace qrps
