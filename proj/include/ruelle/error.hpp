#pragma once

#include <stdexcept>
#include <string>

namespace ruelle {

// Base of every numerical error raised by the library. name() is the
// machine-readable error kind, module() the originating module.
class Error : public std::runtime_error {
 public:
  Error(std::string name, std::string module, const std::string& detail)
      : std::runtime_error(detail), name_(std::move(name)), module_(std::move(module)) {}
  const std::string& name() const { return name_; }
  const std::string& module() const { return module_; }

 private:
  std::string name_;
  std::string module_;
};

#define RUELLE_ERROR(Type, Module)                                     \
  class Type : public Error {                                          \
   public:                                                             \
    explicit Type(const std::string& detail) : Error(#Type, Module, detail) {} \
  };

RUELLE_ERROR(NonExpanding, "maps")
RUELLE_ERROR(ConvergenceFailure, "maps")
RUELLE_ERROR(InvalidContractingMap, "maps")
RUELLE_ERROR(DegenerateFit, "transfer")
RUELLE_ERROR(NoConvergence, "spectral")
RUELLE_ERROR(SlowDecay, "limits")
RUELLE_ERROR(NotHyperbolic, "toral")
RUELLE_ERROR(NotSymmetric, "toral")
RUELLE_ERROR(RegularityViolation, "toral")
RUELLE_ERROR(TooShort, "toral")
RUELLE_ERROR(NotMatching, "toral")
RUELLE_ERROR(NotPreMatching, "toral")
RUELLE_ERROR(PreMatchingNotFound, "toral")
RUELLE_ERROR(ConeViolation, "toral")
RUELLE_ERROR(Overflow, "toral")

#undef RUELLE_ERROR

}  // namespace ruelle
