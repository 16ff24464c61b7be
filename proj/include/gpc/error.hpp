#pragma once

#include <stdexcept>
#include <string>

namespace gpc {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorCategory {
  invalid_argument,  // bad dimensions, configuration or ordering
  numerical,         // factorization or iteration breakdown
  io,                // file system failures
  format,            // malformed input files
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define GPC_DEFINE_ERROR(Name, Category)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(Category, what) {}      \
  };

GPC_DEFINE_ERROR(NotPositiveDefinite, ErrorCategory::numerical)
GPC_DEFINE_ERROR(NoConvergence, ErrorCategory::numerical)
GPC_DEFINE_ERROR(SingularMatrix, ErrorCategory::numerical)
GPC_DEFINE_ERROR(DimensionMismatch, ErrorCategory::invalid_argument)
GPC_DEFINE_ERROR(InvalidConfig, ErrorCategory::invalid_argument)
GPC_DEFINE_ERROR(InvalidTau, ErrorCategory::invalid_argument)
GPC_DEFINE_ERROR(InvalidOrder, ErrorCategory::invalid_argument)
GPC_DEFINE_ERROR(LengthMismatch, ErrorCategory::invalid_argument)
GPC_DEFINE_ERROR(DegenerateInput, ErrorCategory::invalid_argument)
GPC_DEFINE_ERROR(IoError, ErrorCategory::io)
GPC_DEFINE_ERROR(FormatError, ErrorCategory::format)

#undef GPC_DEFINE_ERROR

}  // namespace gpc
