#include "feddig/error.hpp"

namespace feddig {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kData:
      return "data";
    case ErrorCategory::kContract:
      return "contract";
    case ErrorCategory::kNumeric:
      return "numeric";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kBudget:
      return "budget";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return 2;
    case ErrorCategory::kData:
      return 3;
    case ErrorCategory::kContract:
      return 4;
    case ErrorCategory::kNumeric:
      return 5;
    case ErrorCategory::kIo:
      return 6;
    case ErrorCategory::kBudget:
      return 7;
  }
  return 1;
}

Error::Error(ErrorCategory category, const std::string& message)
    : std::runtime_error(std::string(category_name(category)) + ": " + message), category_(category) {}

}  // namespace feddig
