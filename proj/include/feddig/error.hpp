#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feddig {

// Machine-readable failure classes; the CLI maps each to its own exit code.
enum class ErrorCategory {
  kConfig,
  kData,
  kContract,
  kNumeric,
  kIo,
  kBudget,
};

std::string_view category_name(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message);

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

inline void require(bool condition, ErrorCategory category, std::string_view message) {
  if (!condition) {
    throw Error(category, std::string(message));
  }
}

}  // namespace feddig
