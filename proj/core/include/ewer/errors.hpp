#ifndef EWER_ERRORS_HPP_
#define EWER_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace ewer {

// Error categories map onto CLI exit codes: input -> 2, numeric -> 3,
// internal -> 1.
enum class ErrorCategory { input, internal, numeric };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message),
        category_(category),
        code_(std::move(code)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& code() const noexcept { return code_; }

private:
  ErrorCategory category_;
  std::string code_;
};

inline Error input_error(std::string code, const std::string& message) {
  return Error(ErrorCategory::input, std::move(code), message);
}
inline Error internal_error(std::string code, const std::string& message) {
  return Error(ErrorCategory::internal, std::move(code), message);
}
inline Error numeric_error(std::string code, const std::string& message) {
  return Error(ErrorCategory::numeric, std::move(code), message);
}

}  // namespace ewer

#endif  // EWER_ERRORS_HPP_
