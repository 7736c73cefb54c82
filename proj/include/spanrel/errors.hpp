#pragma once

#include <stdexcept>
#include <string>

namespace spanrel {

// Malformed or schema-violating input. `where` is a JSON pointer or file path.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what),
        where_(std::move(where)),
        message_(what) {}
  const std::string& where() const { return where_; }
  // The description without the location prefix.
  const std::string& message() const { return message_; }

 private:
  std::string where_;
  std::string message_;
};

// An exact solver hit its node budget before proving optimality.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spanrel
