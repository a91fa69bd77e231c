#ifndef MANIREG_ERROR_HPP
#define MANIREG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace manireg {

/// Exception type thrown by every module. Carries the name of the module
/// that raised it and a short remediation hint for command-line users.
class Error : public std::runtime_error {
public:
  Error(std::string module, const std::string& message, std::string hint = {})
      : std::runtime_error(module + ": " + message),
        module_(std::move(module)),
        hint_(std::move(hint)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& hint() const noexcept { return hint_; }

private:
  std::string module_;
  std::string hint_;
};

/// Raised when vector lengths do not match the operator or mesh they are
/// used with.
class DimensionError : public Error {
public:
  DimensionError(std::string module, const std::string& what_arg, long expected, long actual)
      : Error(std::move(module),
              what_arg + ": expected length " + std::to_string(expected) + ", got " +
                  std::to_string(actual),
              "check that the field file matches the mesh or point set") {}
};

namespace detail {

inline void require_size(const char* module, const char* what_arg, long expected, long actual) {
  if (expected != actual) throw DimensionError(module, what_arg, expected, actual);
}

} // namespace detail
} // namespace manireg

#endif
