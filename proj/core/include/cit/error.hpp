#pragma once
#include <stdexcept>
#include <string>

namespace cit {

/// Base of every error raised by the library; the message is prefixed by the
/// owning module so the driver can report where a failure originated.
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(module) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Raised when a request does not fit the grid, the time axis or memory.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cit
