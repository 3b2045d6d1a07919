#ifndef SHEETWALK_ERRORS_HPP
#define SHEETWALK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sheetwalk {

/// Invalid user-facing configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read or written; the message carries the path.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A Brownian path ended before a stopping time was reached.
class HorizonExhausted : public std::runtime_error {
public:
  HorizonExhausted(const std::string& what, std::size_t index_reached)
      : std::runtime_error(what), index_reached_(index_reached) {}

  std::size_t index_reached() const { return index_reached_; }

private:
  std::size_t index_reached_;
};

} // namespace sheetwalk

#endif
