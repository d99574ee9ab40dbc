#pragma once

#include <stdexcept>
#include <string>

namespace crowdstream {

// Configuration could not be parsed or is inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Capacity or encounter trace is malformed or does not cover the run.
class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An auction was invoked with inputs its rules cannot resolve.
class AuctionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Brute-force oracle asked to enumerate an instance beyond its limits.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdstream
