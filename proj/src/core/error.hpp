#pragma once

#include <stdexcept>
#include <string>

namespace kitnet {

// Mirrors the status codes of the C API one-to-one.
enum class ErrorCode {
  kInvalidArgument = 1,
  kParse = 2,
  kIo = 3,
  kNotWatertight = 4,
  kDegenerate = 5,
  kEmptyForeground = 6,
  kSampling = 7,
  kProtocol = 8,
  kTransport = 9,
  kConfig = 10,
  kSizeMismatch = 11,
  kNotFound = 12,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace kitnet
