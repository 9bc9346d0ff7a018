#pragma once

#include <filesystem>
#include <string>

#include <doctest.h>

#include "error.hpp"

namespace testutil {

// Code of the kitnet::Error thrown by f, or -1 when f returns normally
// and -2 for any other exception.
template <class F>
int error_code_of(F&& f) {
  try {
    f();
  } catch (const kitnet::Error& e) {
    return static_cast<int>(e.code());
  } catch (...) {
    return -2;
  }
  return -1;
}

inline int code(kitnet::ErrorCode c) { return static_cast<int>(c); }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kitnet_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
