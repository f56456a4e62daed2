#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

// Sibling executables are installed next to the running binary.
inline std::string sibling_executable(const std::string& name) {
  std::error_code ec;
  const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (ec) return name;
  return (self.parent_path() / name).string();
}
