#pragma once

#include <cstdarg>
#include <cstdio>
#include <string>

namespace budtrack {

inline std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  va_list copy;
  va_copy(copy, args);
  const int n = std::vsnprintf(nullptr, 0, f, copy);
  va_end(copy);
  std::string s(static_cast<std::size_t>(n), '\0');
  std::vsnprintf(s.data(), s.size() + 1, f, args);
  va_end(args);
  return s;
}

}  // namespace budtrack
