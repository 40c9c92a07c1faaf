#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace beyt {

// 64-bit FNV-1a. Used to tie artifacts together, not for security.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_hex(std::string_view bytes) {
  return hash_hex(fnv1a64(bytes));
}

}  // namespace beyt
