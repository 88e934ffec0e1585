#include "qindex/hash.hpp"

#include <fmt/format.h>

namespace qindex {

uint64_t fnv1a(std::span<const unsigned char> bytes, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a(std::string_view text) {
  return fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::string fnv1a_hex(std::string_view text) { return to_hex(fnv1a(text)); }

std::string to_hex(uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace qindex
