#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace qindex {

// 64-bit FNV-1a. Used for content fingerprints, not for security.
uint64_t fnv1a(std::span<const unsigned char> bytes, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a(std::string_view text);
std::string fnv1a_hex(std::string_view text);
std::string to_hex(uint64_t value);

}  // namespace qindex
