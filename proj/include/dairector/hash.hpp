#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace dairector {

// 64-bit FNV-1a. Used for artifact fingerprints, not for security.
class Fnv1a64 {
 public:
  Fnv1a64& update(std::span<const unsigned char> bytes) noexcept {
    for (unsigned char b : bytes) {
      state_ ^= b;
      state_ *= kPrime;
    }
    return *this;
  }

  Fnv1a64& update(std::string_view text) noexcept {
    return update(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
  }

  // Length-prefixed so that ("ab","c") and ("a","bc") hash differently.
  Fnv1a64& update_field(std::string_view text) noexcept {
    update_u64(text.size());
    return update(text);
  }

  Fnv1a64& update_u64(std::uint64_t v) noexcept {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    return update(std::span<const unsigned char>(buf, 8));
  }

  std::uint64_t digest() const noexcept { return state_; }

  std::string hex() const { return to_hex(state_); }

  static std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
  }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t state_ = kOffset;
};

}  // namespace dairector
