#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fsnn {

enum class Err {
  ShapeMismatch,
  EmptyDataset,
  BadMagic,
  BadVersion,
  Truncated,
  BadFormat,
  NonDifferentiable,
  NoRelu,
  AlreadyHardened,
  ProfileMismatch,
  EmptyCalibration,
  BerBelowResolution,
  BadBitIndex,
  BadArgument,
  UnsupportedLayer,
  ConfigError,
  MissingRecord,
  IoError,
};

// All contract violations surface as Error; `code` lets tests pin the exact
// failure class instead of matching message strings.
class Error : public std::runtime_error {
public:
  Error(Err code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

inline void check(bool ok, Err code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

// FNV-1a. Stable across platforms; used for run IDs, config hashes and
// purity checks (not cryptographic).
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(uint64_t v);

}  // namespace fsnn
