#ifndef DISTLQR_RNG_HPP
#define DISTLQR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace distlqr {

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood). Used only to derive stream keys,
// never to produce sample streams directly.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += UINT64_C(0x9E3779B97F4A7C15));
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = UINT64_C(0xcbf29ce484222325);
  for (unsigned char c : s) {
    h ^= c;
    h *= UINT64_C(0x100000001b3);
  }
  return h;
}

}  // namespace detail

// Deterministic substream key derivation: key' = mix(mix(key ^ fnv1a(tag)) ^ index).
// Every consumer that needs an independent stream derives one through this and
// never shares engine state, so results do not depend on evaluation order.
inline std::uint64_t derive_key(std::uint64_t key, std::string_view tag,
                                std::uint64_t index) {
  std::uint64_t s = key ^ detail::fnv1a64(tag);
  std::uint64_t mixed = detail::splitmix64(s);
  s = mixed ^ index;
  return detail::splitmix64(s);
}

// A seeded random stream: a mt19937_64 engine plus the key it was derived
// from. Distribution sampling is implemented here (not via std::*_distribution)
// so that equal keys give bit-equal streams independent of the standard
// library in use.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), engine_(key) {}

  std::uint64_t key() const { return key_; }

  // Child stream; does not disturb this stream's state.
  RngStream substream(std::string_view tag, std::uint64_t index) const {
    return RngStream(derive_key(key_, tag, index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Marsaglia polar; caches the spare deviate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace distlqr

#endif  // DISTLQR_RNG_HPP
