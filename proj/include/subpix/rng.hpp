#pragma once

#include <cstdint>

namespace subpix {

/// Counter-based uniform generator. Every draw is a pure function of
/// (seed, stream id, draw index), so streams can be copied across threads
/// and replayed draw-for-draw regardless of scheduling.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t next_u64() { return word(index_++); }

  /// Uniform draw in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t draw_index() const { return index_; }

  void seek(std::uint64_t draw_index) { index_ = draw_index; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  // splitmix64 finalizer, applied once per absorbed word.
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t word(std::uint64_t index) const {
    constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    std::uint64_t h = mix(seed_ + kGolden);
    h = mix(h ^ (stream_ + kGolden));
    h = mix(h ^ (index + kGolden));
    return h;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t index_ = 0;
};

}  // namespace subpix
