#pragma once

#include <cstdint>

namespace shds {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniforms for a single logical draw. Sub-draws are a pure function of the
// draw key and their index.
class Draw {
 public:
  explicit Draw(std::uint64_t key) : key_(key) {}

  std::uint64_t bits();
  double uniform();        // [0, 1)
  double uniform_open();   // (0, 1)
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t sub_ = 0;
};

// Counter-based stream: draw k of trial i under seed s depends only on
// (s, i, channel, k). Value type; copy freely.
class RandomStream {
 public:
  RandomStream() = default;
  RandomStream(std::uint64_t master_seed, std::uint64_t trial_index,
               std::uint64_t channel = 0)
      : seed_(master_seed), trial_(trial_index), channel_(channel) {}

  // Independent stream on another channel, counter reset to zero.
  RandomStream channel(std::uint64_t c) const {
    return RandomStream(seed_, trial_, c);
  }

  // Key of draw k without advancing.
  std::uint64_t key(std::uint64_t k) const;
  Draw peek(std::uint64_t k) const { return Draw(key(k)); }
  Draw next() { return Draw(key(counter_++)); }

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t trial_index() const { return trial_; }
  std::uint64_t channel_index() const { return channel_; }
  std::uint64_t draw_counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t trial_ = 0;
  std::uint64_t channel_ = 0;
  std::uint64_t counter_ = 0;
};

// Channels used by the simulator.
inline constexpr std::uint64_t kMeasureChannel = 0;
inline constexpr std::uint64_t kJumpSelectionChannel = 1;
inline constexpr std::uint64_t kFlowSelectionChannel = 2;
inline constexpr std::uint64_t kInitialChannel = 3;

}  // namespace shds
