#include "shds/random.hpp"

#include <cmath>
#include <numbers>

namespace shds {

std::uint64_t Draw::bits() { return mix64(key_ ^ mix64(++sub_)); }

double Draw::uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

double Draw::uniform_open() {
  return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
}

double Draw::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomStream::key(std::uint64_t k) const {
  std::uint64_t h = mix64(seed_);
  h = mix64(h ^ (trial_ * 0xD1B54A32D192ED03ULL));
  h = mix64(h ^ (channel_ * 0x8CB92BA72F3D8DD7ULL));
  return mix64(h ^ (k * 0xA24BAED4963EE407ULL));
}

}  // namespace shds
