#include "walshflow/rng.hpp"

namespace walshflow {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : seed_(master_seed), index_(stream_index) {
  std::uint64_t h = master_seed;
  std::uint64_t key = splitmix64(h) ^ (stream_index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
  for (auto& w : s_) w = splitmix64(key);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream::result_type RngStream::operator()() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double RngStream::uniform_pos() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

double RngStream::normal() { return gauss_(*this); }

RngStream RngStream::substream(std::uint64_t k) const {
  std::uint64_t h = seed_ ^ 0xA0761D6478BD642FULL;
  std::uint64_t mixed = splitmix64(h) ^ index_;
  std::uint64_t h2 = mixed;
  return RngStream(splitmix64(h2), k);
}

}  // namespace walshflow
