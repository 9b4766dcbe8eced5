#pragma once

#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace walshflow {

// xoshiro256++ keyed by (master seed, stream index) through SplitMix64.
// Replicate r of an experiment always uses stream index r, so any replicate
// can be regenerated in isolation and thread count never changes results.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // uniform on [0,1)
  double uniform();
  // uniform on (0,1), never returns 0
  double uniform_pos();
  double normal();
  // index drawn from the discrete law w[0..n) (w sums to 1)
  template <class Weights>
  std::size_t categorical(const Weights& w) {
    double u = uniform();
    std::size_t n = w.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    return n - 1;
  }

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream_index() const { return index_; }

  // child stream derived from this one's key; used for per-stretch sub-streams
  RngStream substream(std::uint64_t k) const;

 private:
  std::uint64_t seed_, index_;
  std::uint64_t s_[4];
  boost::random::normal_distribution<double> gauss_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace walshflow
