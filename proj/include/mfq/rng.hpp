#ifndef MFQ_RNG_HPP
#define MFQ_RNG_HPP

#include <cmath>
#include <cstdint>

namespace mfq {

// splitmix64; used to derive independent stream seeds from (root seed,
// particle index, window index) so that results do not depend on the order
// in which particles or windows are processed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with a counter-derived seed.
class RngStream {
 public:
  RngStream(std::uint64_t root, std::uint64_t particle, std::uint64_t window) {
    std::uint64_t m = root;
    m ^= 0x632be59bd9b4e019ULL + splitmix64(m);
    m ^= particle * 0x9e3779b97f4a7c15ULL;
    (void)splitmix64(m);
    m ^= window * 0xd1342543de82ef95ULL;
    for (auto& word : s_) word = splitmix64(m);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on (0, 1)
  double uniform() {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int b) { return (v << b) | (v >> (64 - b)); }
  std::uint64_t s_[4];
};

}  // namespace mfq

#endif
