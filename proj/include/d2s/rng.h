#ifndef D2S_RNG_H_
#define D2S_RNG_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace d2s {

// Counter-based generator: the stream is a pure function of
// (seed, purpose, index), and draw k is splitmix64(key + k). Two streams with
// different keys never share state, so results do not depend on the order in
// which independent consumers draw.
class Rng {
 public:
  Rng(uint64_t seed, std::string_view purpose, uint64_t index = 0);

  uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();   // standard normal, Box-Muller
  size_t below(size_t n);  // uniform in [0, n), n > 0
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t key() const { return key_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

uint64_t hash_string(std::string_view s);
uint64_t splitmix64(uint64_t x);

}  // namespace d2s

#endif  // D2S_RNG_H_
