#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qlink::des {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Keyed hash mapped to [0,1). Used where both nodes must derive the same
/// pseudo-random decision from shared data (seed, tag, index) without
/// exchanging messages.
inline double keyed_unit(std::uint64_t seed, std::string_view tag, std::uint64_t x) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(fnv1a(tag) ^ splitmix64(x)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::uint32_t keyed_pick(std::uint64_t seed, std::string_view tag, std::uint64_t x,
                                std::uint32_t n) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(fnv1a(tag) ^ splitmix64(x ^ 0x5a5a5a5aull)));
  return static_cast<std::uint32_t>(h % n);
}

/// One root seed, named derived substreams. Adding a stream never perturbs
/// the draws of the others.
class RngPool {
 public:
  explicit RngPool(std::uint64_t root_seed) : root_(root_seed) {}

  std::mt19937_64& stream(std::string_view name) {
    auto it = streams_.find(name);
    if (it == streams_.end()) {
      std::uint64_t s = splitmix64(root_ ^ splitmix64(fnv1a(name)));
      it = streams_.emplace(std::string(name), std::mt19937_64(s)).first;
    }
    return it->second;
  }

  std::uint64_t root_seed() const { return root_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return fnv1a(s); }
  };
  struct Eq {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const { return a == b; }
  };
  std::uint64_t root_;
  std::unordered_map<std::string, std::mt19937_64, Hash, Eq> streams_;
};

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& g, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(g) < p;
}

/// Samples an index with the given (nonnegative, ~normalized) weights.
inline int sample_index(std::mt19937_64& g, const std::vector<double>& probs) {
  double u = uniform01(g);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace qlink::des
