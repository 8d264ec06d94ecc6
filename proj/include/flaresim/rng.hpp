#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace flaresim {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// One named substream of the master seed. Each simulation concern (arrivals,
// call-path sampling, service times, routing) owns its own stream so toggling
// one mechanism never perturbs the draws of another. Variates are generated
// from raw engine output rather than std distributions to keep byte-identical
// results independent of the standard library implementation.
class RngStream {
 public:
  RngStream() : gen_(0) {}
  RngStream(uint64_t master_seed, std::string_view name)
      : gen_(splitmix64(master_seed ^ fnv1a64(name))) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean; mean 0 collapses to 0.
  double exponential(double mean) {
    if (mean <= 0.0) return 0.0;
    return -mean * std::log1p(-uniform());
  }

  // Erlang-k with the given overall mean: sum of k exponentials. Always
  // consumes exactly k draws. Coefficient of variation 1/sqrt(k).
  double erlang(int k, double mean) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += exponential(mean / k);
    return sum;
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// The fixed set of substreams used by a run.
struct RngSet {
  RngStream arrivals;
  RngStream paths;
  RngStream service;
  RngStream routing;

  explicit RngSet(uint64_t master_seed)
      : arrivals(master_seed, "arrivals"),
        paths(master_seed, "paths"),
        service(master_seed, "service"),
        routing(master_seed, "routing") {}
};

}  // namespace flaresim
