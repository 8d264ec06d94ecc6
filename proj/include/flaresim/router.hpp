#pragma once

#include <cstdint>
#include <vector>

#include "flaresim/controller.hpp"
#include "flaresim/rng.hpp"

namespace flaresim {

enum class Tier : uint8_t { VM = 0, Serverless = 1 };

// Per-request weighted tier choice. A request that has touched serverless
// once stays there for all remaining hops (no bouncing back to pods mid
// chain). Every non-sticky decision consumes exactly one uniform draw, even
// when the weights are degenerate, so runs with the serverless path disabled
// stay draw-for-draw identical to baseline runs.
class Router {
 public:
  explicit Router(size_t n_services);

  void set_weights(uint16_t svc, RoutingWeights w) { table_[svc] = w; }
  const RoutingWeights& weights(uint16_t svc) const { return table_[svc]; }

  Tier route(uint16_t svc, bool sticky_serverless, RngStream& rng);

  // Cumulative hop arrivals, fed to the measurement loop.
  const std::vector<uint64_t>& total_counts() const { return total_; }
  const std::vector<uint64_t>& vm_counts() const { return vm_; }
  const std::vector<uint64_t>& serverless_counts() const { return serverless_; }

 private:
  std::vector<RoutingWeights> table_;
  std::vector<uint64_t> total_;
  std::vector<uint64_t> vm_;
  std::vector<uint64_t> serverless_;
};

}  // namespace flaresim
