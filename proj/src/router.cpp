#include "flaresim/router.hpp"

namespace flaresim {

Router::Router(size_t n_services) {
  table_.assign(n_services, RoutingWeights{});
  total_.assign(n_services, 0);
  vm_.assign(n_services, 0);
  serverless_.assign(n_services, 0);
}

Tier Router::route(uint16_t svc, bool sticky_serverless, RngStream& rng) {
  ++total_[svc];
  if (sticky_serverless) {
    ++serverless_[svc];
    return Tier::Serverless;
  }
  double u = rng.uniform();
  if (u < table_[svc].serverless) {
    ++serverless_[svc];
    return Tier::Serverless;
  }
  ++vm_[svc];
  return Tier::VM;
}

}  // namespace flaresim
