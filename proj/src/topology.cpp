#include "flaresim/topology.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "flaresim/errors.hpp"

namespace flaresim {

namespace {

std::map<std::string, size_t> name_index(const std::vector<ServiceSpec>& services) {
  std::map<std::string, size_t> idx;
  for (size_t i = 0; i < services.size(); ++i) idx.emplace(services[i].name, i);
  return idx;
}

// Returns a cycle as "a -> b -> a" if one exists.
std::string find_cycle(const std::vector<ServiceSpec>& services,
                       const std::map<std::string, size_t>& idx) {
  enum { White, Grey, Black };
  std::vector<int> color(services.size(), White);
  std::vector<size_t> stack;

  std::string cycle;
  auto dfs = [&](auto&& self, size_t u) -> bool {
    color[u] = Grey;
    stack.push_back(u);
    for (const auto& d : services[u].downstream) {
      auto it = idx.find(d);
      if (it == idx.end()) continue;  // reported separately
      size_t v = it->second;
      if (color[v] == Grey) {
        auto from = std::find(stack.begin(), stack.end(), v);
        for (auto p = from; p != stack.end(); ++p)
          cycle += services[*p].name + " -> ";
        cycle += services[v].name;
        return true;
      }
      if (color[v] == White && self(self, v)) return true;
    }
    stack.pop_back();
    color[u] = Black;
    return false;
  };
  for (size_t i = 0; i < services.size(); ++i)
    if (color[i] == White && dfs(dfs, i)) return cycle;
  return {};
}

}  // namespace

void validate_graph(const std::vector<ServiceSpec>& services,
                    const std::vector<Entrypoint>& entrypoints) {
  std::vector<std::string> problems;
  if (services.empty()) problems.push_back("no services defined");

  auto idx = name_index(services);
  if (idx.size() != services.size()) {
    std::map<std::string, int> seen;
    for (const auto& s : services)
      if (++seen[s.name] == 2)
        problems.push_back(fmt::format("duplicate service name '{}'", s.name));
  }

  for (const auto& s : services) {
    if (s.name.empty()) problems.push_back("service with empty name");
    if (!(s.service_time_ms > 0.0) || !std::isfinite(s.service_time_ms))
      problems.push_back(fmt::format("service '{}': service_time_ms must be > 0", s.name));
    if (!(s.per_pod_capacity_rps > 0.0) || !std::isfinite(s.per_pod_capacity_rps))
      problems.push_back(fmt::format("service '{}': per_pod_capacity_rps must be > 0", s.name));
    if (!(s.vcpu_per_pod > 0.0) || !std::isfinite(s.vcpu_per_pod))
      problems.push_back(fmt::format("service '{}': vcpu_per_pod must be > 0", s.name));
    if (s.concurrency_per_pod < 1)
      problems.push_back(fmt::format("service '{}': concurrency_per_pod must be >= 1", s.name));
    for (const auto& d : s.downstream) {
      if (d == s.name)
        problems.push_back(fmt::format("service '{}' calls itself", s.name));
      else if (!idx.count(d))
        problems.push_back(fmt::format("service '{}' calls unknown service '{}'", s.name, d));
    }
  }

  std::string cycle = find_cycle(services, idx);
  if (!cycle.empty()) problems.push_back(fmt::format("call graph has a cycle: {}", cycle));

  if (entrypoints.empty()) problems.push_back("no entrypoints defined");
  double wsum = 0.0;
  for (const auto& e : entrypoints) {
    if (!idx.count(e.service))
      problems.push_back(fmt::format("entrypoint '{}' is not a service", e.service));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      problems.push_back(fmt::format("entrypoint '{}': weight must be > 0", e.service));
    else
      wsum += e.weight;
  }
  if (!entrypoints.empty() && std::abs(wsum - 1.0) > 1e-9)
    problems.push_back(fmt::format("entrypoint weights sum to {}, expected 1 within 1e-9", wsum));

  // Depth check only makes sense on an acyclic graph with resolvable names.
  if (cycle.empty() && problems.empty()) {
    for (size_t i = 0; i < services.size(); ++i) {
      size_t depth = 0;
      auto count = [&](auto&& self, size_t u) -> void {
        ++depth;
        for (const auto& d : services[u].downstream) self(self, idx.at(d));
      };
      count(count, i);
      if (depth > kMaxPathLen)
        problems.push_back(fmt::format(
            "call path from '{}' expands to {} hops, max is {}", services[i].name,
            depth, kMaxPathLen));
    }
  }

  if (!problems.empty()) {
    std::string msg = "invalid service graph:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
}

ServiceGraph::ServiceGraph(std::vector<ServiceSpec> services,
                           std::vector<Entrypoint> entrypoints)
    : services_(std::move(services)), entrypoints_(std::move(entrypoints)) {
  validate_graph(services_, entrypoints_);
  auto idx = name_index(services_);

  paths_.resize(services_.size());
  for (size_t i = 0; i < services_.size(); ++i) {
    auto expand = [&](auto&& self, size_t u) -> void {
      paths_[i].push_back(static_cast<uint16_t>(u));
      for (const auto& d : services_[u].downstream) self(self, idx.at(d));
    };
    expand(expand, i);
  }

  double cum = 0.0;
  for (const auto& e : entrypoints_) {
    entry_idx_.push_back(idx.at(e.service));
    cum += e.weight;
    entry_cum_.push_back(cum);
  }
  entry_cum_.back() = 1.0;  // absorb the 1e-9 tolerance
}

size_t ServiceGraph::index_of(const std::string& name) const {
  for (size_t i = 0; i < services_.size(); ++i)
    if (services_[i].name == name) return i;
  throw std::invalid_argument(fmt::format("unknown service '{}'", name));
}

const std::vector<uint16_t>& ServiceGraph::sample_call_path(RngStream& rng) const {
  if (entry_idx_.size() == 1) return paths_[entry_idx_[0]];
  double u = rng.uniform();
  auto it = std::upper_bound(entry_cum_.begin(), entry_cum_.end(), u);
  size_t k = std::min(static_cast<size_t>(it - entry_cum_.begin()), entry_idx_.size() - 1);
  return paths_[entry_idx_[k]];
}

double throughput_capacity(const ServiceSpec& spec, int ready_pods) {
  if (ready_pods < 0) throw std::invalid_argument("throughput_capacity: ready_pods < 0");
  return spec.per_pod_capacity_rps * static_cast<double>(ready_pods);
}

}  // namespace flaresim
