#include "flaresim/trace.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "flaresim/errors.hpp"

namespace flaresim {

namespace {
constexpr double kGridTol = 1e-9;

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0' && std::isfinite(out);
}
}  // namespace

LoadTrace::LoadTrace(std::vector<double> times_s, std::vector<double> rates_rps)
    : times_(std::move(times_s)), rates_(std::move(rates_rps)) {
  if (times_.empty() || times_.size() != rates_.size())
    throw ValidationError("trace: need at least one (timestamp, rate) point");
  if (times_.size() >= 2) {
    resolution_ = times_[1] - times_[0];
    if (resolution_ <= 0.0)
      throw ValidationError("trace: timestamps must be strictly increasing");
    for (size_t i = 1; i < times_.size(); ++i) {
      double step = times_[i] - times_[i - 1];
      if (std::abs(step - resolution_) > kGridTol * std::max(1.0, std::abs(times_[i])))
        throw ValidationError(fmt::format(
            "trace: non-uniform spacing at t={} (step {} vs resolution {})",
            times_[i], step, resolution_));
    }
  }
  for (size_t i = 0; i < rates_.size(); ++i) {
    if (!std::isfinite(rates_[i]) || rates_[i] < 0.0)
      throw ValidationError(
          fmt::format("trace: rate at t={} must be finite and >= 0, got {}",
                      times_[i], rates_[i]));
  }
}

double LoadTrace::max_rate() const {
  return *std::max_element(rates_.begin(), rates_.end());
}

double LoadTrace::rate_at(double t_s) const {
  if (t_s < start_s() - kGridTol || t_s > end_s() + kGridTol)
    throw std::invalid_argument(fmt::format(
        "rate_at: t={} outside trace span [{}, {}]", t_s, start_s(), end_s()));
  t_s = std::clamp(t_s, start_s(), end_s());
  if (times_.size() == 1) return rates_[0];
  double pos = (t_s - start_s()) / resolution_;
  auto idx = static_cast<size_t>(pos);
  if (idx >= times_.size() - 1) return rates_.back();
  double frac = pos - static_cast<double>(idx);
  return rates_[idx] + frac * (rates_[idx + 1] - rates_[idx]);
}

uint64_t LoadTrace::fingerprint() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (size_t i = 0; i < times_.size(); ++i) {
    mix(times_[i]);
    mix(rates_[i]);
  }
  return h;
}

LoadTrace parse_trace_text(const std::string& text, RateUnit unit) {
  std::vector<double> times, rates;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Trim surrounding whitespace.
    size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t");
    std::string row = line.substr(b, e - b + 1);
    if (row.empty()) continue;

    size_t comma = row.find(',');
    double t = 0.0, r = 0.0;
    bool ok = comma != std::string::npos &&
              parse_double(row.substr(0, comma), t) &&
              parse_double(row.substr(comma + 1), r);
    if (!ok) {
      if (first_content) {  // optional header row
        first_content = false;
        continue;
      }
      throw ValidationError(fmt::format("trace: malformed row at line {}: '{}'", lineno, row));
    }
    first_content = false;
    times.push_back(t);
    rates.push_back(unit == RateUnit::PerMinute ? r / 60.0 : r);
  }
  if (times.empty()) throw ValidationError("trace: no data rows");
  return LoadTrace(std::move(times), std::move(rates));
}

LoadTrace parse_trace_file(const std::string& path, RateUnit unit) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError(fmt::format("trace: cannot open '{}'", path));
  std::ostringstream buf;
  buf << f.rdbuf();
  try {
    return parse_trace_text(buf.str(), unit);
  } catch (const ValidationError& err) {
    throw ValidationError(fmt::format("{}: {}", path, err.what()));
  }
}

LoadTrace scale_trace(const LoadTrace& t, double factor) {
  if (!std::isfinite(factor) || factor <= 0.0)
    throw std::invalid_argument(fmt::format("scale_trace: factor must be finite and > 0, got {}", factor));
  std::vector<double> rates = t.rates();
  for (double& r : rates) r *= factor;
  return LoadTrace(t.times(), std::move(rates));
}

LoadTrace extract_window(const LoadTrace& t, double start_s, double duration_s) {
  if (duration_s <= 0.0)
    throw std::invalid_argument("extract_window: duration must be > 0");
  if (start_s < t.start_s() - kGridTol || start_s + duration_s > t.end_s() + kGridTol)
    throw std::invalid_argument(fmt::format(
        "extract_window: [{}, {}] outside trace span [{}, {}]", start_s,
        start_s + duration_s, t.start_s(), t.end_s()));
  double res = t.size() > 1 ? t.resolution_s() : duration_s;
  std::vector<double> times, rates;
  for (double off = 0.0; off <= duration_s + kGridTol; off += res) {
    double at = std::min(start_s + off, t.end_s());
    times.push_back(off);
    rates.push_back(t.rate_at(at));
  }
  return LoadTrace(std::move(times), std::move(rates));
}

double spike_rate_at(const SpikeSpec& spec, double t_s) {
  if (t_s < spec.start_s) return spec.baseline_rps;
  double u = t_s - spec.start_s;
  if (u < spec.ramp_s)
    return spec.baseline_rps + (spec.peak_rps - spec.baseline_rps) * (u / spec.ramp_s);
  u -= spec.ramp_s;
  if (u < spec.hold_s) return spec.peak_rps;
  u -= spec.hold_s;
  if (u < spec.decay_s)
    return spec.peak_rps + (spec.baseline_rps - spec.peak_rps) * (u / spec.decay_s);
  return spec.baseline_rps;
}

LoadTrace synthesize_spike(const SpikeSpec& spec, double total_s, double resolution_s) {
  if (spec.baseline_rps < 0 || spec.peak_rps < 0)
    throw ValidationError("spike: rates must be >= 0");
  if (spec.start_s < 0 || spec.ramp_s < 0 || spec.hold_s < 0 || spec.decay_s < 0)
    throw ValidationError("spike: phase durations must be >= 0");
  if (resolution_s <= 0) throw ValidationError("spike: resolution must be > 0");
  if (total_s < spec.start_s + spec.ramp_s + spec.hold_s + spec.decay_s)
    throw ValidationError(fmt::format(
        "spike: total {}s shorter than start+ramp+hold+decay = {}s", total_s,
        spec.start_s + spec.ramp_s + spec.hold_s + spec.decay_s));
  std::vector<double> times, rates;
  size_t n = static_cast<size_t>(std::floor(total_s / resolution_s + kGridTol));
  times.reserve(n + 1);
  for (size_t i = 0; i <= n; ++i) {
    double at = static_cast<double>(i) * resolution_s;
    times.push_back(at);
    rates.push_back(spike_rate_at(spec, at));
  }
  return LoadTrace(std::move(times), std::move(rates));
}

ArrivalProcess::ArrivalProcess(LoadTrace trace, bool deterministic)
    : trace_(std::move(trace)), deterministic_(deterministic), max_rate_(trace_.max_rate()) {
  if (max_rate_ <= 0.0 && !deterministic_)
    throw ValidationError("arrivals: trace is all-zero, no arrivals can be generated");
}

double ArrivalProcess::next_after(double t_s, RngStream& rng) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double end = trace_.end_s();
  if (t_s < trace_.start_s()) t_s = trace_.start_s();

  if (deterministic_) {
    double t = t_s;
    while (t <= end) {
      double r = trace_.rate_at(t);
      if (r > 0.0) {
        double next = t + 1.0 / r;
        if (next > end) return kInf;
        return next;
      }
      // Skip dead air to the next grid point.
      double step = trace_.size() > 1 ? trace_.resolution_s() : end - t;
      if (step <= 0.0) return kInf;
      double aligned = trace_.start_s() +
                       (std::floor((t - trace_.start_s()) / step) + 1.0) * step;
      if (aligned <= t) aligned = t + step;
      t = aligned;
    }
    return kInf;
  }

  // Thinning against the global maximum gives an exact non-homogeneous
  // Poisson process for the piecewise-linear intensity.
  double t = t_s;
  while (true) {
    t += rng.exponential(1.0 / max_rate_);
    if (t > end) return kInf;
    if (rng.uniform() * max_rate_ <= trace_.rate_at(t)) return t;
  }
}

}  // namespace flaresim
