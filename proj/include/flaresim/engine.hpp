#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace flaresim {

enum class EventKind : uint8_t {
  RequestArrival,
  HopStart,
  HopComplete,
  PodReady,
  VmReady,
  InstanceWarm,
  ControllerTick,
  HpaTick,
  CaTick,
  NodeFailure,
  InstanceReap,
  RequestTimeout,
};

const char* event_kind_name(EventKind k);

// Discrete-event core: a virtual clock and a queue ordered by (time, sequence
// number), so simultaneous events dispatch in scheduling order and runs are
// reproducible. Scheduling into the past is a hard error.
class EventQueue {
 public:
  using LogSink = std::function<void(double t, EventKind kind, const std::string& note)>;

  double now() const { return now_; }
  uint64_t dispatched() const { return dispatched_; }
  bool empty() const { return heap_.empty(); }

  void schedule(double t, EventKind kind, std::function<void()> fire, std::string note = {});

  // Dispatches everything with time <= end, then advances the clock to end.
  void run_until(double end_s);

  // Dispatches until the queue is empty (events may keep scheduling).
  void drain();

  // When set, every dispatched event is reported; events may opt out of the
  // log by carrying the suppress marker as note.
  void set_log_sink(LogSink sink) { sink_ = std::move(sink); }
  bool logging() const { return static_cast<bool>(sink_); }

  // Emits a log line at the current clock from inside a fire callback. Used
  // by events that suppress their scheduled note because only the callback
  // knows whether anything actually happened.
  void log_now(EventKind kind, const std::string& note) {
    if (sink_) sink_(now_, kind, note);
  }

  static constexpr const char* kSuppressLog = "\x01";

 private:
  struct Item {
    double t;
    uint64_t seq;
    EventKind kind;
    std::string note;
    std::function<void()> fire;
    bool operator>(const Item& o) const {
      if (t != o.t) return t > o.t;
      return seq > o.seq;
    }
  };

  void dispatch_one();

  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap_;
  double now_ = 0.0;
  uint64_t next_seq_ = 0;
  uint64_t dispatched_ = 0;
  LogSink sink_;
};

}  // namespace flaresim
