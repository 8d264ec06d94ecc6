#include "flaresim/engine.hpp"

#include <fmt/format.h>

#include <limits>

#include "flaresim/errors.hpp"

namespace flaresim {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::RequestArrival: return "RequestArrival";
    case EventKind::HopStart: return "HopStart";
    case EventKind::HopComplete: return "HopComplete";
    case EventKind::PodReady: return "PodReady";
    case EventKind::VmReady: return "VmReady";
    case EventKind::InstanceWarm: return "InstanceWarm";
    case EventKind::ControllerTick: return "ControllerTick";
    case EventKind::HpaTick: return "HpaTick";
    case EventKind::CaTick: return "CaTick";
    case EventKind::NodeFailure: return "NodeFailure";
    case EventKind::InstanceReap: return "InstanceReap";
    case EventKind::RequestTimeout: return "RequestTimeout";
  }
  return "?";
}

void EventQueue::schedule(double t, EventKind kind, std::function<void()> fire,
                          std::string note) {
  if (t < now_ - 1e-12)
    throw SimulationError(fmt::format("event {} scheduled at {} before current time {}",
                                      event_kind_name(kind), t, now_));
  if (t < now_) t = now_;
  heap_.push(Item{t, next_seq_++, kind, std::move(note), std::move(fire)});
}

void EventQueue::dispatch_one() {
  // priority_queue::top is const; moving the payload out is safe because the
  // element is popped immediately after.
  Item& top = const_cast<Item&>(heap_.top());
  Item item = std::move(top);
  heap_.pop();
  now_ = item.t;
  ++dispatched_;
  if (sink_ && item.note != kSuppressLog) sink_(item.t, item.kind, item.note);
  item.fire();
}

void EventQueue::run_until(double end_s) {
  while (!heap_.empty() && heap_.top().t <= end_s) dispatch_one();
  if (now_ < end_s) now_ = end_s;
}

void EventQueue::drain() {
  while (!heap_.empty()) dispatch_one();
}

}  // namespace flaresim
