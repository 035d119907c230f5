#include "shds/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shds {

void SimConfig::validate() const {
  if (!(step_h > 0.0)) throw std::invalid_argument("SimConfig: step_h must be positive");
  if (!(event_tol > 0.0)) throw std::invalid_argument("SimConfig: event_tol must be positive");
  if (!(horizon_t > 0.0)) throw std::invalid_argument("SimConfig: horizon_t must be positive");
  if (horizon_j < 0) throw std::invalid_argument("SimConfig: horizon_j must be >= 0");
  for (const SelectionPolicy* p : {&flow_selection, &jump_selection}) {
    if (p->kind == SelectionPolicy::Kind::fixed && !(p->value >= 0.0 && p->value <= 1.0)) {
      throw std::invalid_argument("SimConfig: fixed selection must lie in [0, 1]");
    }
  }
}

HybridTime HybridArc::end_time() const {
  if (jumps.size() == segments.size() && !jumps.empty()) {
    return {jumps.back().time.t, jumps.back().time.j + 1};
  }
  const FlowSegment& s = segments.back();
  return {s.end_time(), s.start.j};
}

const StateVector& HybridArc::end_state() const {
  if (jumps.size() == segments.size() && !jumps.empty()) return jumps.back().post;
  return segments.back().end_state();
}

std::size_t HybridArc::sample_count() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.samples.size();
  return n;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::left_C_and_D: return "left_C_and_D";
    case Termination::jump_budget_exhausted: return "jump_budget_exhausted";
    case Termination::observer_stop: return "observer_stop";
  }
  return "unknown";
}

std::string to_string(FlowExit e) {
  switch (e) {
    case FlowExit::entered_D: return "entered_D";
    case FlowExit::left_C: return "left_C";
    case FlowExit::horizon: return "horizon";
    case FlowExit::observer_stop: return "observer_stop";
  }
  return "unknown";
}

namespace {

std::string nonfinite_message(const StateVector& last, double t) {
  std::ostringstream os;
  os << "non-finite state after t = " << t << "; last finite x = " << format_vector(last.x)
     << ", z = " << format_vector(last.z);
  return os.str();
}

bool sign_changed(double ga, double gb) { return (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0); }

}  // namespace

NonFiniteStateError::NonFiniteStateError(const StateVector& last, double t)
    : std::runtime_error(nonfinite_message(last, t)), last_(last), t_(t) {}

double resolve_flow_lambda(const SimConfig& config, const RandomStream& stream) {
  switch (config.flow_selection.kind) {
    case SelectionPolicy::Kind::extreme: return 1.0;
    case SelectionPolicy::Kind::fixed: return config.flow_selection.value;
    case SelectionPolicy::Kind::random:
      return stream.channel(kFlowSelectionChannel).peek(0).uniform();
  }
  return 1.0;
}

void rk4_step(const SPSystem& system, const StateVector& y, double h, double lambda,
              StateVector& out) {
  StateVector k1, k2, k3, k4, tmp;
  system.derivative(y, lambda, k1);
  tmp.x = y.x + 0.5 * h * k1.x;
  tmp.z = y.z + 0.5 * h * k1.z;
  system.derivative(tmp, lambda, k2);
  tmp.x = y.x + 0.5 * h * k2.x;
  tmp.z = y.z + 0.5 * h * k2.z;
  system.derivative(tmp, lambda, k3);
  tmp.x = y.x + h * k3.x;
  tmp.z = y.z + h * k3.z;
  system.derivative(tmp, lambda, k4);
  out.x = y.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.z = y.z + (h / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
}

namespace {

struct Localized {
  double s = 0.0;
  StateVector y;
};

// Earliest partial step from y_a at which the state reaches D.
Localized localize_jump_set(const SPSystem& system, const StateVector& y_a, const StateVector& y_b,
                            double step, double lambda, double event_tol) {
  const double ga = system.jump_set.crossing(y_a);
  double lo = 0.0;
  double hi = step;
  Localized best{step, y_b};
  StateVector ym;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(system.jump_set.membership(best.y)) <= event_tol) break;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    rk4_step(system, y_a, mid, lambda, ym);
    const bool crossed = sign_changed(ga, system.jump_set.crossing(ym)) ||
                         system.jump_set.membership(ym) <= event_tol;
    if (crossed) {
      hi = mid;
      best = {mid, ym};
    } else {
      lo = mid;
    }
  }
  return best;
}

// Last partial step from y_a that stays in C.
Localized localize_flow_exit(const SPSystem& system, const StateVector& y_a, double step,
                             double lambda, double event_tol) {
  double lo = 0.0;
  double hi = step;
  Localized inside{0.0, y_a};
  StateVector ym;
  for (int it = 0; it < 200; ++it) {
    if (system.flow_set.membership(inside.y) >= -event_tol) break;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    rk4_step(system, y_a, mid, lambda, ym);
    if (system.flow_set.contains(ym)) {
      lo = mid;
      inside = {mid, ym};
    } else {
      hi = mid;
    }
  }
  return inside;
}

}  // namespace

FlowResult integrate_flow(const SPSystem& system, const StateVector& y0, const SimConfig& config,
                          HybridTime start, std::optional<double> lambda_opt,
                          const ArcObserver* observer) {
  config.validate();
  if (!y0.all_finite()) throw std::invalid_argument("integrate_flow: initial state is not finite");
  if (!system.flow_set.contains(y0)) {
    std::ostringstream os;
    os << "integrate_flow: initial state not in C (membership " << system.flow_set.membership(y0)
       << ")";
    throw std::invalid_argument(os.str());
  }
  double lambda = 1.0;
  if (lambda_opt) {
    lambda = *lambda_opt;
  } else if (config.flow_selection.kind == SelectionPolicy::Kind::random) {
    throw std::invalid_argument("integrate_flow: random flow selection needs an explicit lambda");
  } else {
    lambda = resolve_flow_lambda(config, RandomStream());
  }

  const bool watch_jump_set =
      config.cd_policy == CDPolicy::jump_priority && !system.jump_set.empty();
  const bool record = !observer || observer->record_samples;

  FlowResult result;
  FlowSegment& seg = result.segment;
  seg.start = start;
  seg.samples.push_back({start.t, y0});

  auto emit = [&](double t, const StateVector& y) {
    if (record || seg.samples.size() == 1) {
      seg.samples.push_back({t, y});
    } else {
      seg.samples.back() = {t, y};
    }
    if (observer && observer->on_sample) return observer->on_sample({t, start.j}, y);
    return true;
  };

  if (watch_jump_set && system.jump_set.contains(y0)) {
    result.exit = FlowExit::entered_D;
    return result;
  }
  const double t_end = config.horizon_t;
  if (start.t >= t_end) {
    result.exit = FlowExit::horizon;
    return result;
  }

  const double h = config.step_h;
  StateVector y = y0;
  StateVector yb;
  double t = start.t;
  for (long k = 0;; ++k) {
    double tb = start.t + static_cast<double>(k + 1) * h;
    double step = tb - t;
    if (tb >= t_end - 1e-12 * std::max(1.0, t_end)) {
      tb = t_end;
      step = t_end - t;
    }
    if (!(step > 0.0)) {
      result.exit = FlowExit::horizon;
      return result;
    }
    rk4_step(system, y, step, lambda, yb);
    if (!yb.all_finite()) throw NonFiniteStateError(y, t);

    if (watch_jump_set) {
      const double ga = system.jump_set.crossing(y);
      const double gb = system.jump_set.crossing(yb);
      if (sign_changed(ga, gb) || system.jump_set.contains(yb)) {
        Localized ev = localize_jump_set(system, y, yb, step, lambda, config.event_tol);
        if (system.jump_set.contains(ev.y)) {
          emit(t + ev.s, ev.y);
          result.exit = FlowExit::entered_D;
          return result;
        }
      }
    }
    if (!system.flow_set.contains(yb)) {
      Localized ev = localize_flow_exit(system, y, step, lambda, config.event_tol);
      if (ev.s > 0.0) emit(t + ev.s, ev.y);
      result.exit = FlowExit::left_C;
      return result;
    }
    const bool keep_going = emit(tb, yb);
    std::swap(y, yb);
    t = tb;
    if (!keep_going) {
      result.exit = FlowExit::observer_stop;
      return result;
    }
    if (t >= t_end) {
      result.exit = FlowExit::horizon;
      return result;
    }
  }
}

JumpRecord execute_jump(const SPSystem& system, const StateVector& y, RandomStream& stream,
                        const SimConfig& config, HybridTime time) {
  if (!system.jump_set.contains(y)) {
    std::ostringstream os;
    os << "execute_jump: state not in D (membership " << system.jump_set.membership(y) << ")";
    throw std::invalid_argument(os.str());
  }
  JumpRecord rec;
  rec.time = time;
  rec.pre = y;
  const std::uint64_t k = stream.draw_counter();
  Draw draw = stream.next();
  rec.v = system.measure.sample_from(draw);
  switch (config.jump_selection.kind) {
    case SelectionPolicy::Kind::extreme: rec.selection = 1.0; break;
    case SelectionPolicy::Kind::fixed: rec.selection = config.jump_selection.value; break;
    case SelectionPolicy::Kind::random:
      rec.selection = stream.channel(kJumpSelectionChannel).peek(k).uniform();
      break;
  }
  rec.post = system.jump_map(y, rec.v, rec.selection);
  if (!rec.post.all_finite()) throw NonFiniteStateError(y, time.t);
  return rec;
}

HybridArc simulate_arc(const SPSystem& system, const StateVector& y0, RandomStream stream,
                       const SimConfig& config, const ArcObserver* observer) {
  config.validate();
  if (!y0.all_finite()) throw std::invalid_argument("simulate_arc: initial state is not finite");
  if (y0.x.size() != system.n_x || y0.z.size() != system.n_z) {
    throw std::invalid_argument("simulate_arc: initial state has the wrong dimension");
  }
  if (!system.flow_set.contains(y0) && !system.jump_set.contains(y0)) {
    throw std::invalid_argument("simulate_arc: initial state not in C or D");
  }
  HybridArc arc;
  arc.flow_lambda = resolve_flow_lambda(config, stream);

  auto notify = [&](const HybridTime& ht, const StateVector& y) {
    if (observer && observer->on_sample) return observer->on_sample(ht, y);
    return true;
  };
  auto point_segment = [](const HybridTime& ht, const StateVector& y) {
    FlowSegment seg;
    seg.start = ht;
    seg.samples.push_back({ht.t, y});
    return seg;
  };

  StateVector y = y0;
  HybridTime now{0.0, 0};
  if (!notify(now, y)) {
    arc.segments.push_back(point_segment(now, y));
    arc.termination = Termination::observer_stop;
    return arc;
  }
  while (true) {
    const bool in_c = system.flow_set.contains(y);
    const bool in_d = system.jump_set.contains(y);
    if (!in_c && !in_d) {
      arc.termination = Termination::left_C_and_D;
      break;
    }
    const bool jump_now = in_d && (config.cd_policy == CDPolicy::jump_priority || !in_c);
    if (jump_now) {
      arc.segments.push_back(point_segment(now, y));
    } else {
      FlowResult fr = integrate_flow(system, y, config, now, arc.flow_lambda, observer);
      arc.segments.push_back(std::move(fr.segment));
      y = arc.segments.back().end_state();
      now.t = arc.segments.back().end_time();
      if (fr.exit == FlowExit::horizon) {
        arc.termination = Termination::horizon_reached;
        break;
      }
      if (fr.exit == FlowExit::observer_stop) {
        arc.termination = Termination::observer_stop;
        break;
      }
      if (!system.jump_set.contains(y)) {
        arc.termination = Termination::left_C_and_D;
        break;
      }
    }
    if (now.j >= config.horizon_j) {
      arc.termination = Termination::jump_budget_exhausted;
      break;
    }
    JumpRecord rec = execute_jump(system, y, stream, config, now);
    y = rec.post;
    now.j += 1;
    arc.jumps.push_back(std::move(rec));
    if (!notify(now, y)) {
      arc.segments.push_back(point_segment(now, y));
      arc.termination = Termination::observer_stop;
      break;
    }
  }
  return arc;
}

}  // namespace shds
