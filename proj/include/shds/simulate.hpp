#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shds/core.hpp"
#include "shds/random.hpp"
#include "shds/system.hpp"

namespace shds {

enum class CDPolicy { jump_priority, flow_priority };

// How a set-valued map is resolved during simulation. For flows, random means
// one constant lambda per trial; for jumps, a fresh lambda per jump.
struct SelectionPolicy {
  enum class Kind { extreme, random, fixed };
  Kind kind = Kind::extreme;
  double value = 1.0;

  static SelectionPolicy extreme() { return {Kind::extreme, 1.0}; }
  static SelectionPolicy random() { return {Kind::random, 1.0}; }
  static SelectionPolicy fixed(double lambda) { return {Kind::fixed, lambda}; }
};

struct SimConfig {
  double step_h = 1e-3;
  double horizon_t = 10.0;
  int horizon_j = 1000;
  CDPolicy cd_policy = CDPolicy::jump_priority;
  SelectionPolicy flow_selection = SelectionPolicy::extreme();
  SelectionPolicy jump_selection = SelectionPolicy::random();
  double event_tol = 1e-10;

  void validate() const;
};

struct FlowSample {
  double t = 0.0;
  StateVector y;
};

struct FlowSegment {
  HybridTime start;
  std::vector<FlowSample> samples;

  double end_time() const { return samples.back().t; }
  const StateVector& end_state() const { return samples.back().y; }
};

enum class FlowExit { entered_D, left_C, horizon, observer_stop };

struct FlowResult {
  FlowSegment segment;
  FlowExit exit = FlowExit::horizon;
};

struct JumpRecord {
  HybridTime time;  // (t, j) of the pre-state
  StateVector pre;
  Vector v;
  StateVector post;
  double selection = 1.0;
};

enum class Termination {
  horizon_reached,
  left_C_and_D,
  jump_budget_exhausted,
  observer_stop
};

struct HybridArc {
  std::vector<FlowSegment> segments;
  std::vector<JumpRecord> jumps;
  Termination termination = Termination::horizon_reached;
  double flow_lambda = 1.0;

  HybridTime end_time() const;
  const StateVector& end_state() const;
  std::size_t sample_count() const;
};

std::string to_string(Termination t);
std::string to_string(FlowExit e);

// Raised when the state becomes non-finite; carries the last finite state.
class NonFiniteStateError : public std::runtime_error {
 public:
  NonFiniteStateError(const StateVector& last, double t);
  const StateVector& last_finite() const { return last_; }
  double time() const { return t_; }

 private:
  StateVector last_;
  double t_;
};

// Streaming hook: sees every sample (flow samples and post-jump states).
// Returning false stops the arc with Termination::observer_stop. With
// record_samples off, segments keep only their first and last samples.
struct ArcObserver {
  std::function<bool(const HybridTime&, const StateVector&)> on_sample;
  bool record_samples = true;
};

// Constant flow selection lambda for a trial.
double resolve_flow_lambda(const SimConfig& config, const RandomStream& stream);

void rk4_step(const SPSystem& system, const StateVector& y, double h, double lambda,
              StateVector& out);

FlowResult integrate_flow(const SPSystem& system, const StateVector& y0,
                          const SimConfig& config, HybridTime start = {},
                          std::optional<double> lambda = std::nullopt,
                          const ArcObserver* observer = nullptr);

// One logical draw from the measure stream; the jump selection (if random)
// uses the same draw index on the selection channel.
JumpRecord execute_jump(const SPSystem& system, const StateVector& y, RandomStream& stream,
                        const SimConfig& config, HybridTime time = {});

HybridArc simulate_arc(const SPSystem& system, const StateVector& y0, RandomStream stream,
                       const SimConfig& config, const ArcObserver* observer = nullptr);

}  // namespace shds
