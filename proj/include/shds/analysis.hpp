#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shds/foster.hpp"
#include "shds/random.hpp"
#include "shds/simulate.hpp"
#include "shds/system.hpp"

namespace shds {

using InitialSampler = std::function<StateVector(RandomStream&)>;

// Worker count: explicit request, else SHDS_LAB_THREADS, else hardware.
int resolve_thread_count(int requested = 0);

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once; results must be written to per-index slots.
void parallel_for(long n, const std::function<void(long)>& body, int threads = 0);

struct Proportion {
  long successes = 0;
  long trials = 0;
  double value = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

// Wilson score interval (95% by default).
Proportion wilson(long successes, long trials, double z = 1.959963984540054);

struct TrialRow {
  long index = 0;
  std::string outcome;
  double hitting_time = -1.0;   // t + j at first entry, -1 if none
  double settling_time = 0.0;   // last t + j outside the ball
  double max_distance = 0.0;    // max of the distance surrogate
  double final_distance = 0.0;
  long rejected_initial = 0;
};

struct TrialReport {
  std::string estimand;
  long trials = 0;
  std::uint64_t master_seed = 0;
  double eps_ball = 0.0;
  double T_after = 0.0;
  double horizon = 0.0;
  Proportion containment_all;
  Proportion containment_tail;
  Proportion hit;
  Proportion stopped;
  Proportion timed_out;
  Proportion nonfinite;
  Proportion success;
  long rejected_initial = 0;
  std::vector<double> hitting_times;
  std::vector<TrialRow> rows;

  // Empirical quantile of hitting times (recurrence) or settling times.
  double hitting_quantile(double p) const;
  double settling_quantile(double p) const;
};

// Distance to the attractor surrogate max(|x|_A, |z|_M(x)).
double attractor_distance(const CertificateData& cert, const StateVector& y);

// Draws an initial state in C u D, resampling rejected draws.
StateVector draw_initial(const SPSystem& system, const InitialSampler& sampler,
                         RandomStream& stream, long& rejected);

TrialReport estimate_containment(const SPSystem& system, const CertificateData& cert,
                                 const InitialSampler& init_set, double eps_ball, double T_after,
                                 long trials, std::uint64_t master_seed, const SimConfig& config,
                                 int threads = 0);

// Success = hit O_chi or stopped (left C u D) within t + j <= horizon.
TrialReport estimate_recurrence(const SPSystem& system, const CertificateData& cert,
                                const InitialSampler& init_set, long trials, double horizon,
                                std::uint64_t master_seed, const SimConfig& config,
                                int threads = 0);

struct UniformityRow {
  double R = 0.0;
  double quantile95 = 0.0;
  TrialReport report;
};

enum class SweepStatistic { hitting_time, settling_time };

std::vector<UniformityRow> uniformity_sweep(
    const std::function<TrialReport(double R, long trials)>& estimator,
    const std::vector<double>& R_values, long trials,
    SweepStatistic statistic = SweepStatistic::hitting_time);

enum class SweepMetric { containment, recurrence, monitor_violations };

std::string to_string(SweepMetric m);
SweepMetric parse_sweep_metric(const std::string& s);

struct SweepInstance {
  SPSystem system;
  CertificateData cert;
  ConstantsLedger ledger;
  InitialSampler sampler;
  SimConfig config;
};

struct SweepSettings {
  double eps_ball = 0.5;
  double T_after = 0.0;
  double horizon = 100.0;
  std::uint64_t master_seed = 1;
  int threads = 0;
};

struct EpsilonRow {
  double epsilon = 0.0;
  double metric = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mean_final_distance = 0.0;
  double epsilon_star = 0.0;
};

std::vector<EpsilonRow> epsilon_sweep(const std::function<SweepInstance(double)>& instance,
                                      const std::vector<double>& eps_values, SweepMetric metric,
                                      long trials, const SweepSettings& settings = {});

}  // namespace shds
