#include "shds/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace shds {

int resolve_thread_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("SHDS_LAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

void parallel_for(long n, const std::function<void(long)>& body, int threads) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<long>(resolve_thread_count(threads), n));
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&]() {
    for (long i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Proportion wilson(long successes, long trials, double z) {
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  if (trials <= 0) return p;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  p.value = phat;
  p.lower = std::max(0.0, center - half);
  p.upper = std::min(1.0, center + half);
  return p;
}

namespace {

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n)));
  return values[std::min(rank, values.size()) - 1];
}

}  // namespace

double TrialReport::hitting_quantile(double p) const {
  std::vector<double> values;
  for (const auto& r : rows) {
    if (r.hitting_time >= 0.0) {
      values.push_back(r.hitting_time);
    } else if (r.outcome != "stopped") {
      values.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return nearest_rank(std::move(values), p);
}

double TrialReport::settling_quantile(double p) const {
  std::vector<double> values;
  for (const auto& r : rows) {
    values.push_back(r.outcome == "nonfinite" ? std::numeric_limits<double>::infinity()
                                              : r.settling_time);
  }
  return nearest_rank(std::move(values), p);
}

double attractor_distance(const CertificateData& cert, const StateVector& y) {
  const double dx = cert.dist_A ? cert.dist_A(y.x) : 0.0;
  const double dz = cert.manifold_distance ? cert.manifold_distance(y) : 0.0;
  return std::max(dx, dz);
}

StateVector draw_initial(const SPSystem& system, const InitialSampler& sampler,
                         RandomStream& stream, long& rejected) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    StateVector y = sampler(stream);
    if (y.all_finite() && (system.flow_set.contains(y) || system.jump_set.contains(y))) return y;
    ++rejected;
  }
  throw std::runtime_error("initial-condition sampler produced no state in C or D");
}

namespace {

Proportion count(const std::vector<TrialRow>& rows, const std::function<bool(const TrialRow&)>& pred) {
  long k = 0;
  for (const auto& r : rows)
    if (pred(r)) ++k;
  return wilson(k, static_cast<long>(rows.size()));
}

}  // namespace

TrialReport estimate_containment(const SPSystem& system, const CertificateData& cert,
                                 const InitialSampler& init_set, double eps_ball, double T_after,
                                 long trials, std::uint64_t master_seed, const SimConfig& config,
                                 int threads) {
  if (trials < 1) throw std::invalid_argument("estimate_containment: trials must be >= 1");
  if (!(eps_ball >= 0.0)) throw std::invalid_argument("estimate_containment: eps_ball must be >= 0");
  config.validate();
  struct Slot {
    TrialRow row;
    bool all = false;
    bool tail = false;
    bool stopped = false;
    bool nonfinite = false;
  };
  std::vector<Slot> slots(trials);
  parallel_for(
      trials,
      [&](long i) {
        Slot& s = slots[i];
        s.row.index = i;
        RandomStream stream(master_seed, static_cast<std::uint64_t>(i));
        RandomStream init = stream.channel(kInitialChannel);
        const StateVector y0 = draw_initial(system, init_set, init, s.row.rejected_initial);
        double max_all = 0.0;
        double max_tail = 0.0;
        double settle = 0.0;
        double last = 0.0;
        ArcObserver obs;
        obs.record_samples = false;
        obs.on_sample = [&](const HybridTime& ht, const StateVector& y) {
          const double d = attractor_distance(cert, y);
          max_all = std::max(max_all, d);
          if (ht.total() >= T_after) max_tail = std::max(max_tail, d);
          if (!(d < eps_ball)) settle = ht.total();
          last = d;
          return true;
        };
        try {
          const HybridArc arc = simulate_arc(system, y0, stream, config, &obs);
          s.stopped = arc.termination == Termination::left_C_and_D;
        } catch (const NonFiniteStateError&) {
          s.nonfinite = true;
        }
        s.all = !s.nonfinite && max_all < eps_ball;
        s.tail = !s.nonfinite && max_tail < eps_ball;
        s.row.max_distance = max_all;
        s.row.final_distance = last;
        s.row.settling_time = settle;
        s.row.outcome = s.nonfinite ? "nonfinite" : s.all ? "contained" : s.tail ? "settled" : "outside";
      },
      threads);

  TrialReport report;
  report.estimand = "containment";
  report.trials = trials;
  report.master_seed = master_seed;
  report.eps_ball = eps_ball;
  report.T_after = T_after;
  report.horizon = config.horizon_t;
  long a = 0, t = 0, st = 0, nf = 0;
  for (const Slot& s : slots) {
    a += s.all;
    t += s.tail;
    st += s.stopped;
    nf += s.nonfinite;
    report.rejected_initial += s.row.rejected_initial;
    report.rows.push_back(s.row);
  }
  report.containment_all = wilson(a, trials);
  report.containment_tail = wilson(t, trials);
  report.stopped = wilson(st, trials);
  report.nonfinite = wilson(nf, trials);
  report.success = report.containment_tail;
  return report;
}

TrialReport estimate_recurrence(const SPSystem& system, const CertificateData& cert,
                                const InitialSampler& init_set, long trials, double horizon,
                                std::uint64_t master_seed, const SimConfig& config, int threads) {
  if (trials < 1) throw std::invalid_argument("estimate_recurrence: trials must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("estimate_recurrence: horizon must be positive");
  if (!cert.in_Ox) throw std::invalid_argument("estimate_recurrence: certificate has no O_x");
  SimConfig cfg = config;
  cfg.horizon_t = horizon;
  cfg.horizon_j = static_cast<int>(std::ceil(horizon)) + 1;
  cfg.validate();

  std::vector<TrialRow> rows(trials);
  parallel_for(
      trials,
      [&](long i) {
        TrialRow& row = rows[i];
        row.index = i;
        RandomStream stream(master_seed, static_cast<std::uint64_t>(i));
        RandomStream init = stream.channel(kInitialChannel);
        const StateVector y0 = draw_initial(system, init_set, init, row.rejected_initial);
        double hit = -1.0;
        double max_d = 0.0;
        double last = 0.0;
        ArcObserver obs;
        obs.record_samples = false;
        obs.on_sample = [&](const HybridTime& ht, const StateVector& y) {
          if (ht.total() > horizon) return false;
          const double d = attractor_distance(cert, y);
          max_d = std::max(max_d, d);
          last = d;
          if (cert.in_O_chi(y)) {
            hit = ht.total();
            return false;
          }
          return true;
        };
        try {
          const HybridArc arc = simulate_arc(system, y0, stream, cfg, &obs);
          if (hit >= 0.0) {
            row.outcome = "hit";
          } else if (arc.termination == Termination::left_C_and_D) {
            row.outcome = "stopped";
          } else {
            row.outcome = "timed_out";
          }
        } catch (const NonFiniteStateError&) {
          row.outcome = "nonfinite";
        }
        row.hitting_time = hit;
        row.max_distance = max_d;
        row.final_distance = last;
      },
      threads);

  TrialReport report;
  report.estimand = "recurrence";
  report.trials = trials;
  report.master_seed = master_seed;
  report.horizon = horizon;
  for (const auto& r : rows) {
    report.rejected_initial += r.rejected_initial;
    if (r.hitting_time >= 0.0) report.hitting_times.push_back(r.hitting_time);
  }
  report.rows = std::move(rows);
  report.hit = count(report.rows, [](const TrialRow& r) { return r.outcome == "hit"; });
  report.stopped = count(report.rows, [](const TrialRow& r) { return r.outcome == "stopped"; });
  report.timed_out = count(report.rows, [](const TrialRow& r) { return r.outcome == "timed_out"; });
  report.nonfinite = count(report.rows, [](const TrialRow& r) { return r.outcome == "nonfinite"; });
  report.success = count(report.rows, [](const TrialRow& r) {
    return r.outcome == "hit" || r.outcome == "stopped";
  });
  return report;
}

std::vector<UniformityRow> uniformity_sweep(
    const std::function<TrialReport(double R, long trials)>& estimator,
    const std::vector<double>& R_values, long trials, SweepStatistic statistic) {
  for (std::size_t i = 1; i < R_values.size(); ++i) {
    if (!(R_values[i] > R_values[i - 1])) {
      throw std::invalid_argument("uniformity_sweep: R_values must be increasing");
    }
  }
  std::vector<UniformityRow> out;
  for (double R : R_values) {
    UniformityRow row;
    row.R = R;
    row.report = estimator(R, trials);
    row.quantile95 = statistic == SweepStatistic::hitting_time ? row.report.hitting_quantile(0.95)
                                                               : row.report.settling_quantile(0.95);
    out.push_back(std::move(row));
  }
  return out;
}

std::string to_string(SweepMetric m) {
  switch (m) {
    case SweepMetric::containment: return "containment";
    case SweepMetric::recurrence: return "recurrence";
    case SweepMetric::monitor_violations: return "monitor_violations";
  }
  return "unknown";
}

SweepMetric parse_sweep_metric(const std::string& s) {
  if (s == "containment") return SweepMetric::containment;
  if (s == "recurrence") return SweepMetric::recurrence;
  if (s == "monitor_violations" || s == "monitor") return SweepMetric::monitor_violations;
  throw std::invalid_argument("unknown sweep metric: " + s);
}

std::vector<EpsilonRow> epsilon_sweep(const std::function<SweepInstance(double)>& instance,
                                      const std::vector<double>& eps_values, SweepMetric metric,
                                      long trials, const SweepSettings& settings) {
  if (trials < 1) throw std::invalid_argument("epsilon_sweep: trials must be >= 1");
  for (std::size_t i = 0; i < eps_values.size(); ++i) {
    if (!(eps_values[i] > 0.0)) throw std::invalid_argument("epsilon_sweep: epsilons must be positive");
    if (i > 0 && !(eps_values[i] < eps_values[i - 1])) {
      throw std::invalid_argument("epsilon_sweep: epsilons must be decreasing");
    }
  }
  std::vector<EpsilonRow> out;
  for (double eps : eps_values) {
    const SweepInstance inst = instance(eps);
    EpsilonRow row;
    row.epsilon = eps;
    try {
      row.epsilon_star = epsilon_star(inst.ledger);
    } catch (const std::invalid_argument&) {
      row.epsilon_star = std::numeric_limits<double>::quiet_NaN();
    }
    auto mean_final = [](const TrialReport& r) {
      double acc = 0.0;
      for (const auto& row : r.rows) acc += row.final_distance;
      return r.rows.empty() ? 0.0 : acc / static_cast<double>(r.rows.size());
    };
    switch (metric) {
      case SweepMetric::containment: {
        const TrialReport r = estimate_containment(inst.system, inst.cert, inst.sampler, settings.eps_ball,
                                                   settings.T_after, trials, settings.master_seed,
                                                   inst.config, settings.threads);
        row.metric = r.containment_tail.value;
        row.lower = r.containment_tail.lower;
        row.upper = r.containment_tail.upper;
        row.mean_final_distance = mean_final(r);
        break;
      }
      case SweepMetric::recurrence: {
        const TrialReport r = estimate_recurrence(inst.system, inst.cert, inst.sampler, trials,
                                                  settings.horizon, settings.master_seed, inst.config,
                                                  settings.threads);
        row.metric = r.success.value;
        row.lower = r.success.lower;
        row.upper = r.success.upper;
        row.mean_final_distance = mean_final(r);
        break;
      }
      case SweepMetric::monitor_violations: {
        const double theta = theta_star(inst.ledger);
        std::vector<std::size_t> flags(trials, 0);
        std::vector<double> finals(trials, 0.0);
        parallel_for(
            trials,
            [&](long i) {
              RandomStream stream(settings.master_seed, static_cast<std::uint64_t>(i));
              RandomStream init = stream.channel(kInitialChannel);
              long rejected = 0;
              const StateVector y0 = draw_initial(inst.system, inst.sampler, init, rejected);
              const HybridArc arc = simulate_arc(inst.system, y0, stream, inst.config);
              flags[i] = monitor_along_arc(inst.cert, theta, arc, inst.config.step_h).flag_count();
              finals[i] = attractor_distance(inst.cert, arc.end_state());
            },
            settings.threads);
        row.metric = static_cast<double>(std::accumulate(flags.begin(), flags.end(), std::size_t{0}));
        row.lower = row.upper = row.metric;
        row.mean_final_distance =
            std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(trials);
        break;
      }
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace shds
