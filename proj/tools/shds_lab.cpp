// shds_lab: run, verify and sample the stochastic hybrid scenarios.
//
// Exit codes: 0 success, 1 verification or simulation failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shds/analysis.hpp"
#include "shds/io.hpp"
#include "shds/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string scenario;
  std::string system_path;
  std::optional<double> epsilon;
  std::uint64_t seed = 1;
  long trials = 100;
  std::optional<double> horizon_t;
  std::optional<int> horizon_j;
  std::optional<double> step;
  std::string out = "shds_out";
  bool plot = true;
  std::string epsilons;
  std::string radii;
  std::string mode;
  std::string metric;
  std::vector<std::string> overrides;
  std::optional<double> radius;
  double eps_ball = 0.5;
  std::optional<double> t_after;
  double horizon = 100.0;
  int threads = 0;
  bool json_list = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "Built-in scenario name (see `list`)");
  cmd->add_option("--system", o.system_path, "System JSON file");
  cmd->add_option("--epsilon", o.epsilon, "Time-scale ratio");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--horizon-t", o.horizon_t, "Flow-time horizon");
  cmd->add_option("--horizon-j", o.horizon_j, "Jump budget");
  cmd->add_option("--step", o.step, "Integrator step");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--set", o.overrides, "Parameter override key=value (repeatable)");
  cmd->add_option("--threads", o.threads, "Worker threads (SHDS_LAB_THREADS caps this)");
}

void add_sampling(CLI::App* cmd, Options& o) {
  cmd->add_option("--trials", o.trials, "Number of Monte Carlo trials");
  cmd->add_option("--radius", o.radius, "Radius of the initial-condition set");
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": not a number: " + item);
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + " needs at least one value");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CLI flags > system file > scenario defaults.
shds::SystemSpec resolve_spec(const Options& o) {
  if (o.scenario.empty() == o.system_path.empty()) {
    throw UsageError("give exactly one of --scenario or --system");
  }
  shds::SystemSpec spec;
  try {
    if (!o.system_path.empty()) {
      spec = shds::load_spec(read_file(o.system_path));
    } else {
      if (!shds::has_scenario(o.scenario)) throw UsageError("unknown scenario: " + o.scenario);
      spec = shds::default_spec(o.scenario);
    }
    for (const auto& a : o.overrides) shds::apply_override(spec, a);
    if (o.epsilon) {
      if (!(*o.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
      spec.epsilon = *o.epsilon;
      if (!o.step) spec.simulation.step_h = std::min(spec.simulation.step_h, *o.epsilon / 20.0);
    }
    if (o.step) spec.simulation.step_h = *o.step;
    if (o.horizon_t) spec.simulation.horizon_t = *o.horizon_t;
    if (o.horizon_j) spec.simulation.horizon_j = *o.horizon_j;
    spec = shds::normalize(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

void check_sampling(const Options& o) {
  if (o.trials < 1) throw UsageError("--trials must be >= 1");
  if (o.radius && !(*o.radius > 0.0)) throw UsageError("--radius must be positive");
}

std::string config_hash(const shds::SystemSpec& spec, const json& extra) {
  json j = shds::to_json(spec);
  j["run"] = extra;
  return shds::hex64(shds::fnv1a(j.dump()));
}

fs::path prepare_out(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + o.out);
  return dir;
}

void write_json(const fs::path& path, const shds::OutputHeader& header, json body) {
  body["header"] = header.to_json();
  std::ofstream out(path);
  out << body.dump(2) << '\n';
}

template <typename Writer>
void write_csv(const fs::path& path, const shds::OutputHeader& header, Writer&& writer) {
  std::ofstream out(path);
  header.write_comment(out);
  writer(out);
}

int cmd_simulate(const Options& o) {
  const shds::SystemSpec spec = resolve_spec(o);
  const fs::path dir = prepare_out(o);
  const shds::Scenario sc = shds::build_scenario(spec, true);
  const double R = o.radius.value_or(sc.default_radius);
  if (o.radius && !(R > 0.0)) throw UsageError("--radius must be positive");
  shds::OutputHeader header{sc.name, o.seed, config_hash(spec, {{"cmd", "simulate"}, {"radius", R}})};

  shds::RandomStream stream(o.seed, 0);
  shds::RandomStream init = stream.channel(shds::kInitialChannel);
  long rejected = 0;
  const shds::StateVector y0 = shds::draw_initial(sc.system, sc.init_set(R), init, rejected);
  shds::HybridArc arc;
  try {
    arc = shds::simulate_arc(sc.system, y0, stream, sc.config);
  } catch (const shds::NonFiniteStateError& e) {
    json err{{"error", "non-finite state"}, {"message", e.what()}, {"time", e.time()},
             {"last_finite", shds::to_json(e.last_finite())}};
    write_json(dir / (sc.name + "_error.json"), header, err);
    std::cerr << err.dump() << '\n';
    return 1;
  }
  const double theta = sc.theta();
  const shds::MonitorTrace trace = shds::monitor_along_arc(sc.cert, theta, arc, sc.config.step_h);

  write_csv(dir / (sc.name + "_arc.csv"), header, [&](std::ostream& os) { shds::write_arc_csv(os, arc); });
  write_csv(dir / (sc.name + "_jumps.csv"), header, [&](std::ostream& os) { shds::write_jump_csv(os, arc); });
  write_csv(dir / (sc.name + "_monitor.csv"), header,
            [&](std::ostream& os) { shds::write_monitor_csv(os, trace); });
  if (o.plot) {
    shds::PlotOptions po;
    std::ostringstream title;
    title << sc.name << ", epsilon = " << sc.system.epsilon << ", seed = " << o.seed;
    po.title = title.str();
    std::ofstream svg(dir / (sc.name + "_arc.svg"));
    shds::write_arc_svg(svg, arc, trace, po, header);
  }
  const shds::StateVector& yend = arc.end_state();
  json summary{{"termination", shds::to_string(arc.termination)},
               {"end_time", {{"t", arc.end_time().t}, {"j", arc.end_time().j}}},
               {"initial", shds::to_json(y0)},
               {"final", shds::to_json(yend)},
               {"jumps", arc.jumps.size()},
               {"theta", theta},
               {"monitor_flags", trace.flag_count()}};
  write_json(dir / (sc.name + "_summary.json"), header, summary);
  std::cout << sc.name << ": " << shds::to_string(arc.termination) << " at t = " << arc.end_time().t
            << ", j = " << arc.end_time().j << ", final x = " << shds::format_vector(yend.x) << '\n';
  return 0;
}

int cmd_verify(const Options& o) {
  const shds::SystemSpec spec = resolve_spec(o);
  const fs::path dir = prepare_out(o);
  shds::Scenario sc = shds::build_scenario(spec, false);
  if (!o.mode.empty()) {
    try {
      sc.jump_mode = shds::parse_jump_mode(o.mode);
      sc.flow_mode = shds::parse_flow_mode(o.mode);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  shds::OutputHeader header{sc.name, o.seed, config_hash(spec, {{"cmd", "verify"}, {"mode", o.mode}})};
  shds::SelfCheckResult r;
  try {
    r = shds::self_check(sc);
  } catch (const std::invalid_argument& e) {
    // e.g. a mode that needs data the scenario does not provide
    throw UsageError(e.what());
  }
  json body{{"pass", r.pass}, {"theta", sc.theta()}, {"flow_mode", shds::to_string(sc.flow_mode)},
            {"jump_mode", shds::to_string(sc.jump_mode)}};
  json reports = json::array();
  for (const auto& rep : r.reports) reports.push_back(shds::to_json(rep));
  body["reports"] = reports;
  if (r.lmi) body["lmi"] = shds::to_json(*r.lmi);
  if (!r.pass) body["failure"] = r.failure;
  write_json(dir / (sc.name + "_verify.json"), header, body);

  if (r.lmi) {
    for (const auto& e : r.lmi->entries) {
      std::cout << "LMI " << e.name << (e.mode > 0 ? " mode " + std::to_string(e.mode) : "")
                << ": lambda_max = " << e.lambda_max << (e.pass ? "  ok" : "  FAIL") << '\n';
    }
  }
  for (const auto& rep : r.reports) {
    for (const auto& i : rep.inequalities) {
      std::cout << rep.kind << "/" << i.name << ": max residual "
                << (i.evaluated > 0 ? shds::format_double(i.max_residual) : std::string("n/a")) << " over "
                << i.evaluated << " points" << (i.pass ? "  ok" : "  FAIL") << '\n';
    }
  }
  if (!r.pass) {
    std::cerr << "verification failed: " << r.failure << '\n';
    return 1;
  }
  std::cout << "all inequalities hold\n";
  return 0;
}

int cmd_mc(const Options& o, bool recurrence) {
  check_sampling(o);
  const shds::SystemSpec spec = resolve_spec(o);
  const fs::path dir = prepare_out(o);
  const shds::Scenario sc = shds::build_scenario(spec, true);
  const double R = o.radius.value_or(sc.default_radius);
  shds::TrialReport report;
  json run{{"cmd", recurrence ? "mc-recurrence" : "mc-stability"}, {"trials", o.trials}, {"radius", R}};
  if (recurrence) {
    if (!(o.horizon > 0.0)) throw UsageError("--horizon must be positive");
    if (!sc.cert.in_Ox) throw UsageError("scenario " + sc.name + " defines no recurrence set");
    run["horizon"] = o.horizon;
    report = shds::estimate_recurrence(sc.system, sc.cert, sc.init_set(R), o.trials, o.horizon, o.seed,
                                       sc.config, o.threads);
  } else {
    if (!(o.eps_ball > 0.0)) throw UsageError("--eps-ball must be positive");
    const double t_after = o.t_after.value_or(0.5 * sc.config.horizon_t);
    run["eps_ball"] = o.eps_ball;
    run["T_after"] = t_after;
    report = shds::estimate_containment(sc.system, sc.cert, sc.init_set(R), o.eps_ball, t_after,
                                        o.trials, o.seed, sc.config, o.threads);
  }
  shds::OutputHeader header{sc.name, o.seed, config_hash(spec, run)};
  const std::string stem = sc.name + (recurrence ? "_recurrence" : "_stability");
  json body = shds::to_json(report);
  body["radius"] = R;
  write_json(dir / (stem + ".json"), header, body);
  write_csv(dir / (stem + "_trials.csv"), header,
            [&](std::ostream& os) { shds::write_trials_csv(os, report); });
  const shds::Proportion& p = recurrence ? report.success : report.containment_tail;
  std::cout << sc.name << " " << (recurrence ? "hit-or-stop" : "containment") << ": " << p.successes << "/"
            << p.trials << " = " << p.value << "  (95% Wilson [" << p.lower << ", " << p.upper << "])\n";
  if (report.nonfinite.successes > 0) {
    std::cout << report.nonfinite.successes << " trials reached a non-finite state\n";
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  check_sampling(o);
  const shds::SystemSpec base = resolve_spec(o);
  const fs::path dir = prepare_out(o);
  const shds::Scenario sc = shds::build_scenario(base, true);
  shds::SweepSettings st;
  st.eps_ball = o.eps_ball;
  st.T_after = o.t_after.value_or(0.5 * sc.config.horizon_t);
  st.horizon = o.horizon;
  st.master_seed = o.seed;
  st.threads = o.threads;
  const double R = o.radius.value_or(sc.default_radius);

  if (!o.radii.empty()) {
    const std::vector<double> radii = parse_list(o.radii, "--radii");
    if (!sc.cert.in_Ox) throw UsageError("uniformity sweep needs a recurrence set");
    std::vector<shds::UniformityRow> rows;
    try {
      rows = shds::uniformity_sweep(
          [&](double r, long n) {
            return shds::estimate_recurrence(sc.system, sc.cert, sc.init_set(r), n, st.horizon, st.master_seed,
                                             sc.config, st.threads);
          },
          radii, o.trials);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    shds::OutputHeader header{sc.name, o.seed,
                              config_hash(base, {{"cmd", "sweep"}, {"radii", radii}, {"trials", o.trials}})};
    write_csv(dir / (sc.name + "_uniformity.csv"), header, [&](std::ostream& os) {
      os << "R,hitting_q95,success,lower,upper\n";
      for (const auto& r : rows) {
        os << shds::format_double(r.R) << ',' << shds::format_double(r.quantile95) << ','
           << shds::format_double(r.report.success.value) << ',' << shds::format_double(r.report.success.lower)
           << ',' << shds::format_double(r.report.success.upper) << '\n';
      }
    });
    for (const auto& r : rows) std::cout << "R = " << r.R << ": 95% hitting time " << r.quantile95 << '\n';
    return 0;
  }

  if (o.epsilons.empty()) throw UsageError("sweep needs --epsilons or --radii");
  const std::vector<double> eps = parse_list(o.epsilons, "--epsilons");
  shds::SweepMetric metric = sc.claims_stability ? shds::SweepMetric::containment : shds::SweepMetric::recurrence;
  if (!o.metric.empty()) {
    try {
      metric = shds::parse_sweep_metric(o.metric);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (metric == shds::SweepMetric::recurrence && !sc.cert.in_Ox) {
    throw UsageError("recurrence metric needs a recurrence set");
  }
  std::vector<shds::EpsilonRow> rows;
  try {
    rows = shds::epsilon_sweep(
        [&](double e) {
          shds::SystemSpec spec = base;
          spec.epsilon = e;
          if (!o.step) spec.simulation.step_h = std::min(base.simulation.step_h, e / 20.0);
          shds::Scenario s = shds::build_scenario(spec, false);
          return shds::SweepInstance{s.system, s.cert, s.ledger, s.init_set(R), s.config};
        },
        eps, metric, o.trials, st);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  shds::OutputHeader header{
      sc.name, o.seed,
      config_hash(base, {{"cmd", "sweep"}, {"epsilons", eps}, {"metric", shds::to_string(metric)},
                         {"trials", o.trials}, {"radius", R}})};
  write_csv(dir / (sc.name + "_sweep.csv"), header, [&](std::ostream& os) {
    os << "epsilon,metric,value,lower,upper,mean_final_distance,epsilon_star\n";
    for (const auto& r : rows) {
      os << shds::format_double(r.epsilon) << ',' << shds::to_string(metric) << ','
         << shds::format_double(r.metric) << ',' << shds::format_double(r.lower) << ','
         << shds::format_double(r.upper) << ',' << shds::format_double(r.mean_final_distance) << ','
         << shds::format_double(r.epsilon_star) << '\n';
    }
  });
  for (const auto& r : rows) {
    std::cout << "epsilon = " << r.epsilon << ": " << shds::to_string(metric) << " = " << r.metric
              << " [" << r.lower << ", " << r.upper << "]\n";
  }
  return 0;
}

int cmd_list(const Options& o) {
  if (o.json_list) {
    json out = json::array();
    for (const auto& s : shds::list_scenarios()) out.push_back({{"name", s.name}, {"description", s.description}});
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  for (const auto& s : shds::list_scenarios()) std::cout << s.name << "  " << s.description << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shds_lab: stochastic singularly perturbed hybrid systems"};
  app.set_version_flag("--version", std::string(shds::kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Simulate one sample path and write CSV/SVG output");
  add_common(sim, o);
  sim->add_option("--radius", o.radius, "Radius of the initial-condition set");
  sim->add_option("--trials", o.trials, "Accepted for symmetry; must be >= 1");
  sim->add_flag("--plot,!--no-plot", o.plot, "Write an SVG figure");

  auto* ver = app.add_subcommand("verify", "Check the certificate inequalities and LMIs");
  add_common(ver, o);
  ver->add_option("--mode", o.mode, "Verification mode: thm1, thm2, thm3 or thm4");

  auto* stab = app.add_subcommand("mc-stability", "Monte Carlo containment estimate");
  add_common(stab, o);
  add_sampling(stab, o);
  stab->add_option("--eps-ball", o.eps_ball, "Radius of the target ball");
  stab->add_option("--t-after", o.t_after, "Containment is required for t + j >= this value");

  auto* rec = app.add_subcommand("mc-recurrence", "Monte Carlo recurrence estimate");
  add_common(rec, o);
  add_sampling(rec, o);
  rec->add_option("--horizon", o.horizon, "Hybrid-time horizon t + j");

  auto* sw = app.add_subcommand("sweep", "Sweep epsilon or the initial radius");
  add_common(sw, o);
  add_sampling(sw, o);
  sw->add_option("--epsilons", o.epsilons, "Comma-separated decreasing epsilons");
  sw->add_option("--radii", o.radii, "Comma-separated increasing radii (uniformity sweep)");
  sw->add_option("--metric", o.metric, "containment, recurrence or monitor_violations");
  sw->add_option("--eps-ball", o.eps_ball, "Radius of the target ball");
  sw->add_option("--t-after", o.t_after, "Containment is required for t + j >= this value");
  sw->add_option("--horizon", o.horizon, "Hybrid-time horizon t + j for recurrence");

  auto* ls = app.add_subcommand("list", "List built-in scenarios");
  ls->add_flag("--json", o.json_list, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      check_sampling(o);
      return cmd_simulate(o);
    }
    if (ver->parsed()) return cmd_verify(o);
    if (stab->parsed()) return cmd_mc(o, false);
    if (rec->parsed()) return cmd_mc(o, true);
    if (sw->parsed()) return cmd_sweep(o);
    if (ls->parsed()) return cmd_list(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 2;
}
