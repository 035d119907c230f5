#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shds/analysis.hpp"
#include "shds/foster.hpp"
#include "shds/lmi.hpp"
#include "shds/simulate.hpp"
#include "shds/system.hpp"

namespace shds {

// Serializable system definition: scenario kind, epsilon, kind-specific
// parameters and default simulation settings. Parameters are kept in
// canonical (sorted-key) form so load -> dump is byte-stable.
struct SystemSpec {
  std::string kind;
  double epsilon = 0.1;
  nlohmann::json parameters = nlohmann::json::object();
  SimConfig simulation;
};

struct ProvenanceNote {
  std::string field;
  std::string note;
};

struct Scenario {
  std::string name;
  std::string description;
  SystemSpec spec;
  SPSystem system;
  CertificateData cert;
  ConstantsLedger ledger;
  ReducedSystem reduced;
  SimConfig config;
  // Initial-condition sampler over the ball of radius R in the scenario's gauge.
  std::function<InitialSampler(double R)> init_set;
  double default_radius = 1.0;
  std::vector<StateVector> flow_grid;
  std::vector<StateVector> jump_grid;
  FlowMode flow_mode = FlowMode::nonstrict;
  JumpMode jump_mode = JumpMode::thm2_relaxed;
  JumpVerifyOptions jump_options;
  std::optional<SwitchedLMIInstance> lmi;
  std::vector<ProvenanceNote> notes;
  // Claims stability in probability (monitor and containment apply).
  bool claims_stability = false;

  double theta() const { return theta_star(ledger); }
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

std::vector<ScenarioInfo> list_scenarios();
bool has_scenario(const std::string& name);

SystemSpec default_spec(const std::string& name);
// Validates and normalizes the kind-specific parameters.
SystemSpec normalize(SystemSpec spec);

nlohmann::json to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const nlohmann::json& j);
SystemSpec load_spec(const std::string& text);
std::string dump_spec(const SystemSpec& spec);

// Sets a numeric parameter ("eta=1") or epsilon; throws on unknown keys.
void apply_override(SystemSpec& spec, const std::string& assignment);

// Builds the scenario and runs its load-time self-check (throws on failure
// when self_check is set).
Scenario build_scenario(const SystemSpec& spec, bool self_check = true);
Scenario make_scenario(const std::string& name, std::optional<double> epsilon = std::nullopt,
                       bool self_check = true);

struct SelfCheckResult {
  bool pass = true;
  std::vector<VerificationReport> reports;
  std::optional<LMIReport> lmi;
  std::string failure;
};

// Sandwich, flow and jump verification on the default grids plus the LMIs.
SelfCheckResult self_check(const Scenario& scenario);

Scenario scenario_example1(double epsilon = 0.1);
Scenario scenario_switching(double epsilon = 0.1);
Scenario scenario_heavy_ball(double epsilon = 0.1);
Scenario scenario_switching_plant(double epsilon = 0.1);
Scenario scenario_bounded_inputs(double epsilon = 0.1);
Scenario scenario_zero();

// Lower bound rho~ of the expected jump decrease for the scalar recurrence
// example: E(y) - E[sup E(g)].
double example1_rho_tilde(double x, double z);

}  // namespace shds
