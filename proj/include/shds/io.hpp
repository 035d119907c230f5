#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shds/analysis.hpp"
#include "shds/foster.hpp"
#include "shds/lmi.hpp"
#include "shds/measure.hpp"
#include "shds/simulate.hpp"

namespace shds {

inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const JumpMeasure& measure);
JumpMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig defaults = {});
nlohmann::json to_json(const StateVector& y);
nlohmann::json to_json(const VerificationReport& report);
nlohmann::json to_json(const LMIReport& report);
nlohmann::json to_json(const Proportion& p);
nlohmann::json to_json(const TrialReport& report);

std::string to_string(CDPolicy p);
CDPolicy parse_cd_policy(const std::string& s);
std::string to_string(SelectionPolicy::Kind k);
SelectionPolicy::Kind parse_selection_kind(const std::string& s);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t v);

// Provenance carried by every output file.
struct OutputHeader {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string config_hash;

  nlohmann::json to_json() const;
  // '#'-prefixed comment lines.
  void write_comment(std::ostream& os, const std::string& prefix = "# ") const;
};

// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_arc_csv(std::ostream& os, const HybridArc& arc);
void write_jump_csv(std::ostream& os, const HybridArc& arc);
void write_monitor_csv(std::ostream& os, const MonitorTrace& trace);
void write_trials_csv(std::ostream& os, const TrialReport& report);

struct PlotOptions {
  std::string title;
  bool log_energy = true;
  int width = 900;
  int height = 620;
  std::vector<std::string> labels;  // per state component
};

// Two panels: state components, then E_theta (log scale optional), with jump
// instants marked.
void write_arc_svg(std::ostream& os, const HybridArc& arc, const MonitorTrace& trace,
                   const PlotOptions& options, const OutputHeader& header);

}  // namespace shds
