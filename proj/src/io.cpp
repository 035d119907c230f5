#include "shds/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace shds {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("matrix must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j.at(i).size()) != cols) throw std::invalid_argument("ragged matrix");
    for (Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw std::invalid_argument("vector must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

json to_json(const JumpMeasure& m) {
  json out;
  out["kind"] = m.kind_name();
  switch (m.kind()) {
    case JumpMeasure::Kind::discrete: {
      json pts = json::array();
      for (const auto& p : m.points()) pts.push_back(vector_to_json(p));
      out["points"] = pts;
      out["weights"] = m.weights();
      break;
    }
    case JumpMeasure::Kind::uniform_interval:
      out["a"] = m.lower();
      out["b"] = m.upper();
      break;
    case JumpMeasure::Kind::truncated_exponential:
      out["T"] = m.upper();
      break;
    case JumpMeasure::Kind::uniform_ball:
      out["radius"] = m.radius();
      out["dimension"] = m.dimension();
      break;
    case JumpMeasure::Kind::product: {
      json parts = json::array();
      for (const auto& c : m.components()) parts.push_back(to_json(c));
      out["components"] = parts;
      break;
    }
  }
  return out;
}

JumpMeasure measure_from_json(const json& j) {
  switch (JumpMeasure::parse_kind(j.at("kind").get<std::string>())) {
    case JumpMeasure::Kind::discrete: {
      std::vector<Vector> pts;
      for (const auto& p : j.at("points")) pts.push_back(vector_from_json(p));
      return JumpMeasure::discrete(std::move(pts), j.at("weights").get<std::vector<double>>());
    }
    case JumpMeasure::Kind::uniform_interval:
      return JumpMeasure::uniform_interval(j.at("a").get<double>(), j.at("b").get<double>());
    case JumpMeasure::Kind::truncated_exponential:
      return JumpMeasure::truncated_exponential(j.at("T").get<double>());
    case JumpMeasure::Kind::uniform_ball:
      return JumpMeasure::uniform_ball(j.at("radius").get<double>(), j.at("dimension").get<int>());
    case JumpMeasure::Kind::product: {
      std::vector<JumpMeasure> parts;
      for (const auto& c : j.at("components")) parts.push_back(measure_from_json(c));
      return JumpMeasure::product(std::move(parts));
    }
  }
  throw std::invalid_argument("unknown measure kind");
}

std::string to_string(CDPolicy p) {
  return p == CDPolicy::jump_priority ? "jump_priority" : "flow_priority";
}

CDPolicy parse_cd_policy(const std::string& s) {
  if (s == "jump_priority" || s == "jump") return CDPolicy::jump_priority;
  if (s == "flow_priority" || s == "flow") return CDPolicy::flow_priority;
  throw std::invalid_argument("unknown C/D policy: " + s);
}

std::string to_string(SelectionPolicy::Kind k) {
  switch (k) {
    case SelectionPolicy::Kind::extreme: return "extreme";
    case SelectionPolicy::Kind::random: return "random";
    case SelectionPolicy::Kind::fixed: return "fixed";
  }
  return "unknown";
}

SelectionPolicy::Kind parse_selection_kind(const std::string& s) {
  if (s == "extreme") return SelectionPolicy::Kind::extreme;
  if (s == "random") return SelectionPolicy::Kind::random;
  if (s == "fixed") return SelectionPolicy::Kind::fixed;
  throw std::invalid_argument("unknown selection policy: " + s);
}

namespace {

json policy_json(const SelectionPolicy& p) {
  json out{{"kind", to_string(p.kind)}};
  if (p.kind == SelectionPolicy::Kind::fixed) out["value"] = p.value;
  return out;
}

SelectionPolicy policy_from_json(const json& j, SelectionPolicy fallback) {
  if (j.is_string()) {
    fallback.kind = parse_selection_kind(j.get<std::string>());
    return fallback;
  }
  fallback.kind = parse_selection_kind(j.at("kind").get<std::string>());
  if (j.contains("value")) fallback.value = j.at("value").get<double>();
  return fallback;
}

}  // namespace

json to_json(const SimConfig& c) {
  return {{"step_h", c.step_h},
          {"horizon_t", c.horizon_t},
          {"horizon_j", c.horizon_j},
          {"cd_policy", to_string(c.cd_policy)},
          {"flow_selection", policy_json(c.flow_selection)},
          {"jump_selection", policy_json(c.jump_selection)},
          {"event_tol", c.event_tol}};
}

SimConfig sim_config_from_json(const json& j, SimConfig c) {
  if (j.contains("step_h")) c.step_h = j.at("step_h").get<double>();
  if (j.contains("horizon_t")) c.horizon_t = j.at("horizon_t").get<double>();
  if (j.contains("horizon_j")) c.horizon_j = j.at("horizon_j").get<int>();
  if (j.contains("cd_policy")) c.cd_policy = parse_cd_policy(j.at("cd_policy").get<std::string>());
  if (j.contains("flow_selection")) c.flow_selection = policy_from_json(j.at("flow_selection"), c.flow_selection);
  if (j.contains("jump_selection")) c.jump_selection = policy_from_json(j.at("jump_selection"), c.jump_selection);
  if (j.contains("event_tol")) c.event_tol = j.at("event_tol").get<double>();
  c.validate();
  return c;
}

json to_json(const StateVector& y) {
  return {{"x", vector_to_json(y.x)}, {"z", vector_to_json(y.z)}};
}

namespace {

// JSON has no infinities; encode them as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const VerificationReport& r) {
  json entries = json::array();
  for (const auto& e : r.inequalities) {
    json row{{"name", e.name},
             {"max_residual", finite_or_null(e.max_residual)},
             {"min_residual", finite_or_null(e.min_residual)},
             {"evaluated", e.evaluated},
             {"pass", e.pass}};
    if (e.evaluated > 0 && e.worst_point.dimension() > 0) row["worst_point"] = to_json(e.worst_point);
    entries.push_back(row);
  }
  json out{{"kind", r.kind},
           {"mode", r.mode},
           {"grid", r.grid_spec},
           {"tolerance", r.tolerance},
           {"grid_points", r.grid_points},
           {"skipped", r.skipped},
           {"pass", r.pass()},
           {"inequalities", entries},
           {"notes", r.notes}};
  if (!r.branch.empty()) out["branch"] = r.branch;
  return out;
}

json to_json(const LMIReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name}, {"mode", e.mode}, {"lambda_max", e.lambda_max}, {"pass", e.pass}});
  }
  return {{"pass", r.pass()}, {"entries", entries}};
}

json to_json(const Proportion& p) {
  return {{"successes", p.successes}, {"trials", p.trials}, {"value", p.value},
          {"lower", p.lower},         {"upper", p.upper}};
}

json to_json(const TrialReport& r) {
  json out{{"estimand", r.estimand},
           {"trials", r.trials},
           {"master_seed", r.master_seed},
           {"horizon", r.horizon},
           {"rejected_initial", r.rejected_initial},
           {"success", to_json(r.success)},
           {"stopped", to_json(r.stopped)},
           {"nonfinite", to_json(r.nonfinite)}};
  if (r.estimand == "containment") {
    out["eps_ball"] = r.eps_ball;
    out["T_after"] = r.T_after;
    out["containment_all"] = to_json(r.containment_all);
    out["containment_tail"] = to_json(r.containment_tail);
    out["settling_q95"] = finite_or_null(r.settling_quantile(0.95));
  } else {
    out["hit"] = to_json(r.hit);
    out["timed_out"] = to_json(r.timed_out);
    out["hitting_q95"] = finite_or_null(r.hitting_quantile(0.95));
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json OutputHeader::to_json() const {
  return {{"tool_version", kToolVersion}, {"scenario", scenario}, {"seed", seed},
          {"config_hash", config_hash}};
}

void OutputHeader::write_comment(std::ostream& os, const std::string& prefix) const {
  os << prefix << "shds_lab " << kToolVersion << '\n';
  os << prefix << "scenario " << scenario << '\n';
  os << prefix << "seed " << seed << '\n';
  os << prefix << "config_hash " << config_hash << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void header_row(std::ostream& os, Index nx, Index nz) {
  for (Index i = 0; i < nx; ++i) os << ",x" << i;
  for (Index i = 0; i < nz; ++i) os << ",z" << i;
}

void state_row(std::ostream& os, const StateVector& y) {
  for (Index i = 0; i < y.x.size(); ++i) os << ',' << format_double(y.x(i));
  for (Index i = 0; i < y.z.size(); ++i) os << ',' << format_double(y.z(i));
}

}  // namespace

void write_arc_csv(std::ostream& os, const HybridArc& arc) {
  const StateVector& y0 = arc.segments.front().samples.front().y;
  os << "t,j";
  header_row(os, y0.x.size(), y0.z.size());
  os << '\n';
  for (const auto& seg : arc.segments) {
    for (const auto& s : seg.samples) {
      os << format_double(s.t) << ',' << seg.start.j;
      state_row(os, s.y);
      os << '\n';
    }
  }
  // A final jump with no following flow still belongs to the arc.
  if (arc.jumps.size() >= arc.segments.size() && !arc.jumps.empty()) {
    const JumpRecord& last = arc.jumps.back();
    os << format_double(last.time.t) << ',' << last.time.j + 1;
    state_row(os, last.post);
    os << '\n';
  }
}

void write_jump_csv(std::ostream& os, const HybridArc& arc) {
  os << "t,j,selection";
  const Index nv = arc.jumps.empty() ? 0 : arc.jumps.front().v.size();
  for (Index i = 0; i < nv; ++i) os << ",v" << i;
  if (!arc.jumps.empty()) {
    const auto& y = arc.jumps.front().pre;
    for (Index i = 0; i < y.x.size(); ++i) os << ",pre_x" << i;
    for (Index i = 0; i < y.z.size(); ++i) os << ",pre_z" << i;
    for (Index i = 0; i < y.x.size(); ++i) os << ",post_x" << i;
    for (Index i = 0; i < y.z.size(); ++i) os << ",post_z" << i;
  }
  os << '\n';
  for (const auto& jr : arc.jumps) {
    os << format_double(jr.time.t) << ',' << jr.time.j << ',' << format_double(jr.selection);
    for (Index i = 0; i < jr.v.size(); ++i) os << ',' << format_double(jr.v(i));
    state_row(os, jr.pre);
    state_row(os, jr.post);
    os << '\n';
  }
}

void write_monitor_csv(std::ostream& os, const MonitorTrace& trace) {
  os << "t,j,E\n";
  for (std::size_t i = 0; i < trace.value.size(); ++i) {
    os << format_double(trace.t[i]) << ',' << trace.j[i] << ',' << format_double(trace.value[i]) << '\n';
  }
}

void write_trials_csv(std::ostream& os, const TrialReport& report) {
  os << "trial,outcome,hitting_time,settling_time,max_distance,final_distance,rejected_initial\n";
  for (const auto& r : report.rows) {
    os << r.index << ',' << r.outcome << ',' << format_double(r.hitting_time) << ','
       << format_double(r.settling_time) << ',' << format_double(r.max_distance) << ','
       << format_double(r.final_distance) << ',' << r.rejected_initial << '\n';
  }
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

struct Panel {
  double left, top, width, height;
  double t0, t1, lo, hi;

  double px(double t) const { return left + (t - t0) / (t1 - t0) * width; }
  double py(double v) const { return top + height - (v - lo) / (hi - lo) * height; }
};

void pad_range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void frame(std::ostream& os, const Panel& p, const std::string& ylabel) {
  os << "<rect x='" << p.left << "' y='" << p.top << "' width='" << p.width << "' height='" << p.height
     << "' fill='none' stroke='#444'/>\n";
  os << "<text x='" << p.left - 8 << "' y='" << p.top + 12 << "' text-anchor='end' font-size='11'>"
     << format_double(p.hi) << "</text>\n";
  os << "<text x='" << p.left - 8 << "' y='" << p.top + p.height << "' text-anchor='end' font-size='11'>"
     << format_double(p.lo) << "</text>\n";
  os << "<text x='" << p.left + 4 << "' y='" << p.top - 6 << "' font-size='12'>" << escape(ylabel)
     << "</text>\n";
}

}  // namespace

void write_arc_svg(std::ostream& os, const HybridArc& arc, const MonitorTrace& trace,
                   const PlotOptions& options, const OutputHeader& header) {
  std::vector<double> ts;
  std::vector<StateVector> ys;
  for (const auto& seg : arc.segments) {
    for (const auto& s : seg.samples) {
      ts.push_back(s.t);
      ys.push_back(s.y);
    }
  }
  if (ts.empty()) throw std::invalid_argument("write_arc_svg: empty arc");
  double t1 = ts.back();
  const double t0 = ts.front();
  if (t1 <= t0) t1 = t0 + 1.0;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& y : ys) {
    const Vector v = y.stacked();
    lo = std::min(lo, v.minCoeff());
    hi = std::max(hi, v.maxCoeff());
  }
  pad_range(lo, hi);

  auto energy = [&](double e) {
    return options.log_energy ? std::log10(std::max(e, 1e-16)) : e;
  };
  double elo = std::numeric_limits<double>::infinity(), ehi = -elo;
  for (double e : trace.value) {
    elo = std::min(elo, energy(e));
    ehi = std::max(ehi, energy(e));
  }
  pad_range(elo, ehi);

  const double W = options.width, H = options.height;
  const double left = 70, right = 20, gap = 50, top = 50;
  const double ph = (H - top - gap - 40) / 2.0;
  Panel state{left, top, W - left - right, ph, t0, t1, lo, hi};
  Panel en{left, top + ph + gap, W - left - right, ph, t0, t1, elo, ehi};

  os << "<?xml version='1.0' encoding='UTF-8'?>\n";
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
     << "' font-family='sans-serif'>\n";
  os << "<!--\n";
  header.write_comment(os, "");
  os << "-->\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << left << "' y='22' font-size='15'>" << escape(options.title) << "</text>\n";
  frame(os, state, "state");
  frame(os, en, options.log_energy ? "log10 E" : "E");

  for (const auto& jr : arc.jumps) {
    const double x = state.px(jr.time.t);
    os << "<line x1='" << x << "' y1='" << state.top << "' x2='" << x << "' y2='" << en.top + en.height
       << "' stroke='#bbb' stroke-dasharray='3,3'/>\n";
  }

  // Keep the file small: at most about 2000 vertices per trace.
  const std::size_t stride = std::max<std::size_t>(1, ts.size() / 2000);
  const Index dim = ys.front().dimension();
  for (Index c = 0; c < dim; ++c) {
    const char* colour = kPalette[c % 8];
    // Break the polyline at jumps so resets are not drawn as flow.
    for (const auto& seg : arc.segments) {
      os << "<polyline fill='none' stroke='" << colour << "' stroke-width='1.3' points='";
      const std::size_t n = seg.samples.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (i % stride != 0 && i + 1 != n) continue;
        const auto& s = seg.samples[i];
        os << state.px(s.t) << ',' << state.py(s.y.stacked()(c)) << ' ';
      }
      os << "'/>\n";
    }
    const std::string label =
        c < static_cast<Index>(options.labels.size()) ? options.labels[c] : "y" + std::to_string(c);
    os << "<text x='" << state.left + state.width - 60 << "' y='" << state.top + 14 + 13 * c
       << "' font-size='11' fill='" << colour << "'>" << escape(label) << "</text>\n";
  }

  os << "<polyline fill='none' stroke='#000' stroke-width='1.3' points='";
  for (std::size_t i = 0; i < trace.value.size(); ++i) {
    if (i % stride != 0 && i + 1 != trace.value.size()) continue;
    os << en.px(trace.t[i]) << ',' << en.py(energy(trace.value[i])) << ' ';
  }
  os << "'/>\n";
  os << "<text x='" << left + (W - left - right) / 2 << "' y='" << H - 10
     << "' text-anchor='middle' font-size='12'>t</text>\n";
  os << "</svg>\n";
}

}  // namespace shds
