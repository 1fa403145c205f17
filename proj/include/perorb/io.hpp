#ifndef PERORB_IO_HPP
#define PERORB_IO_HPP

// JSON and CSV for loops, models and reports.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "perorb/critical_values.hpp"
#include "perorb/orbits.hpp"
#include "perorb/verify.hpp"

namespace perorb::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Loops: {n, N, T, k, q} with q the lift, one row per sample.

inline json to_json(const DiscreteLoop& loop) {
  json q = json::array();
  for (int i = 0; i < loop.size(); ++i) {
    json row = json::array();
    for (int a = 0; a < loop.dim(); ++a) row.push_back(loop.coord(i, a));
    q.push_back(std::move(row));
  }
  return {{"n", loop.dim()}, {"N", loop.size()}, {"T", loop.period()}, {"k", loop.winding()}, {"q", std::move(q)}};
}

namespace detail {

[[noreturn]] inline void bad(ErrorCode code, const std::string& field, const std::string& what) {
  throw Error(code, field + ": " + what, field);
}

inline const json& require(const json& j, const char* key, const std::string& path, ErrorCode code) {
  if (!j.is_object()) bad(code, path.empty() ? std::string("<root>") : path, "expected an object");
  auto it = j.find(key);
  const std::string field = path.empty() ? key : path + "." + key;
  if (it == j.end()) bad(code, field, "missing");
  return *it;
}

inline double number(const json& j, const std::string& field, ErrorCode code) {
  if (!j.is_number()) bad(code, field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(code, field, "not finite");
  return v;
}

inline int integer(const json& j, const std::string& field, ErrorCode code) {
  if (!j.is_number_integer()) bad(code, field, "expected an integer");
  return j.get<int>();
}

inline std::string at(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

}  // namespace detail

inline DiscreteLoop loop_from_json(const json& j) {
  using detail::require;
  constexpr auto code = ErrorCode::InvalidConfig;
  const int n = detail::integer(require(j, "n", "", code), "n", code);
  const int N = detail::integer(require(j, "N", "", code), "N", code);
  const double T = detail::number(require(j, "T", "", code), "T", code);
  const json& k = require(j, "k", "", code);
  const json& q = require(j, "q", "", code);
  if (n < 1 || n > kMaxDim) detail::bad(code, "n", "dimension out of range");
  if (!k.is_array() || static_cast<int>(k.size()) != n) detail::bad(code, "k", "expected n integers");
  if (!q.is_array() || static_cast<int>(q.size()) != N || N < 1) detail::bad(code, "q", "expected N rows");
  std::vector<int> wind;
  for (std::size_t a = 0; a < k.size(); ++a) wind.push_back(detail::integer(k[a], detail::at("k", a), code));
  std::vector<double> lift;
  lift.reserve(static_cast<std::size_t>(n) * N);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!q[i].is_array() || static_cast<int>(q[i].size()) != n) detail::bad(code, detail::at("q", i), "expected n numbers");
    for (std::size_t a = 0; a < q[i].size(); ++a) {
      lift.push_back(detail::number(q[i][a], detail::at(detail::at("q", i), a), code));
    }
  }
  return DiscreteLoop::from_lift(n, std::move(lift), std::move(wind), T);
}

// ---------------------------------------------------------------------------
// Models: {n, theta: [{coeffs: [...]}, ...], V: {coeffs: [...]}} with
// coefficient entries {mode, cos, sin}.

inline json to_json(const TrigSeries& s) {
  json coeffs = json::array();
  for (const auto& t : s.terms()) coeffs.push_back({{"mode", t.mode}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
  return {{"coeffs", std::move(coeffs)}};
}

inline json to_json(const TonelliModel& m) {
  json theta = json::array();
  for (const auto& t : m.theta()) theta.push_back(to_json(t));
  return {{"n", m.dim()}, {"theta", std::move(theta)}, {"V", to_json(m.potential())}};
}

inline TrigSeries series_from_json(const json& j, int n, const std::string& path) {
  constexpr auto code = ErrorCode::InvalidModel;
  const json& coeffs = detail::require(j, "coeffs", path, code);
  const std::string cpath = path + ".coeffs";
  if (!coeffs.is_array()) detail::bad(code, cpath, "expected an array");
  TrigSeries s(n);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const std::string tp = detail::at(cpath, i);
    const json& mode = detail::require(coeffs[i], "mode", tp, code);
    if (!mode.is_array() || static_cast<int>(mode.size()) != n) detail::bad(code, tp + ".mode", "expected n integers");
    FourierTerm t;
    for (std::size_t a = 0; a < mode.size(); ++a) t.mode.push_back(detail::integer(mode[a], detail::at(tp + ".mode", a), code));
    if (coeffs[i].contains("cos")) t.cos_coef = detail::number(coeffs[i]["cos"], tp + ".cos", code);
    if (coeffs[i].contains("sin")) t.sin_coef = detail::number(coeffs[i]["sin"], tp + ".sin", code);
    s.add(std::move(t));
  }
  return s;
}

inline TonelliModel model_from_json(const json& j) {
  constexpr auto code = ErrorCode::InvalidModel;
  const int n = detail::integer(detail::require(j, "n", "", code), "n", code);
  if (n < 1 || n > kMaxDim) detail::bad(code, "n", "dimension out of range");
  std::vector<TrigSeries> theta;
  if (j.contains("theta")) {
    const json& th = j["theta"];
    if (!th.is_array()) detail::bad(code, "theta", "expected an array");
    if (!th.empty() && static_cast<int>(th.size()) != n) detail::bad(code, "theta", "expected one component per axis");
    for (std::size_t i = 0; i < th.size(); ++i) theta.push_back(series_from_json(th[i], n, detail::at("theta", i)));
  }
  TrigSeries v = j.contains("V") ? series_from_json(j["V"], n, "V") : TrigSeries(n);
  return TonelliModel(n, std::move(theta), std::move(v));
}

inline json parse_text(const std::string& text, ErrorCode code, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(code, what + " is not valid JSON: " + e.what(), "<root>");
  }
}

inline std::string read_file(const std::string& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path, "path");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline TonelliModel load_model(const std::string& path) {
  return model_from_json(parse_text(read_file(path, ErrorCode::InvalidModel), ErrorCode::InvalidModel, "model"));
}

inline DiscreteLoop load_loop(const std::string& path) {
  const json j = parse_text(read_file(path, ErrorCode::InvalidConfig), ErrorCode::InvalidConfig, "loop");
  // Orbit reports carry the loop under candidate.loop.
  if (j.contains("candidate") && j["candidate"].contains("loop")) return loop_from_json(j["candidate"]["loop"]);
  if (j.contains("loop")) return loop_from_json(j["loop"]);
  return loop_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports.

inline json to_json(const VerificationReport& r) {
  return {{"closure_error", r.closure_error}, {"energy_mean", r.energy_mean},   {"energy_std", r.energy_std},
          {"energy_error", r.energy_error},   {"el_residual", r.el_residual},   {"dT_residual", r.dT_residual},
          {"dT_identity_gap", r.dT_identity_gap}, {"energy_drift", r.energy_drift}, {"passed", r.passed}};
}

inline json to_json(const OrbitCandidate& c) {
  return {{"kappa", c.kappa},         {"action", c.action},
          {"period", c.loop.period()}, {"grad_norm", c.grad_norm},
          {"grad_tol", c.grad_tol},    {"provenance", std::string(to_string(c.provenance))},
          {"loop", to_json(c.loop)}};
}

inline json to_json(const OrbitVerdict& v) {
  return {{"candidate", to_json(v.candidate)}, {"verification", to_json(v.verification)}};
}

inline json to_json(const BoundsEstimate& b) {
  return {{"L0", b.L0}, {"L1", b.L1}, {"L2", b.L2}, {"L3", b.L3}, {"E0", b.E0}, {"E1", b.E1},
          {"Theta", b.Theta}, {"C0", b.C0}, {"C1", b.C1}, {"resolution", b.resolution}};
}

inline json to_json(const Witness& w) {
  return {{"kappa", w.kappa}, {"action", w.action}, {"refined_action", w.refined_action},
          {"length", loop_length(w.loop)}, {"origin", w.origin}, {"loop", to_json(w.loop)}};
}

inline json to_json(const CriticalValueEstimates& e) {
  json j = {{"min_E", e.min_E},
            {"e0", e.e0},
            {"e0_error", e.e0_error},
            {"cu_bracket", {e.cu_lo, e.cu_hi}},
            {"cu_heuristic_side", "hi"},
            {"c0_upper", e.c0_upper},
            {"c0_estimate", e.c0_estimate},
            {"c0_max_mode", e.c0.max_mode},
            {"c0_harmonic", e.c0.harmonic},
            {"ordering_holds", e.ordering_holds},
            {"bounds", to_json(e.bounds)}};
  json ws = json::array();
  for (const auto& w : e.cu.witnesses) ws.push_back(to_json(w));
  j["witnesses"] = std::move(ws);
  if (e.cu.lo_witness) j["lo_witness"] = to_json(*e.cu.lo_witness);
  return j;
}

inline json to_json(const MinimaxReport<DiscreteLoop>& r) {
  json j = {{"c_estimate", r.c_estimate},
            {"argmax_index", r.argmax_index},
            {"argmax_T", r.argmax.period()},
            {"grad_norm", r.grad_norm},
            {"min_grad_norm_at_max", r.min_grad_norm_at_max},
            {"ps_flag", std::string(to_string(r.ps_flag))},
            {"sweeps", r.sweeps},
            {"path_max_history", r.path.history}};
  if (r.saddle) {
    j["saddle"] = {{"value", r.saddle->value}, {"grad_norm", r.saddle->grad_norm},
                   {"curvature", r.saddle->curvature}, {"iterations", r.saddle->iterations},
                   {"converged", r.saddle->converged}};
  }
  return j;
}

/// Path snapshot: array of loops.
inline json path_to_json(const MinimaxPath<DiscreteLoop>& p) {
  json a = json::array();
  for (const auto& l : p.nodes) a.push_back(to_json(l));
  return a;
}

inline json to_json(const LevelBound& l) { return {{"r1", l.r1}, {"r", l.r}, {"a", l.a}}; }

// ---------------------------------------------------------------------------
// Provenance stamping. The hash is FNV-1a over the canonical dump.

inline std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct Stamp {
  std::string hash;
  std::uint64_t seed = 0;
};

inline json stamped(json body, const Stamp& s) {
  body["config_hash"] = s.hash;
  body["seed"] = s.seed;
  return body;
}

/// CSV with a leading `#` provenance line.
class CsvWriter {
 public:
  CsvWriter(const Stamp& s, std::vector<std::string> columns) {
    out_ << "# config_hash=" << s.hash << " seed=" << s.seed << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
    out_ << std::setprecision(17);
  }
  template <class... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((out_ << (first ? "" : ",") << vals, first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

inline std::string sweep_csv(const SweepResult<DiscreteLoop>& s, const Stamp& st) {
  CsvWriter w(st, {"kappa", "c_estimate", "argmax_T", "grad_norm", "ps_flag"});
  for (const auto& r : s.rows) w.row(r.kappa, r.c_estimate, r.argmax.period(), r.grad_norm, to_string(r.ps_flag));
  return w.str();
}

inline std::string bisection_csv(const CuBracket& b, const Stamp& st) {
  CsvWriter w(st, {"kappa", "witness", "action"});
  for (const auto& h : b.history) w.row(h.kappa, h.witness ? 1 : 0, h.action);
  return w.str();
}

inline std::string descent_csv(const DescentResult& r, const Stamp& st) {
  CsvWriter w(st, {"iter", "action", "grad_norm", "T"});
  for (std::size_t i = 0; i < r.action_trace.size(); ++i) {
    w.row(i, r.action_trace[i], i < r.grad_norm_trace.size() ? r.grad_norm_trace[i] : 0.0,
          i < r.period_trace.size() ? r.period_trace[i] : 0.0);
  }
  return w.str();
}

inline std::string two_lyapunov_csv(const LoopTwoLyapunovResult& r, const Stamp& st) {
  CsvWriter w(st, {"trajectory", "iter", "s_bar", "s_star", "T", "grad_norm", "in_A"});
  for (std::size_t t = 0; t < r.trajectories.size(); ++t) {
    for (const auto& s : r.trajectories[t].trace) w.row(t, s.iter, s.s_bar, s.s_star, s.T, s.grad_norm, s.in_A ? 1 : 0);
  }
  return w.str();
}

}  // namespace perorb::io

#endif  // PERORB_IO_HPP
