#ifndef PERORB_CLI_HPP
#define PERORB_CLI_HPP

// Experiment runner behind the `perorb` tool: one ExperimentConfig per
// invocation, a JSON report on stdout, and artifacts in the output
// directory. Every artifact carries the config hash and the RNG seed.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "perorb/io.hpp"
#include "perorb/models.hpp"

namespace perorb::cli {

using io::json;

struct ExperimentConfig {
  std::string command;
  std::string model_path;
  std::string orbit_path;  // verify
  double kappa = 0.5;
  std::optional<double> kappa_star;  // two-lyapunov; default 1.2κ
  std::vector<int> winding{1, 0};
  int grid = 16;
  double M = 50.0;
  double tol = 1e-3;
  double grad_tol = 1e-6;
  /// Samples per loop; 0 picks the command default.
  int N = 0;
  int seeds = 8;
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: stdout only
  int workers = 0;         // 0: PERORB_THREADS or hardware

  int samples_or(int fallback) const { return N > 0 ? N : fallback; }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline void validate(const ExperimentConfig& c) {
  auto bad = [](const char* field, const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, std::string(field) + ": " + what, field);
  };
  static const std::vector<std::string> commands{"critical-values", "minimize", "mountain-pass", "sweep",
                                                 "two-lyapunov",    "verify",   "selftest"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end()) bad("command", "unknown command");
  if (c.command != "selftest" && c.model_path.empty()) bad("model", "a model file is required");
  if (c.command == "verify" && c.orbit_path.empty()) bad("orbit", "an orbit file is required");
  if (c.N != 0 && (c.N < 64 || !is_power_of_two(c.N))) bad("N", "must be a power of two >= 64");
  if (!(c.tol > 0.0)) bad("tol", "must be positive");
  if (!(c.grad_tol > 0.0)) bad("grad_tol", "must be positive");
  if (!std::isfinite(c.kappa)) bad("kappa", "must be finite");
  if (c.kappa_star && !(*c.kappa_star > c.kappa)) bad("kappa_star", "must exceed kappa");
  if (c.grid < 2) bad("grid", "needs at least two points");
  if (!(c.M > 0.0)) bad("M", "must be positive");
  if (c.seeds < 1) bad("seeds", "must be positive");
  if (c.workers < 0) bad("workers", "must be non-negative");
}

inline json to_json(const ExperimentConfig& c) {
  json j = {{"command", c.command}, {"model", c.model_path}, {"orbit", c.orbit_path}, {"kappa", c.kappa},
            {"winding", c.winding}, {"grid", c.grid},        {"M", c.M},               {"tol", c.tol},
            {"grad_tol", c.grad_tol}, {"N", c.N},            {"seeds", c.seeds},       {"seed", c.seed}};
  if (c.kappa_star) j["kappa_star"] = *c.kappa_star;
  return j;
}

/// Output directory and worker count are left out: they do not change
/// the numbers.
inline io::Stamp stamp_of(const ExperimentConfig& c) { return {io::config_hash(to_json(c)), c.seed}; }

class Artifacts {
 public:
  Artifacts(const ExperimentConfig& c) : dir_(c.output_dir), stamp_(stamp_of(c)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  const io::Stamp& stamp() const { return stamp_; }
  void json_file(const std::string& name, const json& body) const { text(name, io::stamped(body, stamp_).dump(2)); }
  void text(const std::string& name, const std::string& body) const {
    if (dir_.empty()) return;
    std::ofstream out(std::filesystem::path(dir_) / name);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + name, "output");
    out << body << '\n';
  }

 private:
  std::string dir_;
  io::Stamp stamp_;
};

inline int workers_of(const ExperimentConfig& c) { return c.workers > 0 ? c.workers : worker_count(); }

inline WitnessOptions witness_options(const ExperimentConfig& c) {
  WitnessOptions w;
  w.seed = c.seed;
  w.workers = workers_of(c);
  return w;
}

inline json run_critical_values(const ExperimentConfig& c, const Artifacts& out) {
  const auto model = io::load_model(c.model_path);
  CriticalValueOptions o;
  o.cu.tol = c.tol;
  o.cu.witness = witness_options(c);
  const auto e = estimate_critical_values(model, o);
  json j = io::to_json(e);
  out.json_file("critical_values.json", j);
  out.text("bisection.csv", io::bisection_csv(e.cu, out.stamp()));
  return j;
}

inline json run_minimize(const ExperimentConfig& c, const Artifacts& out) {
  const auto model = io::load_model(c.model_path);
  ClassMinOptions o;
  o.samples = c.samples_or(256);
  o.seeds = c.seeds;
  o.seed = c.seed;
  o.workers = workers_of(c);
  auto r = minimize_in_class(model, c.kappa, c.winding, o);
  VerifyTolerances tol{c.tol, c.tol, c.tol, c.tol, 1e-3};
  const OrbitVerdict v{r.candidate, verify_orbit(model, r.candidate.loop, c.kappa, tol)};
  json j = io::to_json(v);
  j["seed_actions"] = r.seed_actions;
  j["spread"] = r.spread;
  json terms = json::array();
  for (auto t : r.terminations) terms.push_back(std::string(to_string(t)));
  j["terminations"] = std::move(terms);
  out.json_file("orbit.json", j);
  return j;
}

inline MountainPassOrbitOptions mp_options(const ExperimentConfig& c) {
  MountainPassOrbitOptions o;
  o.samples = c.samples_or(64);
  o.witness_opts = witness_options(c);
  o.tolerances = VerifyTolerances{c.tol, c.tol, c.tol, c.tol, 1e-3};
  return o;
}

inline json mp_json(const MountainPassOrbitResult& r) {
  json j = {{"report", io::to_json(r.report)}, {"level", io::to_json(r.level)}, {"e0", r.e0},
            {"b", r.b}, {"T0", r.T0}, {"level_bound_holds", r.level_bound_holds}, {"witness", io::to_json(r.witness)}};
  j["orbit"] = r.orbit ? io::to_json(*r.orbit) : json(nullptr);
  return j;
}

inline json run_mountain_pass(const ExperimentConfig& c, const Artifacts& out) {
  const auto model = io::load_model(c.model_path);
  const auto r = mountain_pass_orbit(model, c.kappa, mp_options(c));
  json j = mp_json(r);
  out.json_file("mountain_pass.json", j);
  out.json_file("path.json", {{"nodes", io::path_to_json(r.report.path)}});
  return j;
}

inline json run_sweep(const ExperimentConfig& c, const Artifacts& out) {
  const auto model = io::load_model(c.model_path);
  CriticalValueOptions co;
  co.cu.tol = c.tol;
  co.cu.witness = witness_options(c);
  const auto e = estimate_critical_values(model, co);
  if (!e.cu.lo_witness || !(e.e0 < e.cu_lo)) {
    throw Error(ErrorCode::EmptyInterval, "no certified negative witness above e0");
  }
  LoopSweepOptions o;
  o.grid = c.grid;
  o.M = c.M;
  o.mp = mp_options(c);
  const auto r = loop_struwe_sweep(model, e.e0, e.cu_lo, *e.cu.lo_witness, o);
  json rows = json::array();
  for (std::size_t i = 0; i < r.sweep.rows.size(); ++i) {
    const auto& row = r.sweep.rows[i];
    rows.push_back({{"kappa", row.kappa}, {"c_estimate", row.c_estimate}, {"argmax_T", row.argmax.period()},
                    {"grad_norm", row.grad_norm}, {"ps_flag", std::string(to_string(row.ps_flag))},
                    {"level_a", r.levels[i].a}});
  }
  json j = {{"e0", r.e0}, {"cu_lo", r.cu_lo}, {"kappa_bar", r.kappa_bar}, {"monotone", r.sweep.monotone},
            {"max_monotonicity_defect", r.sweep.max_monotonicity_defect}, {"all_positive", r.all_positive},
            {"levels_hold", r.levels_hold}, {"selected_quotient", r.sweep.selected_quotient},
            {"selection_within_bound", r.sweep.selection_within_bound}, {"rows", std::move(rows)}};
  if (r.sweep.refined) j["refined"] = io::to_json(*r.sweep.refined);
  j["orbit"] = r.orbit ? io::to_json(*r.orbit) : json(nullptr);
  out.json_file("sweep.json", j);
  out.text("sweep.csv", io::sweep_csv(r.sweep, out.stamp()));
  json paths = json::array();
  for (std::size_t i = 0; i < r.sweep.paths.size(); ++i) {
    paths.push_back({{"kappa", r.sweep.rows[i].kappa}, {"nodes", io::path_to_json(r.sweep.paths[i])}});
  }
  out.json_file("paths.json", {{"paths", std::move(paths)}});
  return j;
}

inline json run_two_lyapunov(const ExperimentConfig& c, const Artifacts& out) {
  const auto model = io::load_model(c.model_path);
  const auto mp = mountain_pass_orbit(model, c.kappa, mp_options(c));
  std::vector<DiscreteLoop> seeds(mp.report.path.nodes.begin() + 1, mp.report.path.nodes.end() - 1);
  TwoLyapunovOptions o;
  o.kappa_bar = c.kappa;
  o.kappa_star = c.kappa_star.value_or(c.kappa + 0.2 * std::abs(c.kappa));
  o.T_star = 1.5 * mp.report.argmax.period();
  o.a = mp.report.c_estimate;
  o.d = 2.0 * mp.report.c_estimate;
  o.rho_level = 0.5 * mp.level.a;
  o.grad_tol = c.grad_tol;
  const auto r = loop_two_lyapunov(model, estimate_bounds(model, 64), seeds, o,
                                   VerifyTolerances{c.tol, c.tol, c.tol, c.tol, 1e-3}, workers_of(c));
  json traj = json::array();
  for (const auto& t : r.trajectories) {
    traj.push_back({{"outcome", std::string(to_string(t.outcome))}, {"steps", t.trace.size()},
                    {"max_star_increase_in_A", t.max_star_increase_in_A}, {"max_T_in_trap", t.max_T_in_trap},
                    {"period_bound", t.period_bound}, {"period_bound_holds", t.period_bound_holds}, {"note", t.note}});
  }
  json cands = json::array();
  for (const auto& v : r.candidates) cands.push_back(io::to_json(v));
  json j = {{"kappa_bar", o.kappa_bar}, {"kappa_star", o.kappa_star}, {"T_star", o.T_star}, {"a", o.a}, {"d", o.d},
            {"violations", r.violations}, {"trajectories", std::move(traj)}, {"candidates", std::move(cands)}};
  out.json_file("two_lyapunov.json", j);
  out.text("two_lyapunov.csv", io::two_lyapunov_csv(r, out.stamp()));
  return j;
}

inline json run_verify(const ExperimentConfig& c, const Artifacts& out) {
  const auto model = io::load_model(c.model_path);
  const auto loop = io::load_loop(c.orbit_path);
  const auto v = verify_orbit(model, loop, c.kappa, VerifyTolerances{c.tol, c.tol, c.tol, c.tol, 1e-3});
  json j = io::to_json(v);
  out.json_file("verify.json", j);
  return j;
}

// Quick internal consistency checks on the built-in models.
inline json run_selftest(const ExperimentConfig& c, const Artifacts& out) {
  json checks = json::array();
  bool ok = true;
  auto record = [&](const std::string& name, double value, double limit) {
    const bool pass = value < limit;
    ok = ok && pass;
    checks.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"passed", pass}});
  };
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss;
  for (const auto& nm : models::suite()) {
    const FunctionalContext ctx(nm.model, 0.7, estimate_bounds(nm.model, 64));
    std::vector<double> q;
    for (int i = 0; i < 64; ++i) {
      const double s = i / 64.0;
      q.push_back(s + 0.02 * std::sin(2 * std::numbers::pi * s));
      q.push_back(0.3 + 0.03 * std::cos(2 * std::numbers::pi * s));
    }
    const auto loop = DiscreteLoop::from_lift(2, q, {1, 0}, 0.9);
    const Evaluation ev = evaluate(ctx, loop);
    TangentVector eta(2, 64);
    for (double& v : eta.xi) v = 1e-2 * gauss(rng);
    eta.tau = 1e-2 * gauss(rng);
    const double h = 1e-5;
    const double fd = (action(ctx, *displace(loop, eta, h, 1e-6)) - action(ctx, *displace(loop, eta, -h, 1e-6))) / (2 * h);
    const double an = pairing(loop, ev.differential, eta);
    record(nm.name + ": differential vs central difference", std::abs(fd - an) / std::max(1e-12, std::abs(an)), 1e-6);
    record(nm.name + ": period derivative identity",
           std::abs(mean_kappa_minus_energy(ctx, loop) - ev.differential.tau), 1e-12);
  }
  const auto line = minimize_in_class(models::pure_kinetic(), 0.5, {1, 0});
  record("pure kinetic class minimum", std::abs(line.candidate.action - 1.0), 1e-3);
  const std::vector<double> x0{0.1, 0.2}, v0{0.9, 0.4};
  const double order = rk4_order(models::cosine_potential(), x0, v0, 1.0, 100);
  record("RK4 order distance from 4", std::abs(order - 4.0), 0.3);
  json j = {{"passed", ok}, {"checks", std::move(checks)}};
  out.json_file("selftest.json", j);
  return j;
}

inline json error_json(const Error& e) {
  return {{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"field", e.field()}}}};
}

/// Exit status: 0 success, 1 module error or failed selftest, 2 malformed
/// model or config.
inline int run(const ExperimentConfig& c, std::ostream& os = std::cout) {
  try {
    validate(c);
    const Artifacts out(c);
    json j;
    if (c.command == "critical-values") j = run_critical_values(c, out);
    else if (c.command == "minimize") j = run_minimize(c, out);
    else if (c.command == "mountain-pass") j = run_mountain_pass(c, out);
    else if (c.command == "sweep") j = run_sweep(c, out);
    else if (c.command == "two-lyapunov") j = run_two_lyapunov(c, out);
    else if (c.command == "verify") j = run_verify(c, out);
    else j = run_selftest(c, out);
    os << io::stamped(j, out.stamp()).dump(2) << '\n';
    return (c.command == "selftest" && !j["passed"].get<bool>()) ? 1 : 0;
  } catch (const Error& e) {
    os << error_json(e).dump(2) << '\n';
    return (e.code() == ErrorCode::InvalidModel || e.code() == ErrorCode::InvalidConfig) ? 2 : 1;
  } catch (const std::exception& e) {
    os << json{{"error", {{"code", "Internal"}, {"message", e.what()}, {"field", ""}}}}.dump(2) << '\n';
    return 1;
  }
}

}  // namespace perorb::cli

#endif  // PERORB_CLI_HPP
