#include <iostream>

#include "CLI11.hpp"
#include "perorb/cli.hpp"

namespace {

using perorb::cli::ExperimentConfig;

void common(CLI::App* sub, ExperimentConfig& c, bool needs_model = true) {
  if (needs_model) sub->add_option("--model", c.model_path, "Model JSON")->required();
  sub->add_option("--seed", c.seed, "Master RNG seed");
  sub->add_option("--out", c.output_dir, "Directory for artifacts (default: stdout only)");
  sub->add_option("--workers", c.workers, "Worker threads (default: PERORB_THREADS or all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic orbits of electromagnetic Lagrangians on the flat torus"};
  app.require_subcommand(1);
  ExperimentConfig c;

  auto* cv = app.add_subcommand("critical-values", "Estimate e0, the c_u bracket and an upper bound on c0.\n"
                                                   "Artifacts: critical_values.json, bisection.csv "
                                                   "(columns kappa,witness,action).");
  common(cv, c);
  cv->add_option("--tol", c.tol, "Bracket width for c_u");

  auto* mn = app.add_subcommand("minimize", "Minimize the action in a nonzero winding class.\n"
                                            "Artifacts: orbit.json (candidate + verification).");
  common(mn, c);
  mn->add_option("--kappa", c.kappa, "Energy level")->required();
  mn->add_option("--winding", c.winding, "Winding vector, e.g. 1,0")->delimiter(',')->required();
  mn->add_option("--N", c.N, "Samples per loop (power of two >= 64, default 256)");
  mn->add_option("--seeds", c.seeds, "Number of random starts");
  mn->add_option("--tol", c.tol, "Verification tolerance");

  auto* mp = app.add_subcommand("mountain-pass", "Mountain pass between a constant loop and a negative loop.\n"
                                                 "Artifacts: mountain_pass.json, path.json (array of loops).");
  common(mp, c);
  mp->add_option("--kappa", c.kappa, "Energy level in (e0, c_u)")->required();
  mp->add_option("--N", c.N, "Samples per path node (default 64)");
  mp->add_option("--tol", c.tol, "Verification tolerance");

  auto* sw = app.add_subcommand("sweep", "Mountain-pass levels on a grid in (e0, c_u) and a refined run at the "
                                         "selected level.\nArtifacts: sweep.json, paths.json, sweep.csv "
                                         "(columns kappa,c_estimate,argmax_T,grad_norm,ps_flag).");
  common(sw, c);
  sw->add_option("--grid", c.grid, "Grid points");
  sw->add_option("--M", c.M, "Bound on the forward difference quotient");
  sw->add_option("--N", c.N, "Samples per path node (default 64)");
  sw->add_option("--tol", c.tol, "c_u bracket width and verification tolerance");

  auto* tl = app.add_subcommand("two-lyapunov", "Two-level flow from mountain-pass path nodes.\n"
                                                "Artifacts: two_lyapunov.json, two_lyapunov.csv "
                                                "(columns trajectory,iter,s_bar,s_star,T,grad_norm,in_A).");
  common(tl, c);
  tl->add_option("--kappa", c.kappa, "Lower level")->required();
  double kstar = 0.0;
  auto* ks = tl->add_option("--kappa-star", kstar, "Upper level (default 1.2 kappa)");
  tl->add_option("--grad-tol", c.grad_tol, "Critical point tolerance");
  tl->add_option("--tol", c.tol, "Verification tolerance");

  auto* vf = app.add_subcommand("verify", "Integrate the Euler-Lagrange flow from a loop and check it closes.\n"
                                          "Artifacts: verify.json.");
  common(vf, c);
  vf->add_option("--orbit", c.orbit_path, "Loop or orbit JSON")->required();
  vf->add_option("--kappa", c.kappa, "Energy level")->required();
  vf->add_option("--tol", c.tol, "Tolerance for every residual");

  auto* st = app.add_subcommand("selftest", "Consistency checks on the built-in models.\nArtifacts: selftest.json.");
  common(st, c, false);

  CLI11_PARSE(app, argc, argv);
  c.command = app.get_subcommands().front()->get_name();
  if (*ks) c.kappa_star = kstar;
  return perorb::cli::run(c, std::cout);
}
