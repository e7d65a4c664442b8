#include "harq_cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "harq/errors.hpp"
#include "harq/mdp.hpp"
#include "pipeline.hpp"
#include "reproduce.hpp"

#ifndef HARQ_DEFAULT_PRESET_DIR
#define HARQ_DEFAULT_PRESET_DIR "configs"
#endif

namespace harq::cli {
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> slots;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "JSON run configuration");
  if (config_required) c->required();
  cmd->add_option("--seed", o.seed, "Monte Carlo seed (overrides eval.seed)");
  cmd->add_option("--out", o.out, std::string("Output directory (default: $") + kOutDirEnv +
                                      " or ./harq_out)");
  cmd->add_option("--trials", o.trials, "Monte Carlo trials (overrides eval.trials)");
  cmd->add_option("--slots", o.slots, "Slots per trial (overrides eval.slots)");
  cmd->add_option("--threads", o.threads, "Worker threads, 0 = all cores");
}

Overrides overrides_of(const CommonOptions& o) { return {o.seed, o.trials, o.slots}; }

fs::path output_dir(const CommonOptions& o, const RunConfig& rc) {
  if (!o.out.empty()) return o.out;
  if (!rc.output_dir.empty()) return rc.output_dir;
  return default_output_dir();
}

void finish(std::ostream& out, const OutputSink& sink) {
  for (const auto& p : sink.written()) out << "wrote " << p.string() << '\n';
}

int cmd_solve(const CommonOptions& o, std::ostream& out) {
  const RunConfig rc = load_config(o.config, overrides_of(o));
  const std::string hash = hash_hex(config_hash(rc.resolved));
  OutputSink sink(output_dir(o, rc), hash);

  const SchemeModel model = build_scheme(rc.scheme);
  double gain = 0.0;
  const Policy policy = choose_policy(model, rc.policy, gain);
  const StabilityReport st = stability_check(rc.scheme);
  sink.write("policy.csv", "harq.policy/1", policy_csv(model, policy, gain, st.ok));
  std::ostringstream mdp;
  write_mdp(mdp, model.mdp);
  sink.write("model.tsv", "harq.mdp/1", mdp.str());
  sink.write_json("resolved_config.json", rc.resolved);
  sink.write_json("run_meta.json", run_meta("solve", rc, hash));
  out << model.config.label() << ": gain " << fmt(gain) << ", " << model.states.size()
      << " states, stability product " << fmt(st.product) << (st.ok ? "" : " (not < 1)")
      << '\n';
  finish(out, sink);
  return kExitOk;
}

void write_eval_files(OutputSink& sink, const std::string& prefix, const EvalReport& rep) {
  sink.write(prefix + "trace.csv", "harq.trace/1", to_string(rep, write_trace_csv));
  sink.write(prefix + "histogram.csv", "harq.histogram/1", to_string(rep, write_histogram_csv));
}

int cmd_evaluate(const CommonOptions& o, const std::string& policy_path, std::ostream& out) {
  const RunConfig rc = load_config(o.config, overrides_of(o));
  const std::string hash = hash_hex(config_hash(rc.resolved));
  OutputSink sink(output_dir(o, rc), hash);

  SchemeConfig cfg = rc.scheme;
  std::string which = rc.policy;
  if (cfg.objective == Objective::DelayCost) {
    cfg.objective = Objective::MseCost;
    if (which == "optimal") which = "delay";
  }
  const SchemeModel model = build_scheme(cfg);
  Policy policy;
  if (!policy_path.empty()) {
    std::ifstream in(policy_path);
    if (!in) throw ConfigError("cannot open '" + policy_path + "'", "policy");
    policy = read_policy_csv(in, model);
  } else {
    double gain = 0.0;
    policy = choose_policy(model, which, gain);
  }
  const double analytic = policy_average_cost(model.mdp, policy);
  const EvalReport rep = simulate_policy(model, policy, rc.eval, o.threads);
  write_eval_files(sink, "", rep);
  std::ostringstream summary;
  summary << "mu_mse,sigma2_mse,mu_analytic,seed\n"
          << fmt(rep.mu_mse) << ',' << fmt(rep.sigma2_mse) << ',' << fmt(analytic) << ','
          << rep.seed_used << '\n';
  sink.write("summary.csv", "harq.summary/1", summary.str());
  sink.write_json("resolved_config.json", rc.resolved);
  sink.write_json("run_meta.json", run_meta("evaluate", rc, hash));
  out << model.config.label() << ": mu_mse " << fmt(rep.mu_mse) << ", sigma2_mse "
      << fmt(rep.sigma2_mse) << ", analytic " << fmt(analytic) << '\n';
  finish(out, sink);
  return kExitOk;
}

ParetoFront run_scan(const RunConfig& rc, unsigned threads) {
  ScanOptions opts;
  opts.eval = rc.eval;
  opts.threads = threads;
  opts.q_max = rc.scheme.q_max;
  opts.objective = rc.scheme.objective;
  opts.global_theta = rc.pareto->global_theta;
  if (rc.pareto->grid == "tau") {
    return scan_ir(rc.scheme.link, rc.scheme.cost, rc.pareto->values, opts);
  }
  return scan_cc(rc.scheme.link, rc.scheme.cost, rc.pareto->values, rc.pareto->mode, opts);
}

void write_front(OutputSink& sink, const ParetoFront& front, const RunConfig& rc) {
  std::ostringstream csv;
  write_front_csv(csv, front);
  sink.write("front.csv", "harq.front/1", csv.str());
  for (std::size_t i = 0; i < front.scanned.size(); ++i) {
    const ScanPoint& pt = front.scanned[i];
    SchemeConfig cfg = rc.scheme;
    cfg.objective = rc.scheme.objective;
    if (rc.pareto->grid == "tau") {
      cfg.kind = SchemeKind::Ir;
      cfg.tau = pt.params.at("tau");
    } else if (rc.pareto->mode == CcMode::Static) {
      cfg.kind = SchemeKind::SnCc;
      cfg.alpha = pt.params.at("alpha");
    } else {
      cfg.kind = SchemeKind::DnCc;
      cfg.levels = rc.pareto->values;
      cfg.dn_mode =
          rc.pareto->mode == CcMode::DynamicPairs ? DnMode::PairEnum : DnMode::Augmented;
      if (cfg.dn_mode == DnMode::PairEnum) {
        cfg.pair_prev_alpha = pt.params.at("alpha_prev");
        cfg.pair_alpha = pt.params.at("alpha");
      }
    }
    const SchemeModel model = build_scheme(cfg);
    sink.write("policy_" + std::to_string(i + 1) + ".csv", "harq.policy/1",
               policy_csv(model, pt.policy, pt.mu, stability_check(cfg).ok));
  }
}

int cmd_pareto(const CommonOptions& o, std::ostream& out) {
  const RunConfig rc = load_config(o.config, overrides_of(o));
  if (!rc.pareto) throw ConfigError("missing grid section", "pareto");
  const std::string hash = hash_hex(config_hash(rc.resolved));
  OutputSink sink(output_dir(o, rc), hash);
  const ParetoFront front = run_scan(rc, o.threads);
  write_front(sink, front, rc);
  sink.write_json("resolved_config.json", rc.resolved);
  sink.write_json("run_meta.json", run_meta("pareto", rc, hash));
  if (front.status == ScanStatus::EmptyFeasibleSet) {
    out << "status: EmptyFeasibleSet\n";
  } else {
    out << "front: " << front.points.size() << " of " << front.scanned.size()
        << " points, pick mu " << fmt(front.points[*front.pick].mu) << '\n';
  }
  finish(out, sink);
  return kExitOk;
}

fs::path preset_dir() {
  if (const char* env = std::getenv(kPresetDirEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return HARQ_DEFAULT_PRESET_DIR;
}

int cmd_reproduce(const std::string& figure, const CommonOptions& o, std::ostream& out) {
  if (std::find(kFigures.begin(), kFigures.end(), figure) == kFigures.end()) {
    throw ConfigError("unknown figure '" + figure + "'", "figure");
  }
  const std::string path =
      o.config.empty() ? (preset_dir() / (figure + ".json")).string() : o.config;
  const RunConfig rc = load_config(path, overrides_of(o));
  if (rc.series.empty()) throw ConfigError("figure presets need series", "series");
  const std::string hash = hash_hex(config_hash(rc.resolved));
  OutputSink sink(output_dir(o, rc) / figure, hash);

  std::vector<SeriesResult> results;
  std::ostringstream summary;
  summary << "series,scheme,policy,rho_sq,mu_analytic,mu_sim,sigma2_sim,stable\n";
  for (const auto& spec : rc.series) {
    results.push_back(run_series(spec, rc.eval, o.threads));
    const SeriesResult& r = results.back();
    write_eval_files(sink, spec.name + "_", r.report);
    summary << spec.name << ',' << spec.scheme.label() << ',' << spec.policy << ','
            << fmt(spec.scheme.cost.rho_sq()) << ',' << fmt(r.mu_analytic) << ','
            << fmt(r.report.mu_mse) << ',' << fmt(r.report.sigma2_mse) << ','
            << (stability_check(spec.scheme).ok ? 1 : 0) << '\n';
  }
  sink.write("summary.csv", "harq.figure_summary/1", summary.str());
  if (rc.pareto) write_front(sink, run_scan(rc, o.threads), rc);

  const auto checks = figure_assertions(figure, results, rc.eval, o.threads);
  std::ostringstream csv;
  csv << "assertion,detail,pass\n";
  bool all = true;
  for (const auto& a : checks) {
    csv << '"' << a.name << "\",\"" << a.detail << "\"," << (a.pass ? 1 : 0) << '\n';
    out << (a.pass ? "PASS " : "FAIL ") << figure << ": " << a.name << " [" << a.detail
        << "]\n";
    all = all && a.pass;
  }
  sink.write("assertions.csv", "harq.assertions/1", csv.str());
  sink.write_json("resolved_config.json", rc.resolved);
  sink.write_json("run_meta.json", run_meta("reproduce", rc, hash));
  finish(out, sink);
  return all ? kExitOk : kExitAssertion;
}

int cmd_verify(const std::string& front_path, const std::string& mdp_path,
               std::ostream& out) {
  if (front_path.empty() && mdp_path.empty()) {
    throw ConfigError("give --front and/or --mdp", "verify");
  }
  std::size_t problems = 0;
  if (!front_path.empty()) {
    std::ifstream in(front_path);
    if (!in) throw ConfigError("cannot open '" + front_path + "'", "front");
    const auto rows = read_front_csv(in);
    const auto v = front_violations(rows);
    for (const auto& m : v) out << "front: " << m << '\n';
    out << "front: " << rows.size() << " rows, " << v.size() << " violations\n";
    problems += v.size();
  }
  if (!mdp_path.empty()) {
    std::ifstream in(mdp_path);
    if (!in) throw ConfigError("cannot open '" + mdp_path + "'", "mdp");
    const FiniteMdp mdp = read_mdp(in);
    const auto v = validate(mdp);
    for (const auto& m : v) out << "mdp: " << m.check << ": " << m.message << '\n';
    out << "mdp: " << mdp.num_states() << " states, " << v.size() << " violations\n";
    problems += v.size();
  }
  return problems == 0 ? kExitOk : kExitAssertion;
}

}  // namespace

std::string default_output_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "harq_out";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Remote-estimation HARQ policy toolkit", "harq"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions solve_o, eval_o, pareto_o, repro_o;
  std::string policy_path, figure, front_path, mdp_path;

  auto* solve = app.add_subcommand("solve", "Build a scheme MDP and solve it");
  add_common(solve, solve_o, true);
  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo evaluation of a policy");
  add_common(evaluate, eval_o, true);
  evaluate->add_option("--policy", policy_path, "Policy CSV written by solve");
  auto* pareto = app.add_subcommand("pareto", "Epsilon-constraint scan over tau or alpha");
  add_common(pareto, pareto_o, true);
  auto* reproduce = app.add_subcommand("reproduce", "Run a bundled figure preset");
  reproduce->add_option("figure", figure, "fig3 ... fig10")->required();
  add_common(reproduce, repro_o, false);
  auto* verify = app.add_subcommand("verify", "Recheck a front CSV or MDP file");
  verify->add_option("--front", front_path, "front.csv to recheck for dominance");
  verify->add_option("--mdp", mdp_path, "model.tsv to validate");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(solve_o, out);
    if (*evaluate) return cmd_evaluate(eval_o, policy_path, out);
    if (*pareto) return cmd_pareto(pareto_o, out);
    if (*reproduce) return cmd_reproduce(figure, repro_o, out);
    if (*verify) return cmd_verify(front_path, mdp_path, out);
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace harq::cli
