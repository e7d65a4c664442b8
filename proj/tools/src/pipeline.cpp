#include "pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "harq/errors.hpp"
#include "harq_cli/commands.hpp"

namespace harq::cli {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

OutputSink::OutputSink(std::filesystem::path dir, std::string hash)
    : dir_(std::move(dir)), hash_(std::move(hash)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create '" + dir_.string() + "': " + ec.message(), "output_dir");
}

void OutputSink::write(const std::string& name, const std::string& schema,
                       const std::string& body) {
  const auto path = dir_ / name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'", "output_dir");
  os << "# schema: " << schema << "\n# config_hash: " << hash_ << '\n' << body;
  written_.push_back(path);
}

void OutputSink::write_json(const std::string& name, const Json& doc) {
  const auto path = dir_ / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'", "output_dir");
  os << doc.dump(2) << '\n';
  written_.push_back(path);
}

Policy choose_policy(const SchemeModel& model, const std::string& which, double& gain) {
  Policy p;
  if (which == "fixed" || model.config.kind == SchemeKind::FixedHarq) {
    p = fixed_harq_policy(model);
    gain = policy_average_cost(model.mdp, p);
  } else if (which == "fresh") {
    p = always_fresh_policy(model);
    gain = policy_average_cost(model.mdp, p);
  } else if (which == "delay") {
    SchemeConfig d = model.config;
    d.objective = Objective::DelayCost;
    const SchemeModel dm = build_scheme(d);
    p = relative_value_iteration(dm.mdp).policy;
    gain = policy_average_cost(model.mdp, p);
  } else {
    const SolveReport r = relative_value_iteration(model.mdp);
    p = r.policy;
    gain = r.average_cost;
  }
  p.scheme_label = model.config.label();
  return p;
}

SeriesResult run_series(const SeriesSpec& spec, const EvalConfig& eval, unsigned threads) {
  SeriesResult r;
  r.spec = spec;
  SchemeConfig cfg = spec.scheme;
  std::string which = spec.policy;
  if (cfg.objective == Objective::DelayCost) {
    cfg.objective = Objective::MseCost;
    if (which == "optimal") which = "delay";
  }
  r.model = build_scheme(cfg);
  double gain = 0.0;
  r.policy = choose_policy(r.model, which, gain);
  r.mu_analytic = policy_average_cost(r.model.mdp, r.policy);
  r.report = simulate_policy(r.model, r.policy, eval, threads);
  return r;
}

std::string policy_csv(const SchemeModel& model, const Policy& policy, double gain,
                       bool stable) {
  std::ostringstream os;
  os << "# scheme: " << model.config.label() << '\n';
  os << "state,action,gain,stable\n";
  for (StateId s = 0; s < static_cast<StateId>(model.states.size()); ++s) {
    os << '"' << model.mdp.state_label(s) << "\"," << model.mdp.action_label(policy.decision[s])
       << ',' << fmt(gain) << ',' << (stable ? 1 : 0) << '\n';
  }
  return os.str();
}

Policy read_policy_csv(std::istream& is, const SchemeModel& model) {
  std::map<std::string, StateId> states;
  for (StateId s = 0; s < static_cast<StateId>(model.states.size()); ++s) {
    states[model.mdp.state_label(s)] = s;
  }
  std::map<std::string, ActionId> actions;
  for (ActionId a = 0; a < static_cast<ActionId>(model.mdp.num_actions()); ++a) {
    actions[model.mdp.action_label(a)] = a;
  }
  Policy p;
  p.scheme_label = model.config.label();
  p.decision.assign(model.states.size(), -1);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    if (line.front() != '"') throw ConfigError("malformed row: " + line, "policy");
    const auto close = line.find('"', 1);
    if (close == std::string::npos || close + 1 >= line.size() || line[close + 1] != ',') {
      throw ConfigError("malformed row: " + line, "policy");
    }
    const std::string state = line.substr(1, close - 1);
    const auto comma = line.find(',', close + 2);
    const std::string action = line.substr(close + 2, comma - close - 2);
    auto si = states.find(state);
    auto ai = actions.find(action);
    if (si == states.end()) throw ConfigError("unknown state " + state, "policy");
    if (ai == actions.end()) throw ConfigError("unknown action " + action, "policy");
    p.decision[si->second] = ai->second;
  }
  for (StateId s = 0; s < static_cast<StateId>(p.decision.size()); ++s) {
    if (p.decision[s] < 0) {
      throw ConfigError("no action for state " + model.mdp.state_label(s), "policy");
    }
  }
  return p;
}

Json run_meta(const std::string& command, const RunConfig& rc,
                     const std::string& hash) {
  const StabilityReport st = stability_check(rc.scheme);
  Json meta = {{"schema", "harq.run_meta/1"},
               {"tool_version", kToolVersion},
               {"command", command},
               {"config_hash", hash},
               {"seed", rc.eval.seed},
               {"scheme", rc.scheme.label()},
               {"stability",
                {{"ok", st.ok}, {"product", st.product}, {"eps", st.eps}, {"rho_sq", st.rho_sq}}},
               {"config", rc.resolved}};
  return meta;
}

std::string to_string(const EvalReport& r, void (*writer)(std::ostream&, const EvalReport&)) {
  std::ostringstream os;
  writer(os, r);
  return os.str();
}

}  // namespace harq::cli
