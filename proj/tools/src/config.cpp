#include "harq_cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "harq/errors.hpp"

namespace harq::cli {
namespace {

constexpr double kDefaultRhoSq = 1.8385 * 1.8385;

void check_keys(const Json& obj, const std::set<std::string>& allowed,
                const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError("must be an object", prefix);
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) {
      throw ConfigError("unknown key", prefix.empty() ? k : prefix + "." + k);
    }
  }
}

double get_number(const Json& obj, const char* key, double fallback,
                  const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("must be a number", prefix + "." + key);
  return v.get<double>();
}

int get_int(const Json& obj, const char* key, int fallback, const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError("must be an integer", prefix + "." + key);
  return v.get<int>();
}

std::string get_string(const Json& obj, const char* key, const std::string& fallback,
                       const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("must be a string", prefix + "." + key);
  return v.get<std::string>();
}

std::vector<double> get_list(const Json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key)) return {};
  const Json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError("must be a list of numbers", field);
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("must be a list of numbers", field);
    out.push_back(x.get<double>());
  }
  return out;
}

Matrix parse_matrix(const Json& v, const std::string& field) {
  if (v.is_number()) {
    Matrix m(1, 1);
    m(0, 0) = v.get<double>();
    return m;
  }
  if (!v.is_array() || v.empty()) throw ConfigError("must be a nonempty list of rows", field);
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.empty()) throw ConfigError("every row must be a nonempty list", field);
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError("rows have different lengths", field);
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      const Json& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) throw ConfigError("entries must be numbers", field);
      m(i, j) = x.get<double>();
    }
  }
  return m;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

LtiSystem parse_system(const Json& doc, Json& out) {
  if (!doc.contains("system")) {
    LtiSystem sys = LtiSystem::reference();
    out = {{"A", matrix_json(sys.A())}, {"C", matrix_json(sys.C())},
           {"Qw", matrix_json(sys.Qw())}, {"Qv", matrix_json(sys.Qv())},
           {"Sigma0", matrix_json(sys.Sigma0())}};
    return sys;
  }
  const Json& s = doc.at("system");
  check_keys(s, {"A", "C", "Qw", "Qv", "Sigma0"}, "system");
  for (const char* k : {"A", "C", "Qw", "Qv", "Sigma0"}) {
    if (!s.contains(k)) throw ConfigError("missing", std::string("system.") + k);
  }
  LtiSystem sys(parse_matrix(s.at("A"), "system.A"), parse_matrix(s.at("C"), "system.C"),
                parse_matrix(s.at("Qw"), "system.Qw"), parse_matrix(s.at("Qv"), "system.Qv"),
                parse_matrix(s.at("Sigma0"), "system.Sigma0"));
  out = {{"A", matrix_json(sys.A())}, {"C", matrix_json(sys.C())},
         {"Qw", matrix_json(sys.Qw())}, {"Qv", matrix_json(sys.Qv())},
         {"Sigma0", matrix_json(sys.Sigma0())}};
  return sys;
}

FblLink parse_link(const Json& doc, Json& out) {
  FblLink link;
  if (doc.contains("link")) {
    const Json& l = doc.at("link");
    check_keys(l, {"n1", "b", "snr_db", "m_max"}, "link");
    link.n1 = get_int(l, "n1", link.n1, "link");
    link.b = get_int(l, "b", link.b, "link");
    link.snr_db = get_number(l, "snr_db", link.snr_db, "link");
    link.m_max = get_int(l, "m_max", link.m_max, "link");
  }
  link.validate();
  out = {{"n1", link.n1}, {"b", link.b}, {"snr_db", link.snr_db}, {"m_max", link.m_max}};
  return link;
}

// `cost` may be partially overridden per series; `base` holds the inherited
// document section.
CostModel parse_cost(const Json& section, const LtiSystem& sys, const Matrix& pbar0,
                     Json& out) {
  check_keys(section, {"mode", "rho_sq", "base_cost", "q_limit"}, "cost");
  const std::string mode = get_string(section, "mode", "scaled", "cost");
  if (mode == "exact") {
    const int q_limit = get_int(section, "q_limit", 64, "cost");
    if (q_limit < 2) throw ConfigError("must be at least 2", "cost.q_limit");
    out = {{"mode", "exact"}, {"q_limit", q_limit}};
    return CostModel::exact(sys, pbar0, q_limit);
  }
  if (mode != "scaled") throw ConfigError("must be \"scaled\" or \"exact\"", "cost.mode");
  double rho_sq = kDefaultRhoSq;
  if (section.contains("rho_sq")) {
    const Json& v = section.at("rho_sq");
    if (v.is_string() && v.get<std::string>() == "system") {
      rho_sq = spectral_radius_sq(sys.A());
    } else if (v.is_number()) {
      rho_sq = v.get<double>();
    } else {
      throw ConfigError("must be a number or \"system\"", "cost.rho_sq");
    }
  }
  double base = pbar0.trace();
  if (section.contains("base_cost")) {
    const Json& v = section.at("base_cost");
    if (v.is_number()) {
      base = v.get<double>();
    } else if (!(v.is_string() && v.get<std::string>() == "steady_state")) {
      throw ConfigError("must be a number or \"steady_state\"", "cost.base_cost");
    }
  }
  if (!(rho_sq > 0.0)) throw ConfigError("must be positive", "cost.rho_sq");
  if (!(base > 0.0)) throw ConfigError("must be positive", "cost.base_cost");
  out = {{"mode", "scaled"}, {"rho_sq", rho_sq}, {"base_cost", base}};
  return CostModel::scaled(rho_sq, base);
}

std::string dn_mode_name(DnMode m) { return m == DnMode::PairEnum ? "pairs" : "augmented"; }

std::string objective_name(Objective o) { return o == Objective::MseCost ? "mse" : "delay"; }

SchemeConfig parse_scheme(const Json& s, const FblLink& link, const CostModel& cost,
                          Json& out) {
  check_keys(s, {"kind", "tau", "alpha", "levels", "dn_mode", "pair", "base_kind",
                 "base_tau", "base_alpha", "q_max", "objective"},
             "scheme");
  SchemeConfig cfg;
  cfg.link = link;
  cfg.cost = cost;
  cfg.kind = parse_scheme_kind(get_string(s, "kind", "std_ir", "scheme"));
  cfg.tau = get_number(s, "tau", 1.0, "scheme");
  cfg.alpha = get_number(s, "alpha", 1.0, "scheme");
  cfg.levels = get_list(s, "levels", "scheme.levels");
  cfg.q_max = get_int(s, "q_max", 10, "scheme");
  const std::string objective = get_string(s, "objective", "mse", "scheme");
  if (objective == "mse") {
    cfg.objective = Objective::MseCost;
  } else if (objective == "delay") {
    cfg.objective = Objective::DelayCost;
  } else {
    throw ConfigError("must be \"mse\" or \"delay\"", "scheme.objective");
  }
  const std::string dn = get_string(s, "dn_mode", "augmented", "scheme");
  if (dn == "augmented") {
    cfg.dn_mode = DnMode::Augmented;
  } else if (dn == "pairs") {
    cfg.dn_mode = DnMode::PairEnum;
  } else {
    throw ConfigError("must be \"augmented\" or \"pairs\"", "scheme.dn_mode");
  }
  if (s.contains("pair")) {
    const auto pair = get_list(s, "pair", "scheme.pair");
    if (pair.size() != 2) throw ConfigError("must hold two fractions", "scheme.pair");
    cfg.pair_prev_alpha = pair[0];
    cfg.pair_alpha = pair[1];
  }
  if (s.contains("base_kind")) {
    cfg.fixed_base = parse_scheme_kind(get_string(s, "base_kind", "", "scheme"));
  }
  cfg.fixed_base_tau = get_number(s, "base_tau", 1.0, "scheme");
  cfg.fixed_base_alpha = get_number(s, "base_alpha", 1.0, "scheme");

  // Single-parameter schemes at their full-length / full-power setting are
  // the standard schemes; resolve them so that both spellings hash alike.
  if (cfg.kind == SchemeKind::Ir && cfg.tau == 1.0) cfg.kind = SchemeKind::StdIr;
  if (cfg.kind == SchemeKind::SnCc && cfg.alpha == 1.0) cfg.kind = SchemeKind::StdCc;
  if (cfg.fixed_base == SchemeKind::Ir && cfg.fixed_base_tau == 1.0) {
    cfg.fixed_base = SchemeKind::StdIr;
  }
  if (cfg.fixed_base == SchemeKind::SnCc && cfg.fixed_base_alpha == 1.0) {
    cfg.fixed_base = SchemeKind::StdCc;
  }
  cfg.validate();

  out = {{"kind", to_string(cfg.kind)}, {"q_max", cfg.q_max},
         {"objective", objective_name(cfg.objective)}};
  switch (cfg.kind) {
    case SchemeKind::Ir: out["tau"] = cfg.tau; break;
    case SchemeKind::SnCc: out["alpha"] = cfg.alpha; break;
    case SchemeKind::DnCc:
      out["levels"] = cfg.levels;
      out["dn_mode"] = dn_mode_name(cfg.dn_mode);
      if (cfg.dn_mode == DnMode::PairEnum) {
        out["pair"] = {cfg.pair_prev_alpha, cfg.pair_alpha};
      }
      break;
    case SchemeKind::FixedHarq:
      out["base_kind"] = to_string(cfg.fixed_base);
      if (cfg.fixed_base == SchemeKind::Ir) out["base_tau"] = cfg.fixed_base_tau;
      if (cfg.fixed_base == SchemeKind::SnCc) out["base_alpha"] = cfg.fixed_base_alpha;
      break;
    default:
      break;
  }
  return cfg;
}

EvalConfig parse_eval(const Json& doc, const Overrides& ov, Json& out) {
  EvalConfig e;
  if (doc.contains("eval")) {
    const Json& s = doc.at("eval");
    check_keys(s, {"slots", "trials", "seed", "histogram_bins", "max_slot_events"}, "eval");
    e.slots = get_int(s, "slots", e.slots, "eval");
    e.trials = get_int(s, "trials", e.trials, "eval");
    e.histogram_bins = get_int(s, "histogram_bins", e.histogram_bins, "eval");
    if (s.contains("seed")) {
      const Json& v = s.at("seed");
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.get<long long>() < 0)) {
        throw ConfigError("must be a nonnegative integer", "eval.seed");
      }
      e.seed = v.get<std::uint64_t>();
    }
    if (s.contains("max_slot_events")) {
      const Json& v = s.at("max_slot_events");
      if (!v.is_number_unsigned()) {
        throw ConfigError("must be a positive integer", "eval.max_slot_events");
      }
      e.max_slot_events = v.get<std::uint64_t>();
    }
  }
  if (ov.seed) e.seed = *ov.seed;
  if (ov.trials) e.trials = *ov.trials;
  if (ov.slots) e.slots = *ov.slots;
  e.validate();
  out = {{"slots", e.slots}, {"trials", e.trials}, {"seed", e.seed},
         {"histogram_bins", e.histogram_bins}, {"max_slot_events", e.max_slot_events}};
  return e;
}

void check_policy_name(const std::string& p, const std::string& field) {
  static const std::set<std::string> names{"optimal", "delay", "fixed", "fresh"};
  if (!names.count(p)) {
    throw ConfigError("must be one of optimal, delay, fixed, fresh", field);
  }
}

}  // namespace

RunConfig resolve_config(const Json& doc, const Overrides& ov) {
  check_keys(doc, {"system", "link", "cost", "scheme", "eval", "policy", "pareto",
                   "figure", "series", "description", "output_dir"},
             "");
  RunConfig rc;
  Json& r = rc.resolved;
  r = Json::object();

  rc.system = parse_system(doc, r["system"]);
  const SteadyStateCov ss = kalman_steady_state(rc.system);
  const FblLink link = parse_link(doc, r["link"]);
  const Json cost_doc = doc.contains("cost") ? doc.at("cost") : Json::object();
  const CostModel cost = parse_cost(cost_doc, rc.system, ss.Pbar0, r["cost"]);
  rc.scheme = parse_scheme(doc.contains("scheme") ? doc.at("scheme") : Json::object(),
                           link, cost, r["scheme"]);
  rc.eval = parse_eval(doc, ov, r["eval"]);

  rc.output_dir = get_string(doc, "output_dir", "", "");
  rc.policy = get_string(doc, "policy", "optimal", "");
  check_policy_name(rc.policy, "policy");
  r["policy"] = rc.policy;

  if (doc.contains("pareto")) {
    const Json& p = doc.at("pareto");
    check_keys(p, {"grid", "values", "mode", "global_theta"}, "pareto");
    ParetoGrid g;
    g.grid = get_string(p, "grid", "tau", "pareto");
    if (g.grid != "tau" && g.grid != "alpha") {
      throw ConfigError("must be \"tau\" or \"alpha\"", "pareto.grid");
    }
    g.values = get_list(p, "values", "pareto.values");
    if (g.values.empty()) throw ConfigError("must be nonempty", "pareto.values");
    for (double v : g.values) {
      if (!(v > 0.0 && v <= 1.0)) throw ConfigError("entries must lie in (0, 1]", "pareto.values");
    }
    const std::string mode = get_string(p, "mode", "static", "pareto");
    if (mode == "static") {
      g.mode = CcMode::Static;
    } else if (mode == "pairs") {
      g.mode = CcMode::DynamicPairs;
    } else if (mode == "augmented") {
      g.mode = CcMode::DynamicAugmented;
    } else {
      throw ConfigError("must be static, pairs or augmented", "pareto.mode");
    }
    if (p.contains("global_theta") && !p.at("global_theta").is_null()) {
      g.global_theta = get_number(p, "global_theta", 0.0, "pareto");
    }
    Json out = {{"grid", g.grid}, {"values", g.values}, {"mode", mode}};
    if (g.global_theta) out["global_theta"] = *g.global_theta;
    r["pareto"] = out;
    rc.pareto = g;
  }

  if (doc.contains("figure")) {
    rc.figure = get_string(doc, "figure", "", "");
    r["figure"] = rc.figure;
  }
  if (doc.contains("series")) {
    const Json& list = doc.at("series");
    if (!list.is_array() || list.empty()) throw ConfigError("must be a nonempty list", "series");
    r["series"] = Json::array();
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Json& s = list[i];
      const std::string field = "series[" + std::to_string(i) + "]";
      check_keys(s, {"name", "scheme", "policy", "cost"}, field);
      SeriesSpec spec;
      spec.name = get_string(s, "name", "", field);
      if (spec.name.empty() || spec.name.find_first_of(",/ ") != std::string::npos) {
        throw ConfigError("needs a name without commas, slashes or spaces", field + ".name");
      }
      if (!names.insert(spec.name).second) throw ConfigError("duplicate name", field + ".name");
      Json series_cost_doc = cost_doc;
      if (s.contains("cost")) {
        if (!s.at("cost").is_object()) throw ConfigError("must be an object", field + ".cost");
        for (const auto& [k, v] : s.at("cost").items()) series_cost_doc[k] = v;
      }
      Json out = {{"name", spec.name}};
      const CostModel scost = parse_cost(series_cost_doc, rc.system, ss.Pbar0, out["cost"]);
      spec.scheme = parse_scheme(s.contains("scheme") ? s.at("scheme") : Json::object(),
                                 link, scost, out["scheme"]);
      spec.policy = get_string(s, "policy", "optimal", field);
      check_policy_name(spec.policy, field + ".policy");
      out["policy"] = spec.policy;
      r["series"].push_back(out);
      rc.series.push_back(std::move(spec));
    }
  }
  return rc;
}

RunConfig load_config(const std::string& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'", "config");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what(), "config");
  }
  return resolve_config(doc, ov);
}

std::uint64_t config_hash(const Json& resolved) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : resolved.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace harq::cli
