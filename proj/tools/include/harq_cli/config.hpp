#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harq/lti_estimation.hpp"
#include "harq/pareto.hpp"
#include "harq/policy_eval.hpp"
#include "harq/scheme_models.hpp"

namespace harq::cli {

using Json = nlohmann::json;

struct ParetoGrid {
  std::string grid;             ///< "tau" or "alpha"
  std::vector<double> values;
  CcMode mode = CcMode::Static;
  std::optional<double> global_theta;
};

/// One named curve of a figure preset.
struct SeriesSpec {
  std::string name;
  SchemeConfig scheme;
  std::string policy = "optimal";  ///< optimal, delay, fixed or fresh
};

struct RunConfig {
  LtiSystem system = LtiSystem::reference();
  SchemeConfig scheme;
  EvalConfig eval;
  std::string policy = "optimal";
  std::optional<ParetoGrid> pareto;
  std::string figure;
  std::vector<SeriesSpec> series;
  /// Not part of the hash; the --out flag takes precedence.
  std::string output_dir;
  /// Canonical, fully resolved configuration; hashed into every output.
  Json resolved;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> slots;
};

/// Validates and resolves a configuration document. Throws ConfigError
/// naming the offending field.
[[nodiscard]] RunConfig resolve_config(const Json& doc, const Overrides& ov = {});
[[nodiscard]] RunConfig load_config(const std::string& path, const Overrides& ov = {});

/// FNV-1a over the compact dump of `resolved`.
[[nodiscard]] std::uint64_t config_hash(const Json& resolved);
[[nodiscard]] std::string hash_hex(std::uint64_t h);

}  // namespace harq::cli
