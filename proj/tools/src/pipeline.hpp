#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "harq/pareto.hpp"
#include "harq/policy_eval.hpp"
#include "harq/scheme_models.hpp"
#include "harq_cli/config.hpp"

namespace harq::cli {

std::string fmt(double v);

/// Writes files under one directory, each headed by its schema and the
/// configuration hash.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, std::string hash);
  void write(const std::string& name, const std::string& schema, const std::string& body);
  /// Writes JSON verbatim (the schema lives inside the document).
  void write_json(const std::string& name, const Json& doc);
  [[nodiscard]] const std::vector<std::filesystem::path>& written() const { return written_; }
  [[nodiscard]] const std::string& hash() const { return hash_; }
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::filesystem::path> written_;
};

/// Policy named by `which` (optimal, delay, fixed, fresh) on `model`.
/// `gain` receives the average cost under the model's own objective.
Policy choose_policy(const SchemeModel& model, const std::string& which, double& gain);

struct SeriesResult {
  SeriesSpec spec;
  SchemeModel model;   ///< built under the MSE objective
  Policy policy;
  double mu_analytic = 0.0;
  EvalReport report;
};

SeriesResult run_series(const SeriesSpec& spec, const EvalConfig& eval, unsigned threads);

std::string policy_csv(const SchemeModel& model, const Policy& policy, double gain,
                       bool stable);
Policy read_policy_csv(std::istream& is, const SchemeModel& model);

Json run_meta(const std::string& command, const RunConfig& rc,
                     const std::string& hash);

std::string to_string(const EvalReport& r, void (*writer)(std::ostream&, const EvalReport&));

}  // namespace harq::cli
