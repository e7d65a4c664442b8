#pragma once

#include <string>
#include <vector>

#include "pipeline.hpp"

namespace harq::cli {

struct Assertion {
  std::string name;
  std::string detail;
  bool pass = false;
};

inline const std::vector<std::string> kFigures{"fig3", "fig4", "fig5", "fig6",
                                               "fig7", "fig8", "fig9", "fig10"};

/// Qualitative claims of one figure, checked against its series results.
/// Throws ConfigError when the preset lacks a series the check needs.
std::vector<Assertion> figure_assertions(const std::string& figure,
                                         const std::vector<SeriesResult>& results,
                                         const EvalConfig& eval, unsigned threads);

}  // namespace harq::cli
