#include "harq/fbl_harq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "harq/errors.hpp"

namespace harq {
namespace {

constexpr double kLog2e = std::numbers::log2e;
constexpr double kQClamp = 40.0;

// Shared tail of both normal approximations: numerator / sqrt(variance).
double normal_approx(double numerator, double variance) {
  if (!(variance > 0.0)) return numerator > 0.0 ? 0.0 : 1.0;
  const double p = q_function(numerator / std::sqrt(variance));
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double FblLink::power() const noexcept { return std::pow(10.0, snr_db / 10.0); }

void FblLink::validate() const {
  if (n1 < 1) throw ConfigError("must be at least 1", "link.n1");
  if (b < 1) throw ConfigError("must be at least 1", "link.b");
  if (m_max < 1) throw ConfigError("must be at least 1", "link.m_max");
  if (!std::isfinite(snr_db)) throw ConfigError("must be finite", "link.snr_db");
}

double q_function(double x) {
  if (std::isnan(x)) throw DomainError("Q-function argument is NaN");
  if (x >= kQClamp) return 0.0;
  if (x <= -kQClamp) return 1.0;
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double dispersion(double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("SNR must be nonnegative");
  const double inv = 1.0 / (1.0 + gamma);
  return (1.0 - inv * inv) * kLog2e * kLog2e;
}

double eps_cc(const FblLink& link, std::span<const double> gammas) {
  if (gammas.empty() || static_cast<int>(gammas.size()) > link.m_max) {
    throw DomainError("number of combined transmissions must be in [1, m_max]");
  }
  double total = 0.0;
  for (double g : gammas) {
    if (!(g >= 0.0)) throw DomainError("SNR must be nonnegative");
    total += g;
  }
  const double n = link.n1;
  const double numerator =
      n * std::log2(1.0 + total) - link.b + std::log2(n);
  return normal_approx(numerator, n * dispersion(total));
}

double eps_ir(const FblLink& link, std::span<const double> gammas,
              std::span<const int> lengths) {
  if (gammas.empty() || gammas.size() != lengths.size()) {
    throw DomainError("gammas and lengths must be nonempty and of equal size");
  }
  if (lengths[0] != link.n1) {
    throw DomainError("first transmission must use n1 symbols");
  }
  double info = 0.0;
  double variance = 0.0;
  double symbols = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double g = gammas[i];
    if (!(g >= 0.0)) throw DomainError("SNR must be nonnegative");
    if (lengths[i] < 0 || (i > 0 && lengths[i] == 0 && g > 0.0)) {
      throw DomainError("retransmission length must be positive");
    }
    const double n = lengths[i];
    info += n * std::log2(1.0 + g);
    variance += n * dispersion(g);
    symbols += n;
  }
  const double numerator = info - link.b + std::log2(symbols);
  return normal_approx(numerator, variance);
}

NomaSinrs noma_sinrs(double P, std::optional<NomaSplit> split_prev,
                     NomaSplit split_cur, SicContext prev_case) {
  if (!(P > 0.0)) throw DomainError("power must be positive");
  const double a = split_cur.alpha;
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("alpha must lie in (0, 1]");

  NomaSinrs out;
  switch (prev_case) {
    case SicContext::Solo:
      out.gamma_old_first = P;
      break;
    case SicContext::SicOk:
    case SicContext::SicFail: {
      if (!split_prev) throw DomainError("previous split required");
      const double ap = split_prev->alpha;
      if (!(ap >= 0.0 && ap <= 1.0)) {
        throw DomainError("previous alpha must lie in [0, 1]");
      }
      if (prev_case == SicContext::SicOk) {
        out.gamma_old_first = (1.0 - ap) * P;
      } else {
        if (ap == 0.0) throw DomainError("SIC failure with zero retransmit power");
        out.gamma_old_first = ((1.0 - ap) / ap) * P;
      }
      break;
    }
  }
  out.gamma_retx = a * P / (1.0 + (1.0 - a) * P);
  out.gamma_new = (1.0 - a) * P;
  return out;
}

}  // namespace harq
