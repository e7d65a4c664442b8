#pragma once

#include <optional>
#include <span>

namespace harq {

/// Packet and link parameters for a single AWGN link with unit noise power.
struct FblLink {
  int n1 = 100;         ///< first-transmission codeword length (symbols)
  int b = 100;          ///< message bits
  double snr_db = 0.0;  ///< transmit SNR P in dB
  int m_max = 2;        ///< maximum transmissions per update

  /// Linear transmit power P = 10^(snr_db/10).
  [[nodiscard]] double power() const noexcept;
  /// Throws ConfigError naming the offending "link.*" field.
  void validate() const;
};

/// Power fraction assigned to the retransmitted old update.
struct NomaSplit {
  double alpha = 1.0;
};

/// Gaussian tail probability. Clamps to {0, 1} for |x| >= 40.
[[nodiscard]] double q_function(double x);

/// Channel dispersion V(g) = (1 - (1+g)^-2) log2(e)^2.
[[nodiscard]] double dispersion(double gamma);

/// Chase-combining error after MRC of `gammas` with codeword length n1.
/// Depends only on the sum of the SNRs. An all-zero SNR list returns 1 when
/// b >= log2(n1).
[[nodiscard]] double eps_cc(const FblLink& link, std::span<const double> gammas);

/// Incremental-redundancy error for transmissions of `lengths[i]` symbols at
/// SNR `gammas[i]`; lengths[0] must equal n1.
[[nodiscard]] double eps_ir(const FblLink& link, std::span<const double> gammas,
                            std::span<const int> lengths);

/// Which receiver event preceded the current retransmission of an update.
enum class SicContext {
  Solo,     ///< the update was sent alone at full power
  SicOk,    ///< it was superposed on a retransmission that decoded; SIC removed it
  SicFail,  ///< it was superposed on a retransmission that failed
};

struct NomaSinrs {
  double gamma_old_first = 0.0;  ///< SNR of the pending update's first copy
  double gamma_retx = 0.0;       ///< SINR of the retransmitted copy
  double gamma_new = 0.0;        ///< SNR of the superposed fresh update after SIC
};

/// SINRs of a non-orthogonal slot. The MRC-combined old update is always
/// decoded first, treating the fresh update as interference.
[[nodiscard]] NomaSinrs noma_sinrs(double P, std::optional<NomaSplit> split_prev,
                                   NomaSplit split_cur, SicContext prev_case);

}  // namespace harq
