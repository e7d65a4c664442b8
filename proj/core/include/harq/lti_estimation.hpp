#pragma once

#include <Eigen/Dense>

#include <vector>

namespace harq {

using Matrix = Eigen::MatrixXd;

/// Discrete LTI process x' = A x + w, y = C x + v observed by the sensor's
/// local Kalman filter. Construction validates shapes, PSD-ness of the noise
/// covariances, observability of (A, C) and reachability of (A, sqrt(Qw)).
class LtiSystem {
 public:
  LtiSystem(Matrix A, Matrix C, Matrix Qw, Matrix Qv, Matrix Sigma0);

  [[nodiscard]] const Matrix& A() const noexcept { return A_; }
  [[nodiscard]] const Matrix& C() const noexcept { return C_; }
  [[nodiscard]] const Matrix& Qw() const noexcept { return Qw_; }
  [[nodiscard]] const Matrix& Qv() const noexcept { return Qv_; }
  [[nodiscard]] const Matrix& Sigma0() const noexcept { return Sigma0_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return A_.rows(); }

  /// The two-state process used throughout the numerical experiments.
  static LtiSystem reference();

 private:
  Matrix A_, C_, Qw_, Qv_, Sigma0_;
};

struct SteadyStateCov {
  Matrix Pbar0;
  int iterations = 0;
  double residual = 0.0;
};

/// One prediction + update step of the covariance recursion.
[[nodiscard]] Matrix kalman_cycle(const LtiSystem& sys, const Matrix& P);

/// Iterates the covariance recursion from Sigma0 until successive posteriors
/// differ by at most `tol` in Frobenius norm. Throws NonConvergence.
[[nodiscard]] SteadyStateCov kalman_steady_state(const LtiSystem& sys,
                                                 double tol = 1e-10,
                                                 int max_iter = 100000);

/// max |lambda_i(A)|^2
[[nodiscard]] double spectral_radius_sq(const Matrix& A);

/// f^q(X) with f(X) = A X A^T + Qw; f^0 is the identity.
[[nodiscard]] Matrix age_propagate(const Matrix& X, const LtiSystem& sys,
                                   int q);

enum class CostMode { ExactMatrix, ScaledExponential };

/// Maps (possibly fractional) AoI q >= 1 to the remote-estimation MSE.
///
/// ExactMatrix holds the integer-age traces Tr(f^n(Pbar0)) and interpolates
/// geometrically between neighbours. ScaledExponential is
/// base_cost * rho_sq^(q-1).
class CostModel {
 public:
  static CostModel exact(const LtiSystem& sys, const Matrix& Pbar0,
                         int q_limit = 64);
  static CostModel scaled(double rho_sq, double base_cost);

  [[nodiscard]] double operator()(double q) const;

  [[nodiscard]] CostMode mode() const noexcept { return mode_; }
  [[nodiscard]] double rho_sq() const noexcept { return rho_sq_; }
  [[nodiscard]] double base_cost() const noexcept { return base_cost_; }
  /// Largest q the model can evaluate (infinite for ScaledExponential).
  [[nodiscard]] double q_limit() const noexcept;

 private:
  CostMode mode_ = CostMode::ScaledExponential;
  double rho_sq_ = 1.0;
  double base_cost_ = 1.0;
  std::vector<double> traces_;  // traces_[n] = Tr(f^n(Pbar0)), ExactMatrix only
};

/// Direct evaluation without a precomputed table. Throws DomainError if q < 1.
[[nodiscard]] double mse_cost(const CostModel& model, const LtiSystem& sys,
                              const Matrix& Pbar0, double q);

}  // namespace harq
