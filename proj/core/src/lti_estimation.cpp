#include "harq/lti_estimation.hpp"

#include <cmath>
#include <string>

#include "harq/errors.hpp"

namespace harq {
namespace {

constexpr double kSymTol = 1e-12;
constexpr double kPsdTol = 1e-12;

void require_square(const Matrix& M, Eigen::Index n, const std::string& name) {
  if (M.rows() != n || M.cols() != n) {
    throw ConfigError("expected " + std::to_string(n) + "x" +
                          std::to_string(n) + " matrix, got " +
                          std::to_string(M.rows()) + "x" +
                          std::to_string(M.cols()),
                      name);
  }
}

void require_psd(const Matrix& M, const std::string& name) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale) {
    throw ConfigError("matrix is not symmetric", name);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.eigenvalues().minCoeff() < -kPsdTol * scale) {
    throw ConfigError("matrix is not positive semidefinite", name);
  }
}

Eigen::Index numeric_rank(const Matrix& M) {
  Eigen::FullPivLU<Matrix> lu(M);
  lu.setThreshold(1e-10);
  return lu.rank();
}

Matrix psd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  const Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

LtiSystem::LtiSystem(Matrix A, Matrix C, Matrix Qw, Matrix Qv, Matrix Sigma0)
    : A_(std::move(A)),
      C_(std::move(C)),
      Qw_(std::move(Qw)),
      Qv_(std::move(Qv)),
      Sigma0_(std::move(Sigma0)) {
  const Eigen::Index r = A_.rows();
  if (r == 0 || A_.cols() != r) {
    throw ConfigError("state transition matrix must be square and nonempty",
                      "system.A");
  }
  if (C_.cols() != r || C_.rows() == 0) {
    throw ConfigError("measurement matrix must have " + std::to_string(r) +
                          " columns",
                      "system.C");
  }
  require_square(Qw_, r, "system.Qw");
  require_square(Qv_, C_.rows(), "system.Qv");
  require_square(Sigma0_, r, "system.Sigma0");
  if (!A_.allFinite() || !C_.allFinite()) {
    throw ConfigError("non-finite entries", "system");
  }
  require_psd(Qw_, "system.Qw");
  require_psd(Qv_, "system.Qv");
  require_psd(Sigma0_, "system.Sigma0");

  // Observability: [C; CA; ...; CA^{r-1}] has full column rank.
  Matrix obs(C_.rows() * r, r);
  Matrix CAk = C_;
  for (Eigen::Index k = 0; k < r; ++k) {
    obs.middleRows(k * C_.rows(), C_.rows()) = CAk;
    CAk = CAk * A_;
  }
  if (numeric_rank(obs) < r) {
    throw ConfigError("(A, C) is not observable", "system.C");
  }

  // Reachability of (A, sqrt(Qw)).
  const Matrix B = psd_sqrt(Qw_);
  Matrix ctrb(r, r * r);
  Matrix AkB = B;
  for (Eigen::Index k = 0; k < r; ++k) {
    ctrb.middleCols(k * r, r) = AkB;
    AkB = A_ * AkB;
  }
  if (numeric_rank(ctrb) < r) {
    throw ConfigError("(A, sqrt(Qw)) is not reachable", "system.Qw");
  }
}

LtiSystem LtiSystem::reference() {
  Matrix A(2, 2);
  A << 2.4, 0.2, 0.2, 0.8;
  Matrix C(1, 2);
  C << 1.0, 1.0;
  return {A, C, Matrix::Identity(2, 2), Matrix::Identity(1, 1),
          Matrix::Identity(2, 2)};
}

Matrix kalman_cycle(const LtiSystem& sys, const Matrix& P) {
  const Matrix& A = sys.A();
  const Matrix& C = sys.C();
  const Matrix prior = A * P * A.transpose() + sys.Qw();
  const Matrix S = C * prior * C.transpose() + sys.Qv();
  const Matrix K = prior * C.transpose() * S.ldlt().solve(Matrix::Identity(S.rows(), S.cols()));
  const Matrix I = Matrix::Identity(A.rows(), A.cols());
  const Matrix post = (I - K * C) * prior;
  return 0.5 * (post + post.transpose());
}

SteadyStateCov kalman_steady_state(const LtiSystem& sys, double tol,
                                   int max_iter) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  Matrix P = sys.Sigma0();
  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix next = kalman_cycle(sys, P);
    residual = (next - P).norm();
    P = std::move(next);
    if (!std::isfinite(residual)) break;
    if (residual <= tol) return {P, it, residual};
  }
  throw NonConvergence("Riccati recursion did not converge", residual);
}

double spectral_radius_sq(const Matrix& A) {
  if (A.rows() != A.cols()) throw DomainError("matrix must be square");
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs2().maxCoeff();
}

Matrix age_propagate(const Matrix& X, const LtiSystem& sys, int q) {
  if (q < 0) throw DomainError("age must be nonnegative");
  Matrix out = X;
  for (int i = 0; i < q; ++i) {
    out = sys.A() * out * sys.A().transpose() + sys.Qw();
    out = 0.5 * (out + out.transpose());
  }
  return out;
}

CostModel CostModel::exact(const LtiSystem& sys, const Matrix& Pbar0,
                           int q_limit) {
  if (q_limit < 1) throw DomainError("q_limit must be at least 1");
  CostModel m;
  m.mode_ = CostMode::ExactMatrix;
  m.rho_sq_ = spectral_radius_sq(sys.A());
  m.base_cost_ = Pbar0.trace();
  m.traces_.reserve(static_cast<std::size_t>(q_limit) + 1);
  Matrix X = Pbar0;
  m.traces_.push_back(X.trace());
  for (int n = 1; n <= q_limit; ++n) {
    X = age_propagate(X, sys, 1);
    m.traces_.push_back(X.trace());
  }
  return m;
}

CostModel CostModel::scaled(double rho_sq, double base_cost) {
  if (!(rho_sq > 0.0)) throw ConfigError("rho_sq must be positive", "cost.rho_sq");
  if (!(base_cost > 0.0)) {
    throw ConfigError("base_cost must be positive", "cost.base_cost");
  }
  CostModel m;
  m.mode_ = CostMode::ScaledExponential;
  m.rho_sq_ = rho_sq;
  m.base_cost_ = base_cost;
  return m;
}

double CostModel::q_limit() const noexcept {
  if (mode_ == CostMode::ScaledExponential) return HUGE_VAL;
  return static_cast<double>(traces_.size() - 1);
}

namespace {

double interpolate(double lo, double hi, double frac) {
  if (frac == 0.0) return lo;
  return lo * std::pow(hi / lo, frac);
}

}  // namespace

double CostModel::operator()(double q) const {
  if (!(q >= 1.0)) throw DomainError("AoI must be at least 1");
  if (mode_ == CostMode::ScaledExponential) {
    return base_cost_ * std::pow(rho_sq_, q - 1.0);
  }
  if (q > q_limit()) throw DomainError("AoI beyond precomputed cost table");
  const double whole = std::floor(q);
  const auto n = static_cast<std::size_t>(whole);
  if (n + 1 >= traces_.size()) return traces_[n];
  return interpolate(traces_[n], traces_[n + 1], q - whole);
}

double mse_cost(const CostModel& model, const LtiSystem& sys,
                const Matrix& Pbar0, double q) {
  if (!(q >= 1.0)) throw DomainError("AoI must be at least 1");
  if (model.mode() == CostMode::ScaledExponential) {
    return model.base_cost() * std::pow(model.rho_sq(), q - 1.0);
  }
  const double whole = std::floor(q);
  const int n = static_cast<int>(whole);
  const Matrix lo = age_propagate(Pbar0, sys, n);
  if (q == whole) return lo.trace();
  const Matrix hi = age_propagate(lo, sys, 1);
  return interpolate(lo.trace(), hi.trace(), q - whole);
}

}  // namespace harq
