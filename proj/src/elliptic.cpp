#include "stefanlab/elliptic.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace stefanlab {

void EllipticOperatorSpec::validate() const {
  if (!(K >= 1.0)) throw std::invalid_argument("operator: K must be >= 1");
  if (kind == OperatorKind::BellmanMin) {
    if (bellman_matrices.empty())
      throw std::invalid_argument("operator: bellman_min needs a matrix list");
    for (const Mat& A : bellman_matrices) {
      if (A.rows() != A.cols() || (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("operator: bellman matrix not symmetric");
      Eigen::SelfAdjointEigenSolver<Mat> es(A);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (lo < 1.0 / K - 1e-9 || hi > K + 1e-9)
        throw std::invalid_argument("operator: bellman eigenvalues outside [1/K, K]");
    }
  } else if (!bellman_matrices.empty()) {
    throw std::invalid_argument("operator: matrix list only valid for bellman_min");
  }
}

std::string EllipticOperatorSpec::name() const {
  switch (kind) {
    case OperatorKind::Trace: return "trace";
    case OperatorKind::PucciPlus: return "pucci_plus";
    case OperatorKind::PucciMinus: return "pucci_minus";
    case OperatorKind::BellmanMin: return "bellman_min";
  }
  return "?";
}

namespace {

// Eigenvalues of a symmetric matrix given as row-major buffer, n <= 3.
// Closed forms for n = 1, 2; direct solver for n = 3.
inline void sym_eigenvalues(const double* M, int n, double* ev) {
  if (n == 1) {
    ev[0] = M[0];
  } else if (n == 2) {
    const double a = M[0], b = M[1], d = M[3];
    const double m = 0.5 * (a + d);
    const double r = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b * b));
    ev[0] = m - r;
    ev[1] = m + r;
  } else {
    Eigen::Matrix3d A;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = M[3 * i + j];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(A, Eigen::EigenvaluesOnly);
    for (int i = 0; i < 3; ++i) ev[i] = es.eigenvalues()[i];
  }
}

inline double pucci_from_eigenvalues(PucciSign sign, const double* ev, int n,
                                     double K) {
  const double cpos = sign == PucciSign::Plus ? K : 1.0 / K;
  const double cneg = sign == PucciSign::Plus ? 1.0 / K : K;
  double out = 0.0;
  for (int i = 0; i < n; ++i) out += ev[i] > 0.0 ? cpos * ev[i] : cneg * ev[i];
  return out;
}

}  // namespace

double pucci_eval(PucciSign sign, const Mat& M, double K) {
  if (M.rows() != M.cols()) throw std::invalid_argument("pucci_eval: square matrix required");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + M.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("pucci_eval: symmetric matrix required");
  if (!(K >= 1.0)) throw std::invalid_argument("pucci_eval: K must be >= 1");
  const int n = static_cast<int>(M.rows());
  if (n <= 3) {
    double buf[9], ev[3];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) buf[n * i + j] = 0.5 * (M(i, j) + M(j, i));
    sym_eigenvalues(buf, n, ev);
    return pucci_from_eigenvalues(sign, ev, n, K);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()),
                                        Eigen::EigenvaluesOnly);
  double out = 0.0;
  const double cpos = sign == PucciSign::Plus ? K : 1.0 / K;
  const double cneg = sign == PucciSign::Plus ? 1.0 / K : K;
  for (int i = 0; i < n; ++i) {
    const double ev = es.eigenvalues()[i];
    out += ev > 0.0 ? cpos * ev : cneg * ev;
  }
  return out;
}

double operator_eval(const EllipticOperatorSpec& spec, const Mat& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("operator_eval: square matrix required");
  switch (spec.kind) {
    case OperatorKind::Trace:
      return M.trace();
    case OperatorKind::PucciPlus:
      return pucci_eval(PucciSign::Plus, M, spec.K);
    case OperatorKind::PucciMinus:
      return pucci_eval(PucciSign::Minus, M, spec.K);
    case OperatorKind::BellmanMin: {
      if (spec.bellman_matrices.empty())
        throw std::invalid_argument("operator_eval: missing bellman matrix list");
      double best = std::numeric_limits<double>::infinity();
      for (const Mat& A : spec.bellman_matrices)
        best = std::min(best, (A * M).trace());
      return best;
    }
  }
  throw std::logic_error("operator_eval: unknown kind");
}

double operator_eval_raw(const EllipticOperatorSpec& spec, const double* M, int n) {
  switch (spec.kind) {
    case OperatorKind::Trace: {
      double t = 0.0;
      for (int i = 0; i < n; ++i) t += M[n * i + i];
      return t;
    }
    case OperatorKind::PucciPlus:
    case OperatorKind::PucciMinus: {
      double ev[3];
      sym_eigenvalues(M, n, ev);
      const PucciSign s =
          spec.kind == OperatorKind::PucciPlus ? PucciSign::Plus : PucciSign::Minus;
      return pucci_from_eigenvalues(s, ev, n, spec.K);
    }
    case OperatorKind::BellmanMin: {
      double best = std::numeric_limits<double>::infinity();
      for (const Mat& A : spec.bellman_matrices) {
        double t = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) t += A(i, j) * M[n * j + i];
        best = std::min(best, t);
      }
      return best;
    }
  }
  throw std::logic_error("operator_eval_raw: unknown kind");
}

Mat random_symmetric(int n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Mat M(n, n);
  for (int i = 0; i < n; ++i) {
    M(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      const double v = g(rng);
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  return M;
}

Mat random_psd(int n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Mat B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  return B * B.transpose() / n;
}

Mat random_orthogonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(B);
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (R(i, i) < 0) Q.col(i) *= -1.0;
  return Q;
}

EllipticityMargin ellipticity_margin(const EllipticOperatorSpec& spec, int n,
                                     int samples, std::uint64_t seed) {
  spec.validate();
  if (samples < 1) throw std::invalid_argument("ellipticity_margin: samples >= 1");
  EllipticityMargin out;
  out.lower = std::numeric_limits<double>::infinity();
  out.upper = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const Mat M = random_symmetric(n, seed + 2 * k);
    const Mat N = random_psd(n, seed + 2 * k + 1);
    Eigen::SelfAdjointEigenSolver<Mat> es(N, Eigen::EigenvaluesOnly);
    const double norm = es.eigenvalues().maxCoeff();
    if (norm < 1e-12) continue;
    const double inc = (operator_eval(spec, M + N) - operator_eval(spec, M)) / norm;
    out.lower = std::min(out.lower, inc);
    out.upper = std::max(out.upper, inc);
  }
  return out;
}

}  // namespace stefanlab
