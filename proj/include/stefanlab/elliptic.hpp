#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stefanlab/grid.hpp"

namespace stefanlab {

enum class PucciSign { Plus, Minus };

enum class OperatorKind { Trace, PucciPlus, PucciMinus, BellmanMin };

/// Uniformly K-elliptic operator acting on symmetric matrices, F(0) = 0.
/// Increments under positive perturbations satisfy
///   K^{-1}|N| <= F(M+N) - F(M) <= K|N|  for N >= 0,
/// with |N| the largest-eigenvalue norm.
struct EllipticOperatorSpec {
  OperatorKind kind = OperatorKind::Trace;
  double K = 1.0;
  std::vector<Mat> bellman_matrices;  // required iff kind == BellmanMin

  void validate() const;
  std::string name() const;
};

/// Extremal Pucci operators with ellipticity constants K^{-1} and K:
///   M^+_K(M) = K * sum(lambda_i > 0) + K^{-1} * sum(lambda_i < 0),
///   M^-_K(M) = K^{-1} * sum(lambda_i > 0) + K * sum(lambda_i < 0).
/// Rejects non-symmetric input.
double pucci_eval(PucciSign sign, const Mat& M, double K);

double operator_eval(const EllipticOperatorSpec& spec, const Mat& M);

/// Low-level evaluation on a row-major n*n symmetric matrix, n <= 3.
/// Used by solver inner loops.
double operator_eval_raw(const EllipticOperatorSpec& spec, const double* M, int n);

struct EllipticityMargin {
  double lower = 0.0;  // min over samples of (F(M+N)-F(M))/|N|
  double upper = 0.0;  // max over samples
  bool passes(double K, double tol = 1e-9) const {
    return lower >= 1.0 / K - tol && upper <= K + tol;
  }
};

/// Sampled ellipticity check over random pairs (M, N) with N >= 0 in
/// dimension n; |N| is the largest eigenvalue.
EllipticityMargin ellipticity_margin(const EllipticOperatorSpec& spec, int n,
                                     int samples, std::uint64_t seed);

/// Random n x n symmetric matrix with entries from the seeded generator
/// state; test and sampling helper.
Mat random_symmetric(int n, std::uint64_t seed, double scale = 1.0);
/// Random n x n positive semidefinite matrix.
Mat random_psd(int n, std::uint64_t seed, double scale = 1.0);
/// Random orthogonal matrix (QR sign-fixed).
Mat random_orthogonal(int n, std::uint64_t seed);

}  // namespace stefanlab
