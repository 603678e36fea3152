#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qmetro/fisher.hpp"
#include "qmetro/linalg.hpp"

namespace qmetro {

inline constexpr double kLambdaTol = 1e-9;

// W F_Im W^T with W F_Q W^T = I; its spectrum matches F_Q^{-1/2} F_Im F_Q^{-1/2}.
inline RMatrix normalized_im(const RMatrix& F_Q, const RMatrix& F_Im) {
  const RMatrix W = whitening(F_Q);
  const RMatrix N = W * F_Im * W.transpose();
  return 0.5 * (N - N.transpose());
}

// |lambda_q| of F_Q^{-1/2} F_Im F_Q^{-1/2} with multiplicity, descending. Magnitudes within kLambdaTol of 1
// snap to 1, matching the degenerate-block threshold of the measurement construction.
inline std::vector<double> lambda_magnitudes(const RMatrix& F_Q, const RMatrix& F_Im) {
  const RMatrix N = normalized_im(F_Q, F_Im);
  const Eigen::Index n = N.rows();
  std::vector<double> out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(cplx(0.0, 1.0) * N.cast<cplx>());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = std::abs(es.eigenvalues()(i));
    if (m > 1.0 + kLambdaTol)
      throw NumericalError("eigenvalue magnitude " + std::to_string(m) + " of the normalized F_Im exceeds 1");
    out.push_back(m > 1.0 - kLambdaTol ? 1.0 : m);
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline double tight_bound_from_lambdas(const std::vector<double>& lambdas) {
  double s = 0.0;
  for (double l : lambdas) s += 1.0 - std::sqrt(std::max(0.0, 1.0 - l * l));
  return static_cast<double>(lambdas.size()) - 0.5 * s;
}

// Largest attainable Tr(F_Q^{-1} F_C) over all measurements on a pure state.
inline double tight_bound(const RMatrix& F_Q, const RMatrix& F_Im) {
  return tight_bound_from_lambdas(lambda_magnitudes(F_Q, F_Im));
}

inline double gill_massar_bound(std::size_t d) {
  if (d < 2) throw InputError("gill_massar_bound: dimension must be at least 2");
  return static_cast<double>(d) - 1.0;
}

// Lower bound on Tr(F_Q F_C^{-1}).
inline double matsumoto_lower(const std::vector<double>& lambdas) {
  double s = 0.0;
  for (double l : lambdas) {
    if (l > 1.0 + kLambdaTol) throw InputError("matsumoto_lower: |lambda| exceeds 1");
    s += 2.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - l * l)));
  }
  return s;
}

inline double frobenius_bound(const RMatrix& F_Q, const RMatrix& F_Im, double coefficient) {
  if (std::abs(coefficient - 0.2) > 1e-15 && std::abs(coefficient - 0.25) > 1e-15)
    throw InputError("frobenius_bound: coefficient must be 1/5 or 1/4");
  const RMatrix N = normalized_im(F_Q, F_Im);
  return static_cast<double>(N.rows()) - coefficient * N.squaredNorm();
}

// Tr(F_Q^{-1} F_C).
inline double achieved_value(const RMatrix& F_Q, const RMatrix& F_C) {
  const RMatrix W = whitening(F_Q);
  return (W * F_C * W.transpose()).trace();
}

// Tr(F_Q F_C^{-1}); empty when F_C is singular.
inline std::optional<double> inverse_metric(const RMatrix& F_Q, const RMatrix& F_C) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (F_C + F_C.transpose()));
  if (es.eigenvalues()(0) <= 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff())) return std::nullopt;
  const RVector inv = es.eigenvalues().cwiseInverse();
  return (F_Q * es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()).trace();
}

struct TradeoffReport {
  std::size_t n = 0;
  RMatrix F_Q;
  RMatrix F_Im;
  std::vector<double> lambdas;
  double tight_bound = 0.0;
  std::optional<double> gill_massar;
  double matsumoto_lower = 0.0;
  double frobenius_quarter = 0.0;
  double frobenius_fifth = 0.0;
  std::optional<RMatrix> F_C;
  std::optional<double> achieved;
  std::optional<double> achieved_inverse;
  std::optional<double> gap;
  bool mixed = false;
  std::string note;
};

inline TradeoffReport report(const FisherBundle& bundle, const std::optional<RMatrix>& F_C = std::nullopt,
                             std::optional<std::size_t> system_dim = std::nullopt) {
  TradeoffReport r;
  r.n = bundle.n();
  r.F_Q = bundle.F_Q;
  r.F_Im = bundle.F_Im;
  r.lambdas = lambda_magnitudes(bundle.F_Q, bundle.F_Im);
  r.tight_bound = tight_bound_from_lambdas(r.lambdas);
  if (system_dim && *system_dim >= 2) r.gill_massar = gill_massar_bound(*system_dim);
  r.matsumoto_lower = matsumoto_lower(r.lambdas);
  r.frobenius_quarter = frobenius_bound(bundle.F_Q, bundle.F_Im, 0.25);
  r.frobenius_fifth = frobenius_bound(bundle.F_Q, bundle.F_Im, 0.2);
  r.mixed = bundle.mixed;
  if (bundle.mixed) r.note = "upper bound, not guaranteed tight";
  if (F_C) {
    r.F_C = *F_C;
    r.achieved = achieved_value(bundle.F_Q, *F_C);
    r.achieved_inverse = inverse_metric(bundle.F_Q, *F_C);
    r.gap = r.tight_bound - *r.achieved;
  }
  return r;
}

}  // namespace qmetro
