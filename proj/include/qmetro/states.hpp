#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmetro/linalg.hpp"

namespace qmetro {

using Params = std::vector<double>;
using VectorFn = std::function<CVector(const Params&)>;
using MatrixFn = std::function<CMatrix(const Params&)>;

inline constexpr double kNormTol = 1e-10;
inline constexpr double kFdStep = 1e-6;

// Step used for central differences in parameter j.
inline double fd_step(double x, double h = kFdStep) { return std::abs(x) > 1.0 ? h * std::abs(x) : h; }

// A pure state |psi(x)> with per-parameter derivative providers. When dpsi is empty the
// derivatives come from phase-aligned central differences. A state given in a parameter-dependent
// frame (local_frame) has meaningful coordinates only at the stored point, so it requires
// analytic derivatives.
struct ParametrizedPureState {
  std::size_t dim = 0;
  Params params;
  VectorFn psi;
  std::vector<VectorFn> dpsi;
  bool local_frame = false;
  bool full_space = true;  // false when psi lives in a subspace of a larger Hilbert space
  std::string label;

  std::size_t n() const { return params.size(); }
  std::optional<std::size_t> space_dim() const {
    return full_space ? std::optional<std::size_t>(dim) : std::nullopt;
  }

  CVector state_at(const Params& x) const {
    CVector v = psi(x);
    if (static_cast<std::size_t>(v.size()) != dim) throw InputError(label + ": state has wrong dimension");
    if (std::abs(v.norm() - 1.0) > kNormTol) throw InputError(label + ": state is not normalized");
    return v;
  }

  CVector state() const { return state_at(params); }

  CVector derivative(std::size_t j) const;
  std::vector<CVector> derivatives() const {
    std::vector<CVector> out;
    for (std::size_t j = 0; j < n(); ++j) out.push_back(derivative(j));
    return out;
  }

  ParametrizedPureState at(Params x) const {
    if (local_frame) throw InputError(label + ": embedded state cannot be moved off its reference point");
    if (x.size() != params.size()) throw InputError(label + ": wrong parameter count");
    ParametrizedPureState s = *this;
    s.params = std::move(x);
    return s;
  }
};

// Central difference of psi in parameter j, with psi(x ± h e_j) rotated so that its overlap with
// psi(x) is real and positive.
inline CVector finite_difference_derivative(const ParametrizedPureState& s, std::size_t j, double h = kFdStep) {
  if (!(h > 0)) throw InputError("finite_difference_derivative: h must be positive");
  if (j >= s.n()) throw InputError("finite_difference_derivative: parameter index out of range");
  if (s.local_frame) throw InputError(s.label + ": finite differences are invalid in a local frame");
  const CVector center = s.state();
  const double step = fd_step(s.params[j], h);
  auto aligned = [&](double sign) {
    Params x = s.params;
    x[j] += sign * step;
    CVector v = s.state_at(x);
    const cplx overlap = center.dot(v);
    if (std::abs(overlap) > 0) v *= std::conj(overlap) / std::abs(overlap);
    return v;
  };
  return (aligned(1.0) - aligned(-1.0)) / (2.0 * step);
}

inline CVector ParametrizedPureState::derivative(std::size_t j) const {
  if (j >= n()) throw InputError(label + ": parameter index out of range");
  if (dpsi.empty()) return finite_difference_derivative(*this, j);
  if (dpsi.size() != n()) throw InputError(label + ": derivative provider count differs from parameter count");
  CVector d = dpsi[j](params);
  if (static_cast<std::size_t>(d.size()) != dim) throw InputError(label + ": derivative has wrong dimension");
  const CVector v = state();
  if (std::abs(v.dot(d).real()) > 1e-8 * std::max(1.0, d.norm()))
    throw InputError(label + ": derivative does not preserve the norm (Re<psi|dpsi> != 0)");
  return d;
}

// Finite orthonormal basis in which a continuous-variable state and its derivatives close
// exactly. Coordinates are given at a single parameter point.
struct SubspaceEmbedding {
  std::vector<std::string> basis_labels;
  CVector state;
  std::vector<CVector> derivatives;
};

inline ParametrizedPureState embedded_state(const SubspaceEmbedding& e, Params params, std::string label) {
  if (e.derivatives.size() != params.size()) throw InputError(label + ": one derivative per parameter required");
  ParametrizedPureState s;
  s.dim = static_cast<std::size_t>(e.state.size());
  s.params = std::move(params);
  s.local_frame = true;
  s.full_space = false;
  s.label = std::move(label);
  const CVector state = e.state;
  s.psi = [state](const Params&) { return state; };
  for (const auto& d : e.derivatives) s.dpsi.push_back([d](const Params&) { return d; });
  return s;
}

// (e^{i alpha} sin theta, cos theta).
inline ParametrizedPureState qubit_fixture(double alpha, double theta) {
  ParametrizedPureState s;
  s.dim = 2;
  s.params = {alpha, theta};
  s.label = "qubit";
  const cplx I(0.0, 1.0);
  s.psi = [I](const Params& x) {
    CVector v(2);
    v << std::exp(I * x[0]) * std::sin(x[1]), std::cos(x[1]);
    return v;
  };
  s.dpsi = {[I](const Params& x) {
              CVector v(2);
              v << I * std::exp(I * x[0]) * std::sin(x[1]), 0.0;
              return v;
            },
            [I](const Params& x) {
              CVector v(2);
              v << std::exp(I * x[0]) * std::cos(x[1]), -std::sin(x[1]);
              return v;
            }};
  return s;
}

// ((sqrt2/2) e^{i alpha1} sin theta1, (sqrt2/2) sin theta1, cos theta1).
inline ParametrizedPureState qutrit_fixture(double alpha1, double theta1) {
  ParametrizedPureState s;
  s.dim = 3;
  s.params = {alpha1, theta1};
  s.label = "qutrit";
  const cplx I(0.0, 1.0);
  const double h = std::sqrt(0.5);
  s.psi = [I, h](const Params& x) {
    CVector v(3);
    v << h * std::exp(I * x[0]) * std::sin(x[1]), h * std::sin(x[1]), std::cos(x[1]);
    return v;
  };
  s.dpsi = {[I, h](const Params& x) {
              CVector v(3);
              v << I * h * std::exp(I * x[0]) * std::sin(x[1]), 0.0, 0.0;
              return v;
            },
            [I, h](const Params& x) {
              CVector v(3);
              v << h * std::exp(I * x[0]) * std::cos(x[1]), h * std::cos(x[1]), -std::sin(x[1]);
              return v;
            }};
  return s;
}

// Squeezed coherent state D(x1 + i x2) S(x3)|0>, written in the displaced-squeezed number basis
// {|eta,r,0>, ..., |eta,r,3>} at the stored point.
inline ParametrizedPureState squeezed_fixture(double x1, double x2, double x3) {
  const cplx I(0.0, 1.0);
  SubspaceEmbedding e;
  e.basis_labels = {"eta_r_0", "eta_r_1", "eta_r_2", "eta_r_3"};
  e.state = basis_vector(4, 0);
  CVector d1 = CVector::Zero(4), d2 = CVector::Zero(4), d3 = CVector::Zero(4);
  d1(0) = -I * x2;
  d1(1) = std::exp(x3);
  d2(0) = I * x1;
  d2(1) = I * std::exp(-x3);
  d3(2) = -std::sqrt(0.5);
  e.derivatives = {d1, d2, d3};
  return embedded_state(e, {x1, x2, x3}, "squeezed");
}

// Density-matrix family rho(x) with optional analytic derivatives.
struct ParametrizedMixedState {
  std::size_t dim = 0;
  Params params;
  MatrixFn rho;
  std::vector<MatrixFn> drho;
  std::string label;

  std::size_t n() const { return params.size(); }

  CMatrix density_at(const Params& x) const {
    CMatrix r = rho(x);
    const auto d = static_cast<Eigen::Index>(dim);
    if (r.rows() != d || r.cols() != d) throw InputError(label + ": density matrix has wrong shape");
    if (max_abs(r - r.adjoint()) > 1e-10) throw InputError(label + ": density matrix is not Hermitian");
    if (std::abs(r.trace() - cplx(1.0)) > 1e-10) throw InputError(label + ": density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
    if (es.eigenvalues()(0) < -1e-10) throw InputError(label + ": density matrix is not positive semidefinite");
    return r;
  }

  CMatrix density() const { return density_at(params); }

  CMatrix derivative(std::size_t j) const {
    if (j >= n()) throw InputError(label + ": parameter index out of range");
    if (!drho.empty()) {
      if (drho.size() != n()) throw InputError(label + ": derivative provider count differs from parameter count");
      return drho[j](params);
    }
    const double step = fd_step(params[j]);
    Params up = params, down = params;
    up[j] += step;
    down[j] -= step;
    return (density_at(up) - density_at(down)) / (2.0 * step);
  }
};

// Tr_E of |Psi><Psi| for a vector indexed e * dim_sys + s.
inline CMatrix partial_trace_env(const CVector& psi, std::size_t dim_env, std::size_t dim_sys) {
  const auto E = static_cast<Eigen::Index>(dim_env), S = static_cast<Eigen::Index>(dim_sys);
  if (psi.size() != E * S) throw InputError("partial_trace_env: dimension mismatch");
  CMatrix out = CMatrix::Zero(S, S);
  for (Eigen::Index e = 0; e < E; ++e) {
    const CVector block = psi.segment(e * S, S);
    out += block * block.adjoint();
  }
  return out;
}

// Spectral purification sum_j sqrt(lambda_j) |j_E>|psi_j> with eigenvalues in descending order.
// Each eigenvector is rotated so its largest component is real and positive; eigenvalues below
// 1e-12 are dropped. Derivatives come from phase-aligned finite differences.
inline ParametrizedPureState purify(const ParametrizedMixedState& rho) {
  ParametrizedPureState s;
  s.dim = rho.dim * rho.dim;
  s.params = rho.params;
  s.label = rho.label + "_purified";
  s.psi = [rho](const Params& x) {
    const CMatrix r = rho.density_at(x);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
    const auto d = static_cast<Eigen::Index>(rho.dim);
    CVector out = CVector::Zero(d * d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const Eigen::Index col = d - 1 - k;
      const double lambda = es.eigenvalues()(col);
      if (lambda < 1e-12) continue;
      CVector v = es.eigenvectors().col(col);
      Eigen::Index big = 0;
      for (Eigen::Index i = 1; i < d; ++i)
        if (std::abs(v(i)) > std::abs(v(big)) + 1e-9) big = i;
      v *= std::conj(v(big)) / std::abs(v(big));
      out.segment(k * d, d) = std::sqrt(lambda) * v;
    }
    return CVector(out / out.norm());
  };
  return s;
}

}  // namespace qmetro
