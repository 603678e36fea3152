#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qmetro/linalg.hpp"
#include "qmetro/states.hpp"

namespace qmetro {

// |v> ⊗ |xi> with |xi> the first ancilla basis vector.
inline CVector attach_ancilla(const CVector& v, std::size_t ancilla_dim) {
  if (ancilla_dim < 1) throw InputError("ancilla dimension must be at least 1");
  return kron(v, basis_vector(ancilla_dim, 0));
}

inline CVector extended_state(const ParametrizedPureState& s, std::size_t ancilla_dim = 1) {
  return attach_ancilla(s.state(), ancilla_dim);
}

// |l_j> = (2|d_j psi> + 2<d_j psi|psi>|psi>) ⊗ |xi>.
inline std::vector<CVector> sld_vectors(const ParametrizedPureState& s, std::size_t ancilla_dim = 1) {
  const CVector psi = s.state();
  std::vector<CVector> out;
  for (std::size_t j = 0; j < s.n(); ++j) {
    const CVector d = s.derivative(j);
    out.push_back(attach_ancilla(2.0 * (d - psi.dot(d) * psi), ancilla_dim));
  }
  return out;
}

// F = F_Q + i F_Im with F_jk = <l_j|l_k>.
struct FisherBundle {
  std::vector<CVector> l_vectors;
  CMatrix F;
  RMatrix F_Q;
  RMatrix F_Im;
  bool mixed = false;

  std::size_t n() const { return l_vectors.size(); }
};

inline FisherBundle fisher_bundle(const std::vector<CVector>& l_vectors, bool mixed = false) {
  FisherBundle b;
  b.l_vectors = l_vectors;
  b.mixed = mixed;
  const auto n = static_cast<Eigen::Index>(l_vectors.size());
  if (n == 0) throw InputError("fisher_bundle: no parameters");
  const CMatrix L = as_columns(l_vectors, static_cast<std::size_t>(l_vectors.front().size()));
  b.F = L.adjoint() * L;
  b.F = 0.5 * (b.F + b.F.adjoint()).eval();
  b.F_Q = b.F.real();
  b.F_Im = b.F.imag();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(b.F_Q);
  if (es.eigenvalues()(0) < -1e-10 * std::max(1.0, max_abs(b.F_Q)))
    throw NumericalError("fisher_bundle: F_Q is not positive semidefinite");
  return b;
}

// Bundle for the parameters x' with d/dx'_j = sum_k J_jk d/dx_k.
inline FisherBundle reparametrize(const FisherBundle& b, const RMatrix& J) {
  const auto n = static_cast<Eigen::Index>(b.n());
  if (J.rows() != n || J.cols() != n) throw InputError("reparametrize: J has wrong shape");
  std::vector<CVector> l;
  for (Eigen::Index j = 0; j < n; ++j) {
    CVector v = CVector::Zero(b.l_vectors.front().size());
    for (Eigen::Index k = 0; k < n; ++k) v += J(j, k) * b.l_vectors[static_cast<std::size_t>(k)];
    l.push_back(v);
  }
  return fisher_bundle(l, b.mixed);
}

// SLD matrices (L_q)_ab = 2 (d_q rho)_ab / (p_a + p_b) in the eigenbasis of rho, zero where the
// denominator is below 1e-12.
inline std::vector<CMatrix> mixed_sld_matrices(const ParametrizedMixedState& s) {
  const CMatrix r = s.density();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
  const CMatrix& V = es.eigenvectors();
  const RVector& p = es.eigenvalues();
  const auto d = static_cast<Eigen::Index>(s.dim);
  std::vector<CMatrix> out;
  for (std::size_t q = 0; q < s.n(); ++q) {
    const CMatrix dr = V.adjoint() * s.derivative(q) * V;
    CMatrix L = CMatrix::Zero(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        const double den = p(a) + p(b);
        if (den >= 1e-12) L(a, b) = 2.0 * dr(a, b) / den;
      }
    const CMatrix full = V * L * V.adjoint();
    out.push_back(0.5 * (full + full.adjoint()));
  }
  return out;
}

// sum_j sqrt(lambda_j) |j_E>|psi_j> for a density matrix, eigenvalues descending.
inline CVector purification_vector(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()));
  const Eigen::Index d = rho.rows();
  CVector out = CVector::Zero(d * d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index col = d - 1 - k;
    const double lambda = es.eigenvalues()(col);
    if (lambda >= 1e-12) out.segment(k * d, d) = std::sqrt(lambda) * es.eigenvectors().col(col);
  }
  return out;
}

// Mixed-state bundle with F_jk = Tr(rho L_j L_k), realized as |l_j> = (I_E ⊗ L_j)|Psi>.
inline FisherBundle mixed_fisher_bundle(const ParametrizedMixedState& s) {
  const CVector purified = purification_vector(s.density());
  const auto d = static_cast<Eigen::Index>(s.dim);
  std::vector<CVector> l;
  for (const CMatrix& L : mixed_sld_matrices(s)) {
    CVector v(d * d);
    for (Eigen::Index e = 0; e < d; ++e) v.segment(e * d, d) = L * purified.segment(e * d, d);
    l.push_back(v);
  }
  return fisher_bundle(l, true);
}

inline constexpr double kProbFloor = 1e-12;
inline constexpr double kDerivFloor = 1e-9;

struct Cfim {
  RMatrix matrix;
  RVector probabilities;
  RMatrix dprob;  // outcomes x parameters
  std::vector<std::size_t> skipped;
};

// Classical Fisher information of the projective measurement whose bras are the rows of U.
inline Cfim cfim(const CVector& state_ext, const std::vector<CVector>& l_vectors, const CMatrix& U) {
  if (U.cols() != state_ext.size()) throw InputError("cfim: measurement and state dimensions differ");
  const auto n = static_cast<Eigen::Index>(l_vectors.size());
  const Eigen::Index M = U.rows();
  const CVector c = U * state_ext;
  Cfim out;
  out.matrix = RMatrix::Zero(n, n);
  out.probabilities = c.cwiseAbs2();
  out.dprob = RMatrix(M, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const CVector& l = l_vectors[static_cast<std::size_t>(j)];
    if (l.size() != state_ext.size()) throw InputError("cfim: l-vector dimension differs from the state");
    const CVector cl = U * l;
    for (Eigen::Index m = 0; m < M; ++m) out.dprob(m, j) = (std::conj(c(m)) * cl(m)).real();
  }
  for (Eigen::Index m = 0; m < M; ++m) {
    const double p = out.probabilities(m);
    if (p < kProbFloor) {
      if (n > 0 && out.dprob.row(m).cwiseAbs().maxCoeff() >= kDerivFloor)
        throw SingularOutcomeError("cfim: outcome " + std::to_string(m) +
                                       " has vanishing probability but non-vanishing derivative",
                                   static_cast<std::size_t>(m));
      out.skipped.push_back(static_cast<std::size_t>(m));
      continue;
    }
    out.matrix += out.dprob.row(m).transpose() * out.dprob.row(m) / p;
  }
  return out;
}

}  // namespace qmetro
