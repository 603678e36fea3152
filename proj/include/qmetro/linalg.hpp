#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "qmetro/errors.hpp"

namespace qmetro {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kOrthonormalTol = 1e-10;
inline constexpr double kCanonicalTol = 1e-9;
inline constexpr double kDropTol = 1e-12;

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Stack vectors as the columns of a matrix.
inline CMatrix as_columns(const std::vector<CVector>& vs, std::size_t dim) {
  CMatrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t k = 0; k < vs.size(); ++k) {
    if (static_cast<std::size_t>(vs[k].size()) != dim) throw InputError("as_columns: dimension mismatch");
    out.col(static_cast<Eigen::Index>(k)) = vs[k];
  }
  return out;
}

// Kronecker product a ⊗ b with index a_i * dim(b) + b_j.
inline CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline CVector basis_vector(std::size_t dim, std::size_t k) {
  CVector e = CVector::Zero(static_cast<Eigen::Index>(dim));
  e(static_cast<Eigen::Index>(k)) = 1.0;
  return e;
}

struct GramSchmidtResult {
  std::vector<CVector> basis;
  std::vector<std::size_t> dropped;  // indices of inputs that added no new direction
};

// Classical Gram-Schmidt with one re-orthogonalization pass. An input is dropped when its
// residual norm falls below tol times the largest input norm.
inline GramSchmidtResult gram_schmidt(const std::vector<CVector>& vectors, double tol = kDropTol) {
  if (!(tol > 0)) throw InputError("gram_schmidt: tol must be positive");
  GramSchmidtResult out;
  if (vectors.empty()) return out;
  const Eigen::Index dim = vectors.front().size();
  double largest = 0.0;
  for (const auto& v : vectors) {
    if (v.size() != dim) throw InputError("gram_schmidt: dimension mismatch");
    largest = std::max(largest, v.norm());
  }
  const double threshold = tol * largest;
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    CVector r = vectors[k];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out.basis) r -= q.dot(r) * q;
    const double norm = r.norm();
    if (largest == 0.0 || norm < threshold) {
      out.dropped.push_back(k);
      continue;
    }
    out.basis.push_back(r / norm);
  }
  return out;
}

// Extend an orthonormal set to a basis of C^dim. Each new vector is the normalized residual of
// the standard basis vector with the largest residual norm, lowest index on ties.
inline std::vector<CVector> complete_basis(const std::vector<CVector>& orthonormal, std::size_t dim) {
  if (orthonormal.size() > dim) throw InputError("complete_basis: more vectors than the dimension");
  const CMatrix Q = as_columns(orthonormal, dim);
  const auto k = static_cast<Eigen::Index>(orthonormal.size());
  if (max_abs(Q.adjoint() * Q - CMatrix::Identity(k, k)) > kOrthonormalTol)
    throw InputError("complete_basis: input is not orthonormal");

  std::vector<CVector> out = orthonormal;
  while (out.size() < dim) {
    CVector best;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < dim; ++i) {
      CVector r = basis_vector(dim, i);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : out) r -= q.dot(r) * q;
      const double norm = r.norm();
      if (norm > best_norm + 1e-12) {
        best_norm = norm;
        best = r;
      }
    }
    out.push_back(best / best_norm);
  }
  return out;
}

// Canonical skew form: 2x2 blocks [[0, b], [-b, 0]] followed by a zero tail.
struct BlockForm {
  RMatrix P;
  std::vector<double> betas;
  std::size_t zeros = 0;
  std::size_t n = 0;

  RMatrix canonical() const {
    RMatrix c = RMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < betas.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(2 * j);
      c(a, a + 1) = betas[j];
      c(a + 1, a) = -betas[j];
    }
    return c;
  }
};

namespace detail {

// Orthonormalize real vectors; drops those whose residual is below tol.
inline std::vector<RVector> real_orthonormalize(const std::vector<RVector>& vs, double tol) {
  std::vector<RVector> out;
  for (const auto& v : vs) {
    RVector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out) r -= q.dot(r) * q;
    const double norm = r.norm();
    if (norm > tol) out.push_back(r / norm);
  }
  return out;
}

// Index of the standard basis vector with the largest projection onto span(W), lowest on ties.
inline Eigen::Index strongest_axis(const std::vector<RVector>& W, Eigen::Index n) {
  Eigen::Index best = 0;
  double best_norm = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& w : W) s += w(i) * w(i);
    if (s > best_norm + 1e-9) {
      best_norm = s;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

inline BlockForm skew_block_diagonalize(const RMatrix& m) {
  if (m.rows() != m.cols()) throw InputError("skew_block_diagonalize: matrix is not square");
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, max_abs(m));
  if (max_abs(m + m.transpose()) > 1e-10 * scale)
    throw InputError("skew_block_diagonalize: matrix is not antisymmetric");
  const RMatrix M = 0.5 * (m - m.transpose());

  BlockForm form;
  form.n = static_cast<std::size_t>(n);
  std::vector<RVector> rows;

  if (n > 0) {
    const CMatrix H = cplx(0.0, 1.0) * M.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("skew_block_diagonalize: eigen-solve failed");
    const RVector& ev = es.eigenvalues();
    const double zero_tol = 1e-10 * scale;

    // Positive eigenvalues in descending order, grouped into clusters of equal beta.
    std::vector<Eigen::Index> pos;
    for (Eigen::Index i = n - 1; i >= 0; --i)
      if (ev(i) > zero_tol) pos.push_back(i);

    std::size_t start = 0;
    while (start < pos.size()) {
      std::size_t end = start + 1;
      while (end < pos.size() && ev(pos[start]) - ev(pos[end]) <= 1e-10 * std::max(1.0, ev(pos[start]))) ++end;
      double beta = 0.0;
      std::vector<RVector> raw;
      for (std::size_t c = start; c < end; ++c) {
        beta += ev(pos[c]);
        const CVector v = es.eigenvectors().col(pos[c]);
        raw.push_back(v.real());
        raw.push_back(v.imag());
      }
      const auto k = end - start;
      beta /= static_cast<double>(k);
      std::vector<RVector> W = detail::real_orthonormalize(raw, 1e-6);
      if (W.size() != 2 * k) throw NumericalError("skew_block_diagonalize: degenerate pair subspace");

      for (std::size_t b = 0; b < k; ++b) {
        const Eigen::Index axis = detail::strongest_axis(W, n);
        RVector p1 = RVector::Zero(n);
        for (const auto& w : W) p1 += w(axis) * w;
        p1.normalize();
        RVector p2 = -(M * p1) / beta;
        p2 -= p1.dot(p2) * p1;
        p2.normalize();
        rows.push_back(p1);
        rows.push_back(p2);
        form.betas.push_back(beta);

        std::vector<RVector> rest;
        for (const auto& w : W) rest.push_back(w - p1.dot(w) * p1 - p2.dot(w) * p2);
        W = detail::real_orthonormalize(rest, 1e-6);
        if (W.size() != 2 * (k - b - 1)) throw NumericalError("skew_block_diagonalize: lost pair subspace");
      }
      start = end;
    }

    // Zero tail: deterministic completion of the block rows to an orthonormal basis of R^n.
    while (rows.size() < static_cast<std::size_t>(n)) {
      RVector best;
      double best_norm = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        RVector r = RVector::Unit(n, i);
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& q : rows) r -= q.dot(r) * q;
        if (r.norm() > best_norm + 1e-12) {
          best_norm = r.norm();
          best = r;
        }
      }
      rows.push_back(best / best_norm);
      ++form.zeros;
    }
  }

  form.P = RMatrix(n, n);
  for (Eigen::Index i = 0; i < n; ++i) form.P.row(i) = rows[static_cast<std::size_t>(i)].transpose();

  if (max_abs(form.P.transpose() * form.P - RMatrix::Identity(n, n)) > kOrthonormalTol)
    throw NumericalError("skew_block_diagonalize: P is not orthogonal");
  if (max_abs(form.P * M * form.P.transpose() - form.canonical()) > kCanonicalTol * scale)
    throw NumericalError("skew_block_diagonalize: canonical-form residual too large");
  return form;
}

// Householder reflection sending e_1 to the all-ones unit vector. Symmetric, orthogonal, and its
// first column is 1/sqrt(dim) in every entry.
inline RMatrix dense_first_column_orthogonal(std::size_t dim) {
  if (dim < 1) throw InputError("dense_first_column_orthogonal: dim must be at least 1");
  const auto d = static_cast<Eigen::Index>(dim);
  if (d == 1) return RMatrix::Identity(1, 1);
  RVector u = -RVector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  u(0) += 1.0;
  return RMatrix::Identity(d, d) - 2.0 * u * u.transpose() / u.squaredNorm();
}

// Whitening W with W F W^T = I for a real symmetric positive-definite F, built as C^{-1/2} D where
// D = diag(F)^{-1/2} and C = D F D. Equals F^{-1/2} whenever F is diagonal; in general it differs
// from F^{-1/2} by an orthogonal factor. Identifiability is judged on C so that parameters with
// very different units are not flagged.
inline RMatrix whitening(const RMatrix& F, double floor = 1e-12) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n) throw InputError("whitening: matrix is not square");
  RVector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(F(i, i) > 0.0))
      throw SingularFisherError("singular F_Q: parameter " + std::to_string(i) + " carries no information");
    d(i) = 1.0 / std::sqrt(F(i, i));
  }
  const RMatrix C = d.asDiagonal() * F * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (C + C.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("whitening: eigen-solve failed");
  if (es.eigenvalues()(0) < floor) {
    RVector dir = d.asDiagonal() * es.eigenvectors().col(0);
    dir /= dir.cwiseAbs().maxCoeff();
    std::string msg = "singular F_Q: null direction (";
    for (Eigen::Index i = 0; i < n; ++i) msg += (i ? ", " : "") + std::to_string(dir(i));
    throw SingularFisherError(msg + ")");
  }
  const RVector s = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose() * d.asDiagonal();
}

}  // namespace qmetro
