#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qmetro/fisher.hpp"
#include "qmetro/linalg.hpp"
#include "qmetro/states.hpp"
#include "qmetro/tradeoff.hpp"

namespace qmetro {

inline constexpr double kDegenerateTol = 1e-9;
inline constexpr double kSaturationTol = 1e-8;

namespace detail {
inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}
}  // namespace detail

inline bool is_degenerate(double beta) { return beta > 1.0 - kDegenerateTol; }

// sqrt(1 - beta^2), taken as 0 on degenerate blocks.
inline double block_root(double beta) { return is_degenerate(beta) ? 0.0 : std::sqrt(std::max(0.0, 1.0 - beta * beta)); }

inline std::size_t degenerate_block_count(const BlockForm& blocks) {
  std::size_t k = 0;
  for (double b : blocks.betas) k += is_degenerate(b) ? 1 : 0;
  return k;
}

struct CanonicalForm {
  RMatrix J;
  FisherBundle bundle;
  BlockForm blocks;
};

// Reparametrize so that F_Q = I and F_Im takes the block form of blocks.canonical().
inline CanonicalForm canonical_parametrization(const FisherBundle& b) {
  CanonicalForm c;
  const RMatrix W = whitening(b.F_Q);
  RMatrix N = W * b.F_Im * W.transpose();
  N = 0.5 * (N - N.transpose()).eval();
  c.blocks = skew_block_diagonalize(N);
  c.J = c.blocks.P * W;
  c.bundle = reparametrize(b, c.J);
  const auto n = static_cast<Eigen::Index>(b.n());
  if (max_abs(c.bundle.F_Q - RMatrix::Identity(n, n)) > kCanonicalTol)
    throw NumericalError("canonical_parametrization: F_Q is not the identity after reparametrization");
  if (max_abs(c.bundle.F_Im - c.blocks.canonical()) > kCanonicalTol)
    throw NumericalError("canonical_parametrization: F_Im is not in block form after reparametrization");
  return c;
}

struct OptimalObservables {
  std::vector<CVector> o_vectors;
  bool used_ancilla = false;
  std::vector<CVector> perp_vectors;
  std::vector<double> varphi;  // one entry per degenerate block
  std::vector<double> betas;
};

// Observables o_j for a bundle in canonical form. perp supplies one unit vector per degenerate
// block, orthogonal to the state, to every l_j, and to each other.
inline OptimalObservables optimal_observables(const CVector& state_ext, const FisherBundle& canon,
                                              const BlockForm& blocks, const std::vector<CVector>& perp,
                                              double varphi = 0.0, bool used_ancilla = false) {
  const std::size_t n = canon.n();
  if (blocks.n != n) throw InputError("optimal_observables: block form does not match the bundle");
  if (max_abs(canon.F_Q - RMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))) >
      kCanonicalTol)
    throw InputError("optimal_observables: bundle is not in canonical form (F_Q != I)");
  const std::size_t needed = degenerate_block_count(blocks);
  if (perp.size() < needed)
    throw InputError("optimal_observables: " + std::to_string(needed) + " orthogonal directions needed, " +
                     std::to_string(perp.size()) + " available; request a larger ancilla");
  for (std::size_t i = 0; i < needed; ++i) {
    const CVector& p = perp[i];
    if (p.size() != state_ext.size()) throw InputError("optimal_observables: perp vector has wrong dimension");
    if (std::abs(p.norm() - 1.0) > 1e-9) throw InputError("optimal_observables: perp vector is not normalized");
    if (std::abs(state_ext.dot(p)) > 1e-9) throw InputError("optimal_observables: perp vector overlaps the state");
    for (const auto& l : canon.l_vectors)
      if (std::abs(l.dot(p)) > 1e-9) throw InputError("optimal_observables: perp vector overlaps an l-vector");
    for (std::size_t k = 0; k < i; ++k)
      if (std::abs(perp[k].dot(p)) > 1e-9) throw InputError("optimal_observables: perp vectors are not orthogonal");
  }

  OptimalObservables obs;
  obs.used_ancilla = used_ancilla;
  obs.betas = blocks.betas;
  obs.o_vectors = canon.l_vectors;
  const cplx I(0.0, 1.0);
  std::size_t next_perp = 0;
  for (std::size_t j = 0; j < blocks.betas.size(); ++j) {
    const double beta = blocks.betas[j];
    const CVector& l1 = canon.l_vectors[2 * j];
    const CVector& l2 = canon.l_vectors[2 * j + 1];
    if (is_degenerate(beta)) {
      const CVector& lp = perp[next_perp];
      obs.perp_vectors.push_back(lp);
      ++next_perp;
      obs.varphi.push_back(varphi);
      const double s = std::sin(2.0 * varphi), c = std::cos(2.0 * varphi);
      obs.o_vectors[2 * j] = 0.5 * (1.0 - s) * l1 + 0.5 * I * beta * c * lp;
      obs.o_vectors[2 * j + 1] = 0.5 * I * beta * (1.0 + s) * l1 + 0.5 * c * lp;
    } else {
      const double phi = std::asin(beta);
      const double a = (1.0 + std::cos(phi)) / (2.0 * std::cos(phi));
      const double b = -std::sin(phi) / (2.0 * std::cos(phi));
      obs.o_vectors[2 * j] = a * l1 - I * b * l2;
      obs.o_vectors[2 * j + 1] = I * b * l1 + a * l2;
    }
  }
  return obs;
}

// Orthonormal basis of the extended space; the bras <m| are the rows of U.
struct Measurement {
  CMatrix U;
  CMatrix A;
  RMatrix B;
  std::size_t ancilla_dim = 1;
  std::vector<double> betas;
  std::vector<double> varphi;

  std::size_t dim() const { return static_cast<std::size_t>(U.rows()); }
  CVector ket(std::size_t m) const { return U.row(static_cast<Eigen::Index>(m)).adjoint(); }
  std::vector<CVector> basis() const {
    std::vector<CVector> out;
    for (std::size_t m = 0; m < dim(); ++m) out.push_back(ket(m));
    return out;
  }
};

// Rows of U = B A^{-1} with A built from {state, o_1, ..., o_n} and completed to a basis.
inline Measurement build_measurement(const CVector& state_ext, const OptimalObservables& obs,
                                     const std::optional<RMatrix>& B_override = std::nullopt) {
  const auto dim = static_cast<std::size_t>(state_ext.size());
  const std::size_t n = obs.o_vectors.size();
  double scale = 1.0;
  for (const auto& o : obs.o_vectors) scale = std::max(scale, o.squaredNorm());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(obs.o_vectors[j].dot(obs.o_vectors[k]).imag()) > 1e-9 * scale)
        throw NumericalError("build_measurement: <o_" + std::to_string(j) + "|o_" + std::to_string(k) +
                             "> is not real");

  std::vector<CVector> seed{state_ext};
  seed.insert(seed.end(), obs.o_vectors.begin(), obs.o_vectors.end());
  const GramSchmidtResult gs = gram_schmidt(seed);
  if (!gs.dropped.empty())
    throw NumericalError("build_measurement: state and observables are linearly dependent");
  const std::vector<CVector> a = complete_basis(gs.basis, dim);

  Measurement m;
  m.A = as_columns(a, dim);
  m.B = B_override ? *B_override : dense_first_column_orthogonal(dim);
  if (static_cast<std::size_t>(m.B.rows()) != dim || static_cast<std::size_t>(m.B.cols()) != dim)
    throw InputError("build_measurement: B has wrong shape");
  const auto d = static_cast<Eigen::Index>(dim);
  if (max_abs(m.B.transpose() * m.B - RMatrix::Identity(d, d)) > kOrthonormalTol)
    throw InputError("build_measurement: B is not orthogonal");
  m.U = m.B.cast<cplx>() * m.A.adjoint();
  m.betas = obs.betas;
  m.varphi = obs.varphi;

  const CVector c = m.U * state_ext;
  for (Eigen::Index r = 0; r < d; ++r) {
    if (std::abs(c(r)) < 1e-14) throw NumericalError("build_measurement: outcome " + std::to_string(r) +
                                                     " is orthogonal to the state");
    m.U.row(r) *= std::conj(c(r)) / std::abs(c(r));
  }
  if (max_abs(m.U * m.U.adjoint() - CMatrix::Identity(d, d)) > kOrthonormalTol)
    throw NumericalError("build_measurement: basis is not orthonormal");

  const CVector c2 = m.U * state_ext;
  for (std::size_t j = 0; j < n; ++j) {
    const CVector co = m.U * obs.o_vectors[j];
    for (Eigen::Index r = 0; r < d; ++r) {
      const cplx f = co(r) / c2(r);
      if (std::abs(f.imag()) > 1e-8 * std::max(1.0, std::abs(f)))
        throw NumericalError("build_measurement: f_" + std::to_string(j) + "(m) is not real");
    }
  }
  return m;
}

// Recompute the classical Fisher information and check it reaches the bound.
inline TradeoffReport verify_saturation(const CVector& state_ext, const FisherBundle& bundle, const Measurement& m,
                                        std::optional<std::size_t> system_dim = std::nullopt,
                                        double tol = kSaturationTol) {
  const Cfim fc = cfim(state_ext, bundle.l_vectors, m.U);
  TradeoffReport r = report(bundle, fc.matrix, system_dim);
  if (std::abs(*r.gap) > tol) {
    std::string msg = "verify_saturation: gap " + detail::sci(*r.gap) + " exceeds tolerance " + detail::sci(tol);
    try {
      const CanonicalForm c = canonical_parametrization(bundle);
      const RMatrix Fc = c.J * fc.matrix * c.J.transpose();
      std::size_t worst = 0;
      double worst_dev = -1.0;
      for (std::size_t j = 0; j < c.blocks.betas.size(); ++j) {
        const double target = 0.5 * (1.0 + block_root(c.blocks.betas[j]));
        const auto i = static_cast<Eigen::Index>(2 * j);
        const double dev = std::abs(Fc(i, i) - target) + std::abs(Fc(i + 1, i + 1) - target);
        if (dev > worst_dev) {
          worst_dev = dev;
          worst = j;
        }
      }
      if (!c.blocks.betas.empty())
        msg += "; block " + std::to_string(worst) + " (beta = " + detail::sci(c.blocks.betas[worst]) +
               ") deviates by " + detail::sci(worst_dev);
    } catch (const std::exception&) {
    }
    throw ConstructionError(msg);
  }
  return r;
}

enum class PerpPolicy { Ancilla, SystemComplement, Explicit };

struct ConstructionOptions {
  PerpPolicy policy = PerpPolicy::Ancilla;
  std::vector<CVector> explicit_perp;  // system-space vectors for PerpPolicy::Explicit
  double varphi = 0.0;
  std::optional<RMatrix> B;
  double tol = kSaturationTol;
};

struct OptimalMeasurement {
  std::size_t ancilla_dim = 1;
  CVector state_ext;
  FisherBundle bundle;
  CanonicalForm canonical;
  OptimalObservables observables;
  Measurement measurement;
  Cfim cfim;
  TradeoffReport report;
};

// Full pipeline: bundle, canonical form, observables, basis, and saturation check.
inline OptimalMeasurement construct_optimal_measurement(const ParametrizedPureState& s,
                                                        const ConstructionOptions& opt = {}) {
  const FisherBundle sys = fisher_bundle(sld_vectors(s, 1));
  const std::size_t degenerate = degenerate_block_count(canonical_parametrization(sys).blocks);

  OptimalMeasurement out;
  std::vector<CVector> perp;
  const CVector psi = s.state();
  switch (opt.policy) {
    case PerpPolicy::Ancilla:
      out.ancilla_dim = degenerate == 0 ? 1 : degenerate + 1;
      for (std::size_t k = 1; k <= degenerate; ++k) perp.push_back(kron(psi, basis_vector(out.ancilla_dim, k)));
      break;
    case PerpPolicy::SystemComplement: {
      std::vector<CVector> span{psi};
      span.insert(span.end(), sys.l_vectors.begin(), sys.l_vectors.end());
      const GramSchmidtResult gs = gram_schmidt(span, 1e-9);
      if (gs.basis.size() + degenerate > s.dim)
        throw InputError("construct_optimal_measurement: no room in the system space for orthogonal directions");
      const std::vector<CVector> full = complete_basis(gs.basis, s.dim);
      for (std::size_t k = 0; k < degenerate; ++k) perp.push_back(full[gs.basis.size() + k]);
      break;
    }
    case PerpPolicy::Explicit:
      perp = opt.explicit_perp;
      break;
  }

  out.state_ext = attach_ancilla(psi, out.ancilla_dim);
  out.bundle = out.ancilla_dim == 1 ? sys : fisher_bundle(sld_vectors(s, out.ancilla_dim));
  out.canonical = canonical_parametrization(out.bundle);
  out.observables = optimal_observables(out.state_ext, out.canonical.bundle, out.canonical.blocks, perp,
                                        opt.varphi, out.ancilla_dim > 1);
  out.measurement = build_measurement(out.state_ext, out.observables, opt.B);
  out.measurement.ancilla_dim = out.ancilla_dim;
  out.cfim = cfim(out.state_ext, out.bundle.l_vectors, out.measurement.U);
  out.report = verify_saturation(out.state_ext, out.bundle, out.measurement,
                                 s.space_dim(), opt.tol);
  return out;
}

}  // namespace qmetro
