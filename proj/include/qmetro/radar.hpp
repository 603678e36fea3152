#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qmetro/fisher.hpp"
#include "qmetro/gaussian.hpp"
#include "qmetro/measurement.hpp"
#include "qmetro/states.hpp"
#include "qmetro/tradeoff.hpp"

namespace qmetro {

enum class RadarSource { SinglePhoton, BiPhoton };

// Outgoing pulse and target. Natural units: sigma0 = 1, c = 1.
struct RadarModel {
  RadarSource source = RadarSource::SinglePhoton;
  double sigma0 = 1.0;
  double omega0 = 0.0;
  double t0 = 0.0;
  double kappa = 0.0;
  double sigma_i0 = 1.0;
  double omega_i0 = 0.0;
  double c = 1.0;
  double x = 0.0;
  double v = 0.0;

  void validate() const {
    if (!(sigma0 > 0)) throw InputError("radar: sigma0 must be positive");
    if (!(sigma_i0 > 0)) throw InputError("radar: sigma_i0 must be positive");
    if (!(c > 0) || !(std::abs(v) < c)) throw InputError("radar: |v| must be below c");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw InputError("radar: kappa must lie in [0, 1)");
    if (source == RadarSource::SinglePhoton && kappa != 0.0)
      throw InputError("radar: a single-photon source has no idler correlation");
  }
};

struct ReturnedSignal {
  RadarSource source = RadarSource::SinglePhoton;
  double sigma = 1.0;
  double t_bar = 0.0;
  double omega_bar = 0.0;
  double kappa = 0.0;
  double sigma_i = 1.0;
  double omega_i = 0.0;
  double t_i = 0.0;
  SubspaceEmbedding embedding;
};

namespace detail {

inline SubspaceEmbedding radar_embedding(RadarSource source, double sigma, double omega_bar, double kappa) {
  const cplx I(0.0, 1.0);
  SubspaceEmbedding e;
  e.basis_labels = {"e1", "e2", "e3"};
  e.state = basis_vector(3, 0);
  CVector dt = CVector::Zero(3), dw = CVector::Zero(3);
  dt(0) = I * omega_bar;
  if (source == RadarSource::SinglePhoton) {
    dt(1) = sigma;
    dw(1) = -I / (2.0 * sigma);
  } else {
    dt(1) = sigma * std::sqrt((1.0 - kappa) / 2.0);
    dt(2) = sigma * std::sqrt((1.0 + kappa) / 2.0);
    dw(1) = -I / (2.0 * sigma * std::sqrt(2.0 * (1.0 - kappa)));
    dw(2) = -I / (2.0 * sigma * std::sqrt(2.0 * (1.0 + kappa)));
  }
  e.derivatives = {dt, dw};
  return e;
}

}  // namespace detail

// Doppler-compressed pulse returned from a target at range x moving with radial velocity v.
inline ReturnedSignal returned_state(const RadarModel& m) {
  m.validate();
  const double r = (m.c - m.v) / (m.c + m.v);
  ReturnedSignal s;
  s.source = m.source;
  s.sigma = r * m.sigma0;
  s.t_bar = m.t0 + 2.0 * m.x / (m.c - m.v);
  s.omega_bar = r * m.omega0;
  s.kappa = m.kappa;
  s.sigma_i = m.sigma_i0;
  s.omega_i = m.omega_i0;
  s.t_i = m.t0;
  s.embedding = detail::radar_embedding(s.source, s.sigma, s.omega_bar, s.kappa);
  return s;
}

// Same signal with (t_bar, omega_bar) moved; used for reference points of the measurement.
inline ReturnedSignal shifted(const ReturnedSignal& s, double t_bar, double omega_bar) {
  ReturnedSignal out = s;
  out.t_bar = t_bar;
  out.omega_bar = omega_bar;
  out.embedding = detail::radar_embedding(s.source, s.sigma, omega_bar, s.kappa);
  return out;
}

// Inverse of the returned-pulse map for display: (x, v) from (t_bar, omega_bar).
inline std::array<double, 2> range_velocity(const RadarModel& m, double t_bar, double omega_bar) {
  if (m.omega0 == 0.0) throw InputError("range_velocity: omega0 must be nonzero to recover the velocity");
  const double r = omega_bar / m.omega0;
  const double v = m.c * (1.0 - r) / (1.0 + r);
  return {0.5 * (t_bar - m.t0) * (m.c - v), v};
}

// State over (t_bar, omega_bar) in the embedded basis {e1, e2, e3}.
inline ParametrizedPureState radar_state(const ReturnedSignal& s) {
  return embedded_state(s.embedding, {s.t_bar, s.omega_bar},
                        s.source == RadarSource::SinglePhoton ? "radar_single" : "radar_biphoton");
}

inline FisherBundle radar_fisher(const ReturnedSignal& s) { return fisher_bundle(sld_vectors(radar_state(s))); }

inline FisherBundle radar_fisher(const ReturnedSignal& s, double kappa) {
  if (s.source == RadarSource::SinglePhoton) {
    if (kappa != 0.0) throw InputError("radar_fisher: a single-photon source has no idler correlation");
    return radar_fisher(s);
  }
  ReturnedSignal t = s;
  t.kappa = kappa;
  t.embedding = detail::radar_embedding(t.source, t.sigma, t.omega_bar, kappa);
  return radar_fisher(t);
}

// Lower bound on sigma_t * sigma_omega for correlation kappa.
inline double refined_ak_bound(double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw InputError("refined_ak_bound: kappa must lie in [0, 1)");
  return std::sqrt((1.0 - kappa) / (1.0 + kappa));
}

// sqrt((F_C^{-1})_11 (F_C^{-1})_22).
inline double uncertainty_product(const RMatrix& F_C) {
  const RMatrix inv = F_C.inverse();
  return std::sqrt(inv(0, 0) * inv(1, 1));
}

// Optimal three-outcome basis over {e1, e2, e3} at the signal's (t_bar, omega_bar).
inline OptimalMeasurement optimal_radar_measurement(const ReturnedSignal& s, double varphi = 0.0) {
  ConstructionOptions opt;
  opt.policy = PerpPolicy::SystemComplement;
  opt.varphi = varphi;
  return construct_optimal_measurement(radar_state(s), opt);
}

// Closed-form overlaps <e_k(ref)|Psi(theta)> and their theta-derivatives for the continuous
// pulse, evaluated without discretization.
class RadarOverlaps {
 public:
  RadarOverlaps(const ReturnedSignal& s, double t_ref, double omega_ref) : s_(s) {
    ref_ = pulse(t_ref, omega_ref).conjugate();
    const double sg = s.sigma;
    if (s.source == RadarSource::SinglePhoton) {
      const Poly u = Poly::affine(0, sg, -sg * t_ref);
      basis_ = {Poly::constant(1.0), u * cplx(2.0),
                (Poly::constant(1.0) - u * u * cplx(4.0)) * cplx(std::sqrt(0.5))};
    } else {
      const Poly u = Poly::affine(0, sg, -sg * t_ref);
      const Poly w = Poly::affine(1, s.sigma_i, -s.sigma_i * s.t_i);
      basis_ = {Poly::constant(1.0), (u + w) * cplx(std::sqrt(2.0 * (1.0 - s.kappa))),
                (u - w) * cplx(std::sqrt(2.0 * (1.0 + s.kappa)))};
    }
  }

  struct Value {
    CVector c;   // <e_k|Psi>
    CMatrix dc;  // 3 x 2, d/d(t_bar, omega_bar)
  };

  Value at(double t_bar, double omega_bar) const {
    const Gaussian g = ref_ * pulse(t_bar, omega_bar);
    const cplx I(0.0, 1.0);
    Poly dlog_t, dlog_w;
    const double sg = s_.sigma;
    dlog_t = Poly::affine(0, 2.0 * sg * sg, -2.0 * sg * sg * t_bar) + Poly::constant(I * omega_bar);
    if (s_.source == RadarSource::BiPhoton)
      dlog_t = dlog_t - Poly::affine(1, 2.0 * s_.kappa * sg * s_.sigma_i, -2.0 * s_.kappa * sg * s_.sigma_i * s_.t_i);
    dlog_w = Poly::affine(0, 1.0, -t_bar) * (-I);
    Value v{CVector(3), CMatrix(3, 2)};
    for (Eigen::Index k = 0; k < 3; ++k) {
      const Poly& p = basis_[static_cast<std::size_t>(k)];
      v.c(k) = integrate(p, g);
      v.dc(k, 0) = integrate(p * dlog_t, g);
      v.dc(k, 1) = integrate(p * dlog_w, g);
    }
    return v;
  }

 private:
  Gaussian pulse(double t_bar, double omega_bar) const {
    const double sg = s_.sigma;
    if (s_.source == RadarSource::SinglePhoton) {
      RMatrix Q(1, 1);
      Q << sg * sg;
      return Gaussian::pulse(Q, RVector::Constant(1, t_bar), RVector::Constant(1, omega_bar),
                             std::pow(2.0 * sg * sg / std::numbers::pi, 0.25));
    }
    const double si = s_.sigma_i, k = s_.kappa;
    RMatrix Q(2, 2);
    Q << sg * sg, -k * sg * si, -k * sg * si, si * si;
    RVector z0(2), om(2);
    z0 << t_bar, s_.t_i;
    om << omega_bar, s_.omega_i;
    return Gaussian::pulse(Q, z0, om, std::sqrt(2.0 * sg * si / std::numbers::pi) * std::pow(1.0 - k * k, 0.25));
  }

  ReturnedSignal s_;
  Gaussian ref_;
  std::vector<Poly> basis_;
};

// Pulse coordinates in the basis fixed at the reference point, as a movable pure state. Used to
// cross-check analytic derivatives by finite differences.
inline ParametrizedPureState projected_radar_state(const ReturnedSignal& s) {
  const auto overlaps = std::make_shared<RadarOverlaps>(s, s.t_bar, s.omega_bar);
  ParametrizedPureState p;
  p.dim = 3;
  p.params = {s.t_bar, s.omega_bar};
  p.label = "radar_projected";
  p.psi = [overlaps](const Params& x) { return CVector(overlaps->at(x[0], x[1]).c); };
  return p;
}

// Outcome probabilities of the three-outcome measurement plus the complement of its span.
class RadarLikelihood {
 public:
  RadarLikelihood(const ReturnedSignal& s, double t_ref, double omega_ref, const CMatrix& U)
      : overlaps_(s, t_ref, omega_ref), U_(U) {}

  struct Value {
    RVector p;   // 4 entries, last is the complement outcome
    RMatrix dp;  // 4 x 2
  };

  Value at(double t_bar, double omega_bar) const {
    const auto o = overlaps_.at(t_bar, omega_bar);
    const CVector a = U_ * o.c;
    const CMatrix da = U_ * o.dc;
    Value v{RVector(4), RMatrix(4, 2)};
    for (Eigen::Index m = 0; m < 3; ++m) {
      v.p(m) = std::norm(a(m));
      for (Eigen::Index j = 0; j < 2; ++j) v.dp(m, j) = 2.0 * (std::conj(a(m)) * da(m, j)).real();
    }
    v.p(3) = std::max(0.0, 1.0 - v.p.head(3).sum());
    v.dp.row(3) = -v.dp.topRows(3).colwise().sum();
    return v;
  }

 private:
  RadarOverlaps overlaps_;
  CMatrix U_;
};

struct EstimationRun {
  double kappa = 0.0;
  long long shots = 0;
  int batches = 0;
  std::uint64_t seed = 0;
  std::array<double, 2> truth{};
  std::array<double, 2> reference{};
  std::vector<std::array<long long, 4>> outcomes;
  std::vector<std::array<double, 2>> estimates;
  std::vector<bool> converged;
  int excluded = 0;
  RMatrix empirical_cov;
  RMatrix crb;  // (shots F_C)^{-1} at the truth
  double empirical_product = 0.0;  // shots * sigma_t * sigma_omega
  double predicted_product = 0.0;
};

struct SimulationOptions {
  long long shots = 100000;
  int batches = 200;
  std::uint64_t seed = 12345;
  std::array<double, 2> offset{0.0, 0.0};  // measurement reference minus truth
  int max_iterations = 100;
};

namespace detail {

inline double log_likelihood(const RVector& p, const std::array<long long, 4>& n) {
  double l = 0.0;
  for (Eigen::Index m = 0; m < 4; ++m) {
    const auto count = n[static_cast<std::size_t>(m)];
    if (count == 0) continue;
    if (!(p(m) > 0.0)) return -std::numeric_limits<double>::infinity();
    l += static_cast<double>(count) * std::log(p(m));
  }
  return l;
}

}  // namespace detail

// Monte Carlo estimation of (t_bar, omega_bar) with the optimal measurement at the reference point.
inline EstimationRun simulate(const ReturnedSignal& s, const SimulationOptions& opt) {
  if (opt.shots < 1) throw InputError("simulate: shots must be positive");
  if (opt.batches < 2) throw InputError("simulate: at least two batches are needed for a covariance");
  EstimationRun run;
  run.kappa = s.kappa;
  run.shots = opt.shots;
  run.batches = opt.batches;
  run.seed = opt.seed;
  run.truth = {s.t_bar, s.omega_bar};
  run.reference = {s.t_bar + opt.offset[0], s.omega_bar + opt.offset[1]};

  const ReturnedSignal ref = shifted(s, run.reference[0], run.reference[1]);
  const OptimalMeasurement om = optimal_radar_measurement(ref);
  const RadarLikelihood lik(s, run.reference[0], run.reference[1], om.measurement.U);
  const FisherBundle fq = radar_fisher(s);

  const auto truth = lik.at(run.truth[0], run.truth[1]);
  RMatrix fc = RMatrix::Zero(2, 2);
  for (Eigen::Index m = 0; m < 4; ++m)
    if (truth.p(m) >= kProbFloor) fc += truth.dp.row(m).transpose() * truth.dp.row(m) / truth.p(m);
  const double nu = static_cast<double>(opt.shots);
  run.crb = (nu * fc).inverse();
  run.predicted_product = uncertainty_product(fc);
  const RMatrix metric = fq.F_Q;
  const std::array<double, 2> crb_std{std::sqrt(run.crb(0, 0)), std::sqrt(run.crb(1, 1))};

  for (int batch = 0; batch < opt.batches; ++batch) {
    std::seed_seq seq{static_cast<std::uint64_t>(opt.seed), static_cast<std::uint64_t>(batch)};
    std::mt19937_64 rng(seq);
    std::array<long long, 4> n{};
    long long left = opt.shots;
    double mass = 1.0;
    for (std::size_t m = 0; m < 3; ++m) {
      const double q = mass > 0 ? std::clamp(truth.p(static_cast<Eigen::Index>(m)) / mass, 0.0, 1.0) : 0.0;
      std::binomial_distribution<long long> draw(left, q);
      n[m] = left > 0 ? draw(rng) : 0;
      left -= n[m];
      mass -= truth.p(static_cast<Eigen::Index>(m));
    }
    n[3] = left;

    RVector theta(2);
    theta << run.truth[0] + 0.5 * crb_std[0] * ((batch % 2) ? -1.0 : 1.0),
        run.truth[1] + 0.5 * crb_std[1] * (((batch / 2) % 2) ? -1.0 : 1.0);
    bool done = false;
    for (int it = 0; it < opt.max_iterations && !done; ++it) {
      const auto v = lik.at(theta(0), theta(1));
      RVector score = RVector::Zero(2);
      RMatrix info = RMatrix::Zero(2, 2);
      for (Eigen::Index m = 0; m < 4; ++m) {
        if (v.p(m) < kProbFloor) continue;
        score += static_cast<double>(n[static_cast<std::size_t>(m)]) * v.dp.row(m).transpose() / v.p(m);
        info += nu * v.dp.row(m).transpose() * v.dp.row(m) / v.p(m);
      }
      const RVector step = info.ldlt().solve(score);
      const double l0 = detail::log_likelihood(v.p, n);
      double alpha = 1.0;
      bool improved = false;
      for (int h = 0; h < 60; ++h, alpha *= 0.5) {
        const RVector trial = theta + alpha * step;
        if (detail::log_likelihood(lik.at(trial(0), trial(1)).p, n) >= l0) {
          improved = true;
          break;
        }
      }
      const double size = std::sqrt(std::max(0.0, (alpha * step).dot(metric * (alpha * step))));
      if (!improved) {
        done = std::sqrt(std::max(0.0, step.dot(metric * step))) < 1e-8;
        break;
      }
      theta += alpha * step;
      done = size < 1e-10;
    }
    run.outcomes.push_back(n);
    run.estimates.push_back({theta(0), theta(1)});
    run.converged.push_back(done);
    if (!done) ++run.excluded;
  }

  RVector mean = RVector::Zero(2);
  int used = 0;
  for (std::size_t b = 0; b < run.estimates.size(); ++b)
    if (run.converged[b]) {
      mean += RVector::Map(run.estimates[b].data(), 2);
      ++used;
    }
  if (used < 2) throw NumericalError("simulate: fewer than two batches converged");
  mean /= used;
  run.empirical_cov = RMatrix::Zero(2, 2);
  for (std::size_t b = 0; b < run.estimates.size(); ++b)
    if (run.converged[b]) {
      const RVector d = RVector::Map(run.estimates[b].data(), 2) - mean;
      run.empirical_cov += d * d.transpose();
    }
  run.empirical_cov /= static_cast<double>(used - 1);
  run.empirical_product = nu * std::sqrt(run.empirical_cov(0, 0) * run.empirical_cov(1, 1));
  return run;
}

}  // namespace qmetro
