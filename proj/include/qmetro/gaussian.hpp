#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "qmetro/linalg.hpp"

namespace qmetro {

// Polynomial in up to two real variables with complex coefficients.
class Poly {
 public:
  using Key = std::array<int, 2>;

  Poly() = default;
  static Poly constant(cplx c) {
    Poly p;
    p.add({0, 0}, c);
    return p;
  }
  static Poly variable(int i) {
    Poly p;
    p.add(i == 0 ? Key{1, 0} : Key{0, 1}, 1.0);
    return p;
  }
  // a * z_i + b
  static Poly affine(int i, double a, double b) { return variable(i) * cplx(a) + constant(b); }

  const std::map<Key, cplx>& terms() const { return terms_; }

  void add(Key k, cplx c) {
    if (c != cplx(0.0)) terms_[k] += c;
  }

  friend Poly operator+(Poly a, const Poly& b) {
    for (const auto& [k, c] : b.terms_) a.add(k, c);
    return a;
  }
  friend Poly operator-(Poly a, const Poly& b) {
    for (const auto& [k, c] : b.terms_) a.add(k, -c);
    return a;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) out.add({ka[0] + kb[0], ka[1] + kb[1]}, ca * cb);
    return out;
  }
  friend Poly operator*(Poly a, cplx s) {
    for (auto& [k, c] : a.terms_) c *= s;
    return a;
  }
  friend Poly operator*(cplx s, Poly a) { return a * s; }

 private:
  std::map<Key, cplx> terms_;
};

// exp(-z^T Q z + b^T z + c) over R^d with Q real symmetric positive definite, d in {1, 2}.
struct Gaussian {
  RMatrix Q;
  CVector b;
  cplx c;

  Eigen::Index dim() const { return Q.rows(); }

  // N exp(-(z - z0)^T Q (z - z0) - i omega^T (z - z0)).
  static Gaussian pulse(const RMatrix& Q, const RVector& z0, const RVector& omega, double norm) {
    const cplx I(0.0, 1.0);
    Gaussian g;
    g.Q = Q;
    g.b = (2.0 * Q * z0).cast<cplx>() - I * omega.cast<cplx>();
    g.c = std::log(norm) - z0.dot(Q * z0) + I * omega.dot(z0);
    return g;
  }

  Gaussian conjugate() const { return {Q, b.conjugate(), std::conj(c)}; }

  friend Gaussian operator*(const Gaussian& x, const Gaussian& y) { return {x.Q + y.Q, x.b + y.b, x.c + y.c}; }
};

// Integral of p(z) g(z) over R^d: the Gaussian mass times the moment E[p(Z)] for Z with mean
// A^{-1} b / 2 and covariance A^{-1} / 2, continued analytically to complex means.
inline cplx integrate(const Poly& p, const Gaussian& g) {
  const Eigen::Index d = g.dim();
  const RMatrix Ainv = g.Q.inverse();
  const CVector mu = 0.5 * Ainv.cast<cplx>() * g.b;
  const RMatrix S = 0.5 * Ainv;
  const cplx mass = std::exp(g.c + 0.25 * (g.b.transpose() * Ainv.cast<cplx>() * g.b)(0, 0)) *
                    std::pow(std::numbers::pi, 0.5 * static_cast<double>(d)) / std::sqrt(g.Q.determinant());

  int max0 = 0, max1 = 0;
  for (const auto& [k, c] : p.terms()) {
    max0 = std::max(max0, k[0]);
    max1 = std::max(max1, k[1]);
  }
  if (d == 1 && max1 > 0) throw InputError("integrate: polynomial uses a second variable in one dimension");
  // m(a, b) = E[Z0^a Z1^b] by Isserlis-type recursion.
  std::vector<std::vector<cplx>> m(static_cast<std::size_t>(max0 + 1),
                                   std::vector<cplx>(static_cast<std::size_t>(max1 + 1), cplx(0.0)));
  const cplx mu0 = mu(0), mu1 = d > 1 ? mu(1) : cplx(0.0);
  const double s00 = S(0, 0), s01 = d > 1 ? S(0, 1) : 0.0, s11 = d > 1 ? S(1, 1) : 0.0;
  auto at = [&](int a, int b) -> cplx {
    return a < 0 || b < 0 ? cplx(0.0) : m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  };
  for (int b = 0; b <= max1; ++b)
    for (int a = 0; a <= max0; ++a) {
      cplx v;
      if (a == 0 && b == 0)
        v = 1.0;
      else if (a > 0)
        v = mu0 * at(a - 1, b) + s00 * double(a - 1) * at(a - 2, b) + s01 * double(b) * at(a - 1, b - 1);
      else
        v = mu1 * at(0, b - 1) + s11 * double(b - 1) * at(0, b - 2);
      m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = v;
    }

  cplx total = 0.0;
  for (const auto& [k, c] : p.terms()) total += c * at(k[0], k[1]);
  return mass * total;
}

}  // namespace qmetro
