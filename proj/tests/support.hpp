#pragma once

// Shared helpers for the unit tests: random states and small dense
// reference constructions that do not go through the library code paths.

#include <Eigen/Dense>
#include <random>

#include "stagen/hilbert.hpp"

namespace stagen::test {

inline cvec random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  cvec v(n);
  for (auto& z : v) z = cplx(g(rng), g(rng));
  return v;
}

inline StateVector random_state(const LayoutPtr& L, std::mt19937_64& rng) {
  return StateVector(L, random_vector(L->dimension(), rng));
}

/// Random full-rank density matrix G G^dagger / Tr.
inline DensityMatrix random_density(const LayoutPtr& L, std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(L->dimension());
  DenseMatrix G(d, d);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) G(i, j) = cplx(g(rng), g(rng));
  DenseMatrix rho = G * G.adjoint();
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(L, rho);
}

/// Haar-ish random unitary from a QR factorization.
inline Eigen::MatrixXcd random_unitary(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd G(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) G(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(G);
  return qr.householderQ();
}

/// Coherent amplitudes by the recurrence c_{k} = c_{k-1} alpha / sqrt(k),
/// not renormalized.
inline cvec coherent_reference(std::size_t dim, cplx alpha) {
  cvec c(dim);
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t k = 1; k < dim; ++k) c[k] = c[k - 1] * alpha / std::sqrt(static_cast<double>(k));
  return c;
}

inline cplx inner(const cvec& a, const cvec& b) {
  cplx s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace stagen::test
