#include "stagen/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stagen {

std::string to_string(FidelityMethod m) {
  switch (m) {
    case FidelityMethod::PurePure: return "pure-pure";
    case FidelityMethod::PureMixed: return "pure-mixed";
    case FidelityMethod::MixedMixed: return "mixed-mixed";
  }
  return "unknown";
}

namespace {

void require_compatible(const TensorLayout& a, const TensorLayout& b) {
  if (a.dimension() != b.dimension() || a.num_factors() != b.num_factors()) {
    throw std::invalid_argument("fidelity arguments live on different layouts");
  }
  for (std::size_t f = 0; f < a.num_factors(); ++f) {
    if (a.factor_dim(f) != b.factor_dim(f)) throw std::invalid_argument("fidelity arguments have different factor dims");
  }
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Hermitian square root with eigenvalues in [-1e-8, 0) clamped to zero.
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-8) throw NumericalError("density matrix is not positive semidefinite");
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

FidelityReport fidelity(const StateVector& a, const StateVector& b) {
  require_compatible(a.layout(), b.layout());
  cplx ov(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) ov += std::conj(a[i]) * b[i];
  return {clamp01(std::norm(ov)), FidelityMethod::PurePure, true};
}

FidelityReport fidelity(const StateVector& a, const DensityMatrix& b) {
  require_compatible(a.layout(), b.layout());
  const auto d = static_cast<Eigen::Index>(a.size());
  Eigen::Map<const Eigen::VectorXcd> v(a.amplitudes().data(), d);
  const cplx f = v.dot(b.entries() * v);
  return {clamp01(f.real()), FidelityMethod::PureMixed, true};
}

FidelityReport fidelity(const DensityMatrix& a, const StateVector& b) { return fidelity(b, a); }

FidelityReport fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  require_compatible(a.layout(), b.layout());
  const Eigen::MatrixXcd sa = psd_sqrt(a.entries());
  Eigen::MatrixXcd m = sa * b.entries() * sa;
  m = 0.5 * (m + m.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()(i);
    if (l < -1e-8) throw NumericalError("fidelity product is not positive semidefinite");
    s += std::sqrt(std::max(0.0, l));
  }
  return {clamp01(s * s), FidelityMethod::MixedMixed, true};
}

std::size_t label_index(const std::string& label, std::size_t num_qubits) {
  if (label.size() != num_qubits) throw std::invalid_argument("label '" + label + "' has the wrong length");
  std::size_t idx = 0;
  for (char c : label) {
    if (c != 'g' && c != 'e') throw std::invalid_argument("label '" + label + "' may only use g and e");
    idx = 2 * idx + (c == 'e' ? 1 : 0);
  }
  return idx;
}

std::vector<std::vector<double>> populations(const TrajectoryRecord& record, const std::vector<std::string>& labels,
                                             std::size_t num_qubits) {
  if (record.qubit_populations.size() != record.times.size()) {
    throw std::invalid_argument("trajectory was recorded without populations");
  }
  std::vector<std::vector<double>> out;
  for (const auto& l : labels) {
    const std::size_t k = label_index(l, num_qubits);
    std::vector<double> series;
    series.reserve(record.times.size());
    for (const auto& p : record.qubit_populations) series.push_back(p.at(k));
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<double> populations(const StateVector& psi, const std::vector<std::string>& labels) {
  const TensorLayout& L = psi.layout();
  const std::size_t block = L.mode_block();
  std::vector<double> out;
  for (const auto& l : labels) {
    const std::size_t q = label_index(l, L.num_qubits());
    double s = 0.0;
    for (std::size_t r = 0; r < block; ++r) s += std::norm(psi[q * block + r]);
    out.push_back(s);
  }
  return out;
}

double WignerGrid::integral() const {
  if (x.size() < 2 || p.size() < 2) return 0.0;
  const double dx = x[1] - x[0], dp = p[1] - p[0];
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = (i == 0 || i + 1 == x.size()) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double wj = (j == 0 || j + 1 == p.size()) ? 0.5 : 1.0;
      s += wi * wj * at(i, j);
    }
  }
  return s * dx * dp;
}

double WignerGrid::min() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }

double wigner_at(const DenseMatrix& rho, cplx beta) {
  // Laguerre-type recursion for the matrix elements of the displaced parity
  // operator, built up row by row.
  const Eigen::Index d = rho.rows();
  std::vector<cplx> w(static_cast<std::size_t>(d));
  w[0] = std::exp(-2.0 * std::norm(beta)) / kPi;
  double W = rho(0, 0).real() * w[0].real();
  for (Eigen::Index n = 1; n < d; ++n) {
    w[n] = 2.0 * beta * w[n - 1] / std::sqrt(static_cast<double>(n));
    W += 2.0 * (rho(0, n) * w[n]).real();
  }
  for (Eigen::Index m = 1; m < d; ++m) {
    const double sm = std::sqrt(static_cast<double>(m));
    cplx temp = w[m];
    w[m] = (2.0 * std::conj(beta) * temp - sm * w[m - 1]) / sm;
    W += (rho(m, m) * w[m]).real();
    for (Eigen::Index n = m + 1; n < d; ++n) {
      const cplx temp2 = (2.0 * beta * w[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
      temp = w[n];
      w[n] = temp2;
      W += 2.0 * (rho(m, n) * w[n]).real();
    }
  }
  return 2.0 * W;
}

WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec) {
  const TensorLayout& L = rho.layout();
  if (L.num_qubits() != 0 || L.num_modes() != 1) throw std::invalid_argument("wigner needs a single-mode density matrix");
  if (spec.nx < 2 || spec.np < 2) throw std::invalid_argument("wigner grid needs at least 2 points per axis");
  WignerGrid g;
  g.x.resize(spec.nx);
  g.p.resize(spec.np);
  for (std::size_t i = 0; i < spec.nx; ++i) g.x[i] = spec.x_min + (spec.x_max - spec.x_min) * static_cast<double>(i) / static_cast<double>(spec.nx - 1);
  for (std::size_t j = 0; j < spec.np; ++j) g.p[j] = spec.p_min + (spec.p_max - spec.p_min) * static_cast<double>(j) / static_cast<double>(spec.np - 1);
  g.values.resize(spec.nx * spec.np);
  const DenseMatrix& r = rho.entries();
  for (std::size_t i = 0; i < spec.nx; ++i) {
    for (std::size_t j = 0; j < spec.np; ++j) g.values[i * spec.np + j] = wigner_at(r, cplx(g.x[i], g.p[j]));
  }
  const Eigen::Index d = r.rows();
  const double edge = r(d - 1, d - 1).real() + r(d - 2, d - 2).real();
  if (edge > 1e-6) g.warning = "state population near the truncation edge is " + std::to_string(edge);
  return g;
}

Marginals wigner_marginals(const WignerGrid& g) {
  Marginals m;
  m.x = g.x;
  m.p = g.p;
  m.px.assign(g.x.size(), 0.0);
  m.pp.assign(g.p.size(), 0.0);
  const double dx = g.x.size() > 1 ? g.x[1] - g.x[0] : 0.0;
  const double dp = g.p.size() > 1 ? g.p[1] - g.p[0] : 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    for (std::size_t j = 0; j < g.p.size(); ++j) {
      const double wi = (i == 0 || i + 1 == g.x.size()) ? 0.5 : 1.0;
      const double wj = (j == 0 || j + 1 == g.p.size()) ? 0.5 : 1.0;
      m.px[i] += wj * g.at(i, j) * dp;
      m.pp[j] += wi * g.at(i, j) * dx;
    }
  }
  return m;
}

}  // namespace stagen
