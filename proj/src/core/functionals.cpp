#include "stagen/functionals.hpp"

#include <cmath>
#include <stdexcept>

namespace stagen {

namespace {

void require_omega(double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
}

}  // namespace

cplx displacement(const CouplingProfile& p, double omega, double t) {
  require_omega(omega);
  return -kI * p.phase_integral(omega, t);
}

cplx gate_A(const CouplingProfile& p, double omega, double t) {
  require_omega(omega);
  return p.phase_integral(-omega, t);
}

cplx displacement_by_quadrature(const CouplingProfile& p, double omega, double t, const QuadratureSettings& qs) {
  require_omega(omega);
  if (t == 0.0) return 0.0;
  return -kI * simpson<cplx>([&](double s) { return p(s) * std::polar(1.0, omega * s); }, 0.0, t, cplx(0.0), qs);
}

cplx gate_A_by_quadrature(const CouplingProfile& p, double omega, double t, const QuadratureSettings& qs) {
  require_omega(omega);
  if (t == 0.0) return 0.0;
  return simpson<cplx>([&](double s) { return p(s) * std::polar(1.0, -omega * s); }, 0.0, t, cplx(0.0), qs);
}

namespace {

// dB/ds = i A(s) dA*/ds = i A(s) g(s) e^{iws}
cplx b_integrand(const CouplingProfile& p, double omega, double s) {
  return kI * p.phase_integral(-omega, s) * p(s) * std::polar(1.0, omega * s);
}

}  // namespace

cplx gate_B(const CouplingProfile& p, double omega, double t, const QuadratureSettings& qs) {
  require_omega(omega);
  if (t == 0.0) return 0.0;
  return simpson<cplx>([&](double s) { return b_integrand(p, omega, s); }, 0.0, t, cplx(0.0), qs);
}

GateTrajectories gate_trajectories(const CouplingProfile& p, double omega, std::size_t samples,
                                   const QuadratureSettings& qs) {
  require_omega(omega);
  auto r = cumulative_simpson<cplx>([&](double s) { return b_integrand(p, omega, s); }, 0.0, p.t_f(), samples,
                                    cplx(0.0), qs);
  if (!r.converged) throw NumericalError("gate B quadrature did not converge");
  GateTrajectories g;
  g.t = std::move(r.t);
  g.B = std::move(r.values);
  g.alpha.resize(samples);
  g.A.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    g.alpha[i] = displacement(p, omega, g.t[i]);
    g.A[i] = gate_A(p, omega, g.t[i]);
  }
  return g;
}

ConstantForms constant_forms(const ConstantCouplingParams& params, double t) {
  if (!(params.omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  const double g = params.g, w = params.omega;
  const cplx A = (kI * g / w) * (std::polar(1.0, -w * t) - 1.0);
  const cplx B = (g * g / w) * (-kI * (std::polar(1.0, w * t) - 1.0) / w - t);
  return {A, B};
}

cplx sta_amplitude(const AuxiliaryPoint& aux, double omega) {
  require_omega(omega);
  return {aux.g_c / omega, aux.g_c_dot / (omega * omega)};
}

cvec sta_amplitude(const AuxiliaryTrajectory& aux, double omega) {
  cvec z(aux.t.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = sta_amplitude(AuxiliaryPoint{aux.g_c[i], aux.g_c_dot[i], 0.0}, omega);
  return z;
}

namespace {

// int_0^t sin(p_k s) e^{i nu s} ds for k = 1..K
Eigen::RowVectorXcd sine_row(double t_f, std::size_t K, double nu, double t) {
  Eigen::RowVectorXcd row(static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k) {
    const double p = kPi * static_cast<double>(k + 1) / t_f;
    row(static_cast<Eigen::Index>(k)) = (exp_integral(nu + p, t) - exp_integral(nu - p, t)) / (2.0 * kI);
  }
  return row;
}

}  // namespace

Eigen::RowVectorXcd displacement_row(double t_f, std::size_t K, double omega, double t) {
  require_omega(omega);
  return -kI * sine_row(t_f, K, omega, t);
}

Eigen::RowVectorXcd gate_A_row(double t_f, std::size_t K, double omega, double t) {
  require_omega(omega);
  return sine_row(t_f, K, -omega, t);
}

Eigen::MatrixXcd gate_B_matrix(double t_f, std::size_t K, double omega, double t, const QuadratureSettings& qs) {
  require_omega(omega);
  const auto k = static_cast<Eigen::Index>(K);
  if (t == 0.0) return Eigen::MatrixXcd::Zero(k, k);
  // Q_jl = i int a_j(s) sin(p_l s) e^{iws} ds,  a_j(s) = int_0^s sin(p_j u) e^{-iwu} du
  auto integrand = [&](double s) -> Eigen::MatrixXcd {
    const Eigen::RowVectorXcd a = sine_row(t_f, K, -omega, s);
    Eigen::RowVectorXd sn(k);
    for (Eigen::Index l = 0; l < k; ++l) sn(l) = std::sin(kPi * static_cast<double>(l + 1) * s / t_f);
    return (kI * std::polar(1.0, omega * s)) * (a.transpose() * sn.cast<cplx>());
  };
  auto r = cumulative_simpson<Eigen::MatrixXcd>(integrand, 0.0, t, 2, Eigen::MatrixXcd::Zero(k, k), qs);
  if (!r.converged) throw NumericalError("gate B matrix quadrature did not converge");
  return r.values.back();
}

}  // namespace stagen
