#include "stagen/pulses.hpp"

#include <cmath>
#include <stdexcept>

#include "stagen/quadrature.hpp"

namespace stagen {

namespace {

// Tolerance for t slightly outside the window from accumulated rounding.
constexpr double kEdgeSlack = 1e-12;

double clamp_time(double t, double t_f) {
  if (!(t >= -kEdgeSlack * t_f && t <= t_f * (1.0 + kEdgeSlack))) {
    throw std::out_of_range("time outside the pulse window");
  }
  return std::min(std::max(t, 0.0), t_f);
}

}  // namespace

FourierPulse::FourierPulse(double t_f, std::vector<double> coefficients) : t_f_(t_f), c_(std::move(coefficients)) {
  if (!(t_f_ > 0.0) || !std::isfinite(t_f_)) throw std::invalid_argument("pulse duration must be positive");
  if (c_.empty()) throw std::invalid_argument("pulse needs at least one coefficient");
  for (double c : c_) {
    if (!std::isfinite(c)) throw std::invalid_argument("pulse coefficient is not finite");
  }
}

double FourierPulse::term_frequency(std::size_t k) const { return kPi * static_cast<double>(k) / t_f_; }

double FourierPulse::eval(double t) const {
  t = clamp_time(t, t_f_);
  if (t == 0.0 || t == t_f_) return 0.0;
  double g = 0.0;
  for (std::size_t k = 0; k < c_.size(); ++k) g += c_[k] * std::sin(term_frequency(k + 1) * t);
  return g;
}

double FourierPulse::derivative(double t) const {
  t = clamp_time(t, t_f_);
  double d = 0.0;
  for (std::size_t k = 0; k < c_.size(); ++k) {
    const double p = term_frequency(k + 1);
    d += c_[k] * p * std::cos(p * t);
  }
  return d;
}

double eval_pulse(const FourierPulse& p, double t) { return p.eval(t); }

CouplingProfile::CouplingProfile(FourierPulse p) : v_(std::move(p)) {}

CouplingProfile::CouplingProfile(ConstantPulse p) : v_(p) {
  if (!(p.duration > 0.0)) throw std::invalid_argument("constant pulse duration must be positive");
  if (!std::isfinite(p.g)) throw std::invalid_argument("constant pulse amplitude is not finite");
}

double CouplingProfile::t_f() const {
  if (auto f = fourier()) return f->t_f();
  return constant()->duration;
}

double CouplingProfile::operator()(double t) const {
  if (auto f = fourier()) return f->eval(t);
  clamp_time(t, constant()->duration);
  return constant()->g;
}

double CouplingProfile::bound() const {
  if (auto f = fourier()) {
    double s = 0.0;
    for (double c : f->coefficients()) s += std::abs(c);
    return s;
  }
  return std::abs(constant()->g);
}

cplx exp_integral(double nu, double t) {
  const double x = 0.5 * nu * t;
  const double sinc = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 + x * x * x * x / 120.0 : std::sin(x) / x;
  return t * sinc * std::polar(1.0, x);
}

cplx CouplingProfile::phase_integral(double nu, double t) const {
  if (auto c = constant()) return c->g * exp_integral(nu, clamp_time(t, c->duration));
  const FourierPulse& f = *fourier();
  t = clamp_time(t, f.t_f());
  // sin(p s) = (e^{ips} - e^{-ips}) / 2i
  cplx acc(0.0);
  const auto c = f.coefficients();
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] == 0.0) continue;
    const double p = f.term_frequency(k + 1);
    acc += c[k] * (exp_integral(nu + p, t) - exp_integral(nu - p, t));
  }
  return acc / (2.0 * kI);
}

AuxiliaryPoint auxiliary_at(const CouplingProfile& p, double omega, double t) {
  if (!(omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
  // g_c(t) = -w int g(s) sin(w(t-s)) ds = -w Im(e^{iwt} A(t)),  A(t) = int g e^{-iws}
  const cplx z = std::polar(1.0, omega * t) * p.phase_integral(-omega, t);
  AuxiliaryPoint a;
  a.g_c = -omega * z.imag();
  a.g_c_dot = -omega * omega * z.real();
  a.g_c_ddot = -omega * omega * (p(t) + a.g_c);
  return a;
}

std::vector<double> sample_times(double t_f, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  std::vector<double> t(samples);
  for (std::size_t i = 0; i < samples; ++i) t[i] = t_f * static_cast<double>(i) / static_cast<double>(samples - 1);
  t.back() = t_f;
  return t;
}

AuxiliaryTrajectory auxiliary_from_pulse(const CouplingProfile& p, double omega, std::size_t samples) {
  AuxiliaryTrajectory tr;
  tr.t = sample_times(p.t_f(), samples);
  tr.g_c.resize(samples);
  tr.g_c_dot.resize(samples);
  tr.g_c_ddot.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const AuxiliaryPoint a = auxiliary_at(p, omega, tr.t[i]);
    tr.g_c[i] = a.g_c;
    tr.g_c_dot[i] = a.g_c_dot;
    tr.g_c_ddot[i] = a.g_c_ddot;
  }
  return tr;
}

PhaseTrajectory lagrangian_phase(const CouplingProfile& p, double omega, std::size_t samples, double rel_tol) {
  if (!(omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
  const double w3 = omega * omega * omega;
  auto lagrangian = [&](double s) {
    const AuxiliaryPoint a = auxiliary_at(p, omega, s);
    return a.g_c_dot * a.g_c_dot / w3 - a.g_c * a.g_c / omega - 2.0 * a.g_c * p(s) / omega;
  };
  QuadratureSettings qs;
  qs.rel_tol = rel_tol;
  auto r = cumulative_simpson<double>(lagrangian, 0.0, p.t_f(), samples, 0.0, qs);
  if (!r.converged) throw NumericalError("Lagrangian phase quadrature did not converge");
  PhaseTrajectory out;
  out.t = std::move(r.t);
  out.beta.resize(r.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) out.beta[i] = -r.values[i];
  out.intervals = r.intervals;
  return out;
}

}  // namespace stagen
