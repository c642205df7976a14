#pragma once

// Coupling pulses g(t) and the classical auxiliary trajectory g_c(t) that
// solves  g_c'' + w^2 (g_c + g) = 0,  g_c(0) = g_c'(0) = 0.

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "stagen/types.hpp"

namespace stagen {

/// g(t) = sum_k c_k sin(pi k t / t_f), k = 1..K. Coefficients in rad/s.
class FourierPulse {
 public:
  FourierPulse(double t_f, std::vector<double> coefficients);

  static FourierPulse zero(double t_f, std::size_t K) { return FourierPulse(t_f, std::vector<double>(K, 0.0)); }

  double t_f() const { return t_f_; }
  std::size_t K() const { return c_.size(); }
  std::span<const double> coefficients() const { return c_; }
  /// Angular frequency pi k / t_f of term k (1-based).
  double term_frequency(std::size_t k) const;

  /// Throws std::out_of_range outside [0, t_f].
  double eval(double t) const;
  double derivative(double t) const;

  bool operator==(const FourierPulse&) const = default;

 private:
  double t_f_;
  std::vector<double> c_;
};

double eval_pulse(const FourierPulse& p, double t);

/// Constant coupling switched on for [0, duration].
struct ConstantPulse {
  double g = 0.0;
  double duration = 0.0;
};

/// A pulse the propagators and functionals accept: a designed sine series or
/// a constant rectangle.
class CouplingProfile {
 public:
  CouplingProfile(FourierPulse p);  // NOLINT(google-explicit-constructor)
  CouplingProfile(ConstantPulse p);  // NOLINT(google-explicit-constructor)

  double t_f() const;
  double operator()(double t) const;
  /// Upper bound on |g| over the window (exact for constant, sum |c_k| otherwise).
  double bound() const;
  /// Closed-form  int_0^t g(s) e^{i nu s} ds.
  cplx phase_integral(double nu, double t) const;

  const FourierPulse* fourier() const { return std::get_if<FourierPulse>(&v_); }
  const ConstantPulse* constant() const { return std::get_if<ConstantPulse>(&v_); }

 private:
  std::variant<FourierPulse, ConstantPulse> v_;
};

/// int_0^t e^{i nu s} ds written as t e^{i nu t/2} sinc(nu t/2), finite at nu = 0.
cplx exp_integral(double nu, double t);

struct AuxiliaryPoint {
  double g_c = 0.0;
  double g_c_dot = 0.0;
  double g_c_ddot = 0.0;
};

struct AuxiliaryTrajectory {
  std::vector<double> t;
  std::vector<double> g_c;
  std::vector<double> g_c_dot;
  std::vector<double> g_c_ddot;
};

struct PhaseTrajectory {
  std::vector<double> t;
  std::vector<double> beta;
  std::size_t intervals = 0;  // Simpson intervals after refinement
};

/// Duhamel solution evaluated through the per-term closed forms.
AuxiliaryPoint auxiliary_at(const CouplingProfile& p, double omega, double t);
AuxiliaryTrajectory auxiliary_from_pulse(const CouplingProfile& p, double omega, std::size_t samples = 2001);

/// beta(t) = -int_0^t [g_c'^2/w^3 - g_c^2/w - 2 g_c g / w] ds.
PhaseTrajectory lagrangian_phase(const CouplingProfile& p, double omega, std::size_t samples = 2001,
                                 double rel_tol = 1e-9);

/// Uniform sample times 0..t_f inclusive.
std::vector<double> sample_times(double t_f, std::size_t samples);

}  // namespace stagen
