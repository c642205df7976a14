#pragma once

// Pulse design: choose sine-series coefficients so that at t_f
//   photonic: alpha(t_f) = d_max
//   qubit:    A(t_f) = 0 and Re B(t_f) = theta.

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "stagen/pulses.hpp"
#include "stagen/types.hpp"

namespace stagen {

enum class DesignKind { Photonic, Qubit };

struct OptimizerSettings {
  double initial_step = 1.0;         // first trial step along -grad (scaled units)
  std::size_t max_iterations = 5000;
  double objective_tolerance = 1e-12;
  double relative_decrease = 1e-12;  // stop when a step improves J by less than this, relatively
  double armijo = 1e-4;
  double shrink = 0.5;
  std::size_t max_backtracks = 80;
};

enum class QubitInit { Spectral, Given };
enum class PhotonicSolver { MinimumNorm, GradientDescent };

struct DesignProblem {
  DesignKind kind = DesignKind::Photonic;
  double omega = 0.0;  // rad/s
  double t_f = 0.0;    // s
  std::size_t K = 0;   // 0 selects default_term_count
  double d_max = 0.0;
  double theta_target = kPi / 4.0;
  double weight_A = 1e4;
  double weight_B = 1e4;
  double residual_tolerance = 1e-6;
  OptimizerSettings optimizer;
  PhotonicSolver photonic_solver = PhotonicSolver::MinimumNorm;
  QubitInit qubit_init = QubitInit::Spectral;
  std::vector<double> initial_coefficients;  // rad/s, used with QubitInit::Given
};

struct DesignResult {
  FourierPulse pulse;
  std::vector<double> residuals;  // photonic: |Re a - d|, |Im a|; qubit: |Re A|, |Im A|, |Re B - theta|
  double objective = 0.0;
  std::size_t iterations = 0;
  double peak_g = 0.0;  // rad/s, sampled
  bool converged = false;
  std::string method;
  cplx alpha_tf{};
  cplx A_tf{};
  cplx B_tf{};
  std::vector<double> objective_trace;
};

/// Photonic: ceil(w t_f / pi) + 16, so the sine basis reaches past the mode
/// resonance. Qubit: 6.
std::size_t default_term_count(DesignKind kind, double omega, double t_f);

DesignResult design_photonic(const DesignProblem& problem);
DesignResult design_qubit(const DesignProblem& problem);
DesignResult design(const DesignProblem& problem);

/// Objective value; writes the gradient when `grad` is non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct DescentResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<double> trace;  // objective after each accepted step, starting with J(x0)
};

/// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
/// The accepted objective sequence is non-increasing.
DescentResult gradient_descent(const ObjectiveFn& f, Eigen::VectorXd x0, const OptimizerSettings& settings);

/// Largest |g| over `samples` uniform points.
double sampled_peak(const FourierPulse& p, std::size_t samples = 8001);

}  // namespace stagen
