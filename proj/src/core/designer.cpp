#include "stagen/designer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stagen/functionals.hpp"

namespace stagen {

namespace {

void validate(const DesignProblem& p, DesignKind expected) {
  if (p.kind != expected) throw std::invalid_argument("design problem has the wrong kind");
  if (!(p.omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
  if (!(p.t_f > 0.0)) throw std::invalid_argument("t_f must be positive");
}

std::size_t term_count(const DesignProblem& p) {
  const std::size_t K = p.K ? p.K : default_term_count(p.kind, p.omega, p.t_f);
  const std::size_t need = p.kind == DesignKind::Photonic ? 2 : 3;
  if (K < need) throw std::invalid_argument("K is smaller than the number of scalar constraints");
  return K;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::size_t default_term_count(DesignKind kind, double omega, double t_f) {
  if (kind == DesignKind::Qubit) return 6;
  return static_cast<std::size_t>(std::ceil(omega * t_f / kPi)) + 16;
}

double sampled_peak(const FourierPulse& p, std::size_t samples) {
  double peak = 0.0;
  for (double t : sample_times(p.t_f(), samples)) peak = std::max(peak, std::abs(p.eval(t)));
  return peak;
}

DescentResult gradient_descent(const ObjectiveFn& f, Eigen::VectorXd x0, const OptimizerSettings& s) {
  DescentResult r;
  r.x = std::move(x0);
  Eigen::VectorXd g(r.x.size());
  r.value = f(r.x, &g);
  r.trace.push_back(r.value);
  if (!std::isfinite(r.value)) {
    r.stop_reason = "objective not finite at the initial point";
    return r;
  }
  double step = s.initial_step;
  Eigen::VectorXd x_prev, g_prev;
  Eigen::VectorXd trial_grad(r.x.size());
  for (std::size_t it = 0; it < s.max_iterations; ++it) {
    if (r.value <= s.objective_tolerance) {
      r.converged = true;
      r.stop_reason = "objective below tolerance";
      return r;
    }
    const double gg = g.squaredNorm();
    if (gg == 0.0) {
      r.stop_reason = "stationary point";
      return r;
    }
    if (it > 0) {
      const Eigen::VectorXd sv = r.x - x_prev, yv = g - g_prev;
      const double sy = sv.dot(yv);
      if (sy > 0.0) step = sv.squaredNorm() / sy;
      else step *= 2.0;
    }
    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_value = 0.0;
    for (std::size_t b = 0; b <= s.max_backtracks; ++b) {
      trial = r.x - step * g;
      trial_value = f(trial, &trial_grad);
      if (std::isfinite(trial_value) && trial_value <= r.value - s.armijo * step * gg) {
        accepted = true;
        break;
      }
      step *= s.shrink;
    }
    if (!accepted) {
      r.stop_reason = "line search failed";
      return r;
    }
    const double decrease = r.value - trial_value;
    x_prev = r.x;
    g_prev = g;
    r.x = trial;
    g = trial_grad;
    r.value = trial_value;
    r.iterations = it + 1;
    r.trace.push_back(r.value);
    if (r.value <= s.objective_tolerance) {
      r.converged = true;
      r.stop_reason = "objective below tolerance";
      return r;
    }
    if (decrease <= s.relative_decrease * std::max(r.value, 1e-300)) {
      r.stop_reason = "relative decrease below tolerance";
      return r;
    }
  }
  r.stop_reason = "iteration limit";
  return r;
}

// Coefficients are optimized in the dimensionless variables x = c t_f, which
// keeps the objective curvature O(1) for nanosecond pulses.

DesignResult design_photonic(const DesignProblem& p) {
  validate(p, DesignKind::Photonic);
  const std::size_t K = term_count(p);
  const auto k = static_cast<Eigen::Index>(K);
  const Eigen::RowVectorXcd row = displacement_row(p.t_f, K, p.omega, p.t_f) / p.t_f;
  Eigen::MatrixXd R(2, k);
  R.row(0) = row.real();
  R.row(1) = row.imag();
  const Eigen::Vector2d b(p.d_max, 0.0);

  DesignResult res{FourierPulse::zero(p.t_f, K)};
  Eigen::VectorXd x;
  if (p.photonic_solver == PhotonicSolver::MinimumNorm) {
    const Eigen::Matrix2d G = R * R.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(G);
    const double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 1e-12 * lmax)) {
      throw NumericalError("photonic constraint matrix is singular for this (omega, t_f, K); reciprocal condition " +
                           std::to_string(lmax > 0 ? lmin / lmax : 0.0));
    }
    x = R.transpose() * G.ldlt().solve(b);
    res.method = "minimum-norm";
    res.iterations = 0;
  } else {
    auto obj = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
      const Eigen::Vector2d r = R * v - b;
      if (grad) *grad = 2.0 * R.transpose() * r;
      return r.squaredNorm();
    };
    DescentResult dr = gradient_descent(obj, Eigen::VectorXd::Zero(k), p.optimizer);
    x = dr.x;
    res.iterations = dr.iterations;
    res.objective_trace = std::move(dr.trace);
    res.method = "gradient-descent";
  }
  const Eigen::VectorXd c = x / p.t_f;
  res.pulse = FourierPulse(p.t_f, to_std(c));
  res.alpha_tf = displacement(res.pulse, p.omega, p.t_f);
  res.residuals = {std::abs(res.alpha_tf.real() - p.d_max), std::abs(res.alpha_tf.imag())};
  res.objective = std::norm(res.alpha_tf - p.d_max);
  res.peak_g = sampled_peak(res.pulse);
  res.converged = std::all_of(res.residuals.begin(), res.residuals.end(),
                              [&](double r) { return r < p.residual_tolerance; });
  if (res.objective_trace.empty()) res.objective_trace.push_back(res.objective);
  return res;
}

namespace {

// Minimum-norm point on {A(t_f) = 0, c^T S c = theta}: restrict S to the
// null space of the linear constraint and scale its extreme eigenvector.
bool spectral_start(const Eigen::MatrixXd& L, const Eigen::MatrixXd& S, double theta, Eigen::VectorXd& x) {
  const Eigen::Index k = S.rows();
  if (theta == 0.0) {
    x = Eigen::VectorXd::Zero(k);
    return true;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullV);
  const Eigen::Index rank = svd.rank();
  const Eigen::MatrixXd N = svd.matrixV().rightCols(k - rank);
  if (N.cols() == 0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N.transpose() * S * N);
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) * theta <= 0.0) continue;
    if (best < 0 || std::abs(ev(i)) > std::abs(ev(best))) best = i;
  }
  if (best < 0) return false;
  x = N * es.eigenvectors().col(best) * std::sqrt(theta / ev(best));
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x(imax) < 0.0) x = -x;
  return true;
}

}  // namespace

DesignResult design_qubit(const DesignProblem& p) {
  validate(p, DesignKind::Qubit);
  const std::size_t K = term_count(p);
  const auto k = static_cast<Eigen::Index>(K);
  const Eigen::RowVectorXcd row = gate_A_row(p.t_f, K, p.omega, p.t_f) / p.t_f;
  Eigen::MatrixXd L(2, k);
  L.row(0) = row.real();
  L.row(1) = row.imag();
  const Eigen::MatrixXcd Q = gate_B_matrix(p.t_f, K, p.omega, p.t_f) / (p.t_f * p.t_f);
  const Eigen::MatrixXd S = 0.5 * (Q.real() + Q.real().transpose());

  auto obj = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
    const Eigen::Vector2d a = L * v;
    const double rb = v.dot(S * v) - p.theta_target;
    if (grad) *grad = 2.0 * p.weight_A * L.transpose() * a + 4.0 * p.weight_B * rb * (S * v);
    return p.weight_A * a.squaredNorm() + p.weight_B * rb * rb;
  };

  Eigen::VectorXd x0;
  std::string method;
  if (p.qubit_init == QubitInit::Given) {
    if (p.initial_coefficients.size() != K) throw std::invalid_argument("initial coefficient count does not match K");
    x0 = Eigen::Map<const Eigen::VectorXd>(p.initial_coefficients.data(), k) * p.t_f;
    method = "gradient-descent";
  } else if (spectral_start(L, S, p.theta_target, x0)) {
    method = "spectral+gradient-descent";
  } else {
    // No null-space direction carries a phase of the requested sign.
    x0 = Eigen::VectorXd::Constant(k, 1.0);
    method = "gradient-descent";
  }
  DescentResult dr = gradient_descent(obj, x0, p.optimizer);

  DesignResult res{FourierPulse(p.t_f, to_std(dr.x / p.t_f))};
  res.method = method;
  res.iterations = dr.iterations;
  res.objective = dr.value;
  res.objective_trace = std::move(dr.trace);
  res.A_tf = gate_A(res.pulse, p.omega, p.t_f);
  res.B_tf = gate_B(res.pulse, p.omega, p.t_f);
  res.alpha_tf = displacement(res.pulse, p.omega, p.t_f);
  res.residuals = {std::abs(res.A_tf.real()), std::abs(res.A_tf.imag()), std::abs(res.B_tf.real() - p.theta_target)};
  res.peak_g = sampled_peak(res.pulse);
  res.converged = std::all_of(res.residuals.begin(), res.residuals.end(),
                              [&](double r) { return r < p.residual_tolerance; });
  return res;
}

DesignResult design(const DesignProblem& problem) {
  return problem.kind == DesignKind::Photonic ? design_photonic(problem) : design_qubit(problem);
}

}  // namespace stagen
