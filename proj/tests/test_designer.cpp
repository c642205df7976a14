#include <doctest.h>

#include <chrono>

#include "stagen/designer.hpp"
#include "stagen/functionals.hpp"

using namespace stagen;

namespace {

DesignProblem photonic(double d_max) {
  DesignProblem p;
  p.kind = DesignKind::Photonic;
  p.omega = angular_from_hz(6.6e9);
  p.t_f = 3.74e-9;
  p.d_max = d_max;
  return p;
}

DesignProblem qubit(double theta) {
  DesignProblem p;
  p.kind = DesignKind::Qubit;
  p.omega = angular_from_hz(1e9);
  p.t_f = 1.89e-9;
  p.theta_target = theta;
  return p;
}

}  // namespace

TEST_SUITE("designer") {
  TEST_CASE("default term counts") {
    // w t_f / pi = 49.37 for the photonic parameters.
    CHECK(default_term_count(DesignKind::Photonic, angular_from_hz(6.6e9), 3.74e-9) == 66);
    CHECK(default_term_count(DesignKind::Qubit, angular_from_hz(1e9), 1.89e-9) == 6);
  }

  TEST_CASE("photonic displacement targets") {
    for (double d : {1.0, 3.0, 5.0}) {
      CAPTURE(d);
      const DesignResult r = design(photonic(d));
      CHECK(r.converged);
      CHECK(std::abs(displacement(r.pulse, photonic(d).omega, 3.74e-9) - d) < 1e-6);
      CHECK(std::abs(r.pulse.eval(0.0)) < 1e-9 * r.peak_g);
      CHECK(std::abs(r.pulse.eval(3.74e-9)) < 1e-9 * r.peak_g);
    }
  }

  TEST_CASE("photonic pulse is linear in the target") {
    const DesignResult r1 = design(photonic(1.0)), r3 = design(photonic(3.0));
    CHECK(std::abs(r3.peak_g / r1.peak_g - 3.0) < 3e-9);
    for (std::size_t k = 0; k < r1.pulse.K(); ++k) {
      CHECK(std::abs(r3.pulse.coefficients()[k] - 3.0 * r1.pulse.coefficients()[k]) <= 1e-9 * r3.peak_g);
    }
  }

  TEST_CASE("few-term photonic basis still meets the constraint") {
    DesignProblem p = photonic(3.0);
    p.K = 6;
    const DesignResult r = design(p);
    CHECK(r.converged);
    CHECK(std::abs(r.alpha_tf - 3.0) < 1e-6);
  }

  TEST_CASE("photonic gradient-descent solver") {
    DesignProblem p = photonic(1.0);
    p.photonic_solver = PhotonicSolver::GradientDescent;
    const DesignResult r = design(p);
    CHECK(r.converged);
    CHECK(std::abs(r.alpha_tf - 1.0) < 1e-6);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
  }

  TEST_CASE("qubit gate targets") {
    for (double theta : {kPi / 4.0, kPi / 8.0}) {
      CAPTURE(theta);
      const auto t0 = std::chrono::steady_clock::now();
      const DesignResult r = design(qubit(theta));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      CHECK(r.converged);
      CHECK(std::abs(r.A_tf) < 1e-6);
      CHECK(std::abs(r.B_tf.real() - theta) < 1e-6);
      CHECK(std::abs(r.B_tf.imag()) < 1e-8);
      CHECK(secs < 10.0);
      // Independent recomputation from the returned coefficients.
      CHECK(std::abs(gate_A(r.pulse, qubit(theta).omega, 1.89e-9)) < 1e-6);
    }
  }

  TEST_CASE("qubit design from a given start point") {
    DesignProblem p = qubit(kPi / 4.0);
    p.qubit_init = QubitInit::Given;
    p.initial_coefficients = std::vector<double>(5, 1e8);
    CHECK_THROWS_AS(design(p), std::invalid_argument);
    p.initial_coefficients = {0.0, 3e8, 0.0, -1e8, 0.0, 1.5e9};
    const DesignResult r = design(p);
    CHECK(r.method == "gradient-descent");
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
  }

  TEST_CASE("gradient descent on a convex quadratic") {
    Eigen::MatrixXd Q(3, 3);
    Q << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Eigen::Vector3d exact(1.0, -2.0, 0.5);
    const ObjectiveFn f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const Eigen::VectorXd e = x - exact;
      if (g) *g = Q * e;
      return 0.5 * e.dot(Q * e);
    };
    OptimizerSettings s;
    s.objective_tolerance = 1e-16;
    const DescentResult r = gradient_descent(f, Eigen::VectorXd::Zero(3), s);
    CHECK(r.converged);
    CHECK((r.x - exact).norm() < 1e-6);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
    CHECK(!r.stop_reason.empty());
  }

  TEST_CASE("invalid problems are rejected") {
    DesignProblem p = photonic(1.0);
    p.t_f = 0.0;
    CHECK_THROWS(design(p));
    p = qubit(kPi / 4.0);
    p.omega = -1.0;
    CHECK_THROWS(design(p));
  }
}
