#pragma once

// Design functionals of a coupling pulse for a single mode of frequency w:
//   alpha(t) = -i int_0^t g e^{iws} ds      (branch displacement)
//   A(t)     =    int_0^t g e^{-iws} ds     (gate coefficient)
//   B(t)     =  i int_0^t A dA*             (pair phase, homogeneous coupling)

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "stagen/pulses.hpp"
#include "stagen/quadrature.hpp"
#include "stagen/types.hpp"

namespace stagen {

struct GateTrajectories {
  std::vector<double> t;
  cvec alpha;
  cvec A;
  cvec B;
};

struct ConstantCouplingParams {
  double g = 0.0;
  double omega = 0.0;
};

struct ConstantForms {
  cplx A;
  cplx B;
};

cplx displacement(const CouplingProfile& p, double omega, double t);
cplx gate_A(const CouplingProfile& p, double omega, double t);
cplx gate_B(const CouplingProfile& p, double omega, double t, const QuadratureSettings& qs = {});

/// Simpson evaluation of the defining integrals (independent of the closed forms).
cplx displacement_by_quadrature(const CouplingProfile& p, double omega, double t, const QuadratureSettings& qs = {});
cplx gate_A_by_quadrature(const CouplingProfile& p, double omega, double t, const QuadratureSettings& qs = {});

GateTrajectories gate_trajectories(const CouplingProfile& p, double omega, std::size_t samples = 2001,
                                   const QuadratureSettings& qs = {});

/// Closed forms for a constant coupling switched on at t = 0.
ConstantForms constant_forms(const ConstantCouplingParams& params, double t);

/// zeta = g_c/w + i g_c'/w^2: the lab-frame coherent amplitude of the +1 branch.
cplx sta_amplitude(const AuxiliaryPoint& aux, double omega);
cvec sta_amplitude(const AuxiliaryTrajectory& aux, double omega);

/// Linear maps for a sine-series pulse: alpha(t) = row . c, A(t) = row . c.
Eigen::RowVectorXcd displacement_row(double t_f, std::size_t K, double omega, double t);
Eigen::RowVectorXcd gate_A_row(double t_f, std::size_t K, double omega, double t);

/// Complex K x K matrix Q with B(t) = c^T Q c for every coefficient vector c.
Eigen::MatrixXcd gate_B_matrix(double t_f, std::size_t K, double omega, double t, const QuadratureSettings& qs = {});

}  // namespace stagen
