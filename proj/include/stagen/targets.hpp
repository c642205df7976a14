#pragma once

// Target states and reference gates.

#include <Eigen/Core>
#include <cstddef>
#include <string>

#include "stagen/hilbert.hpp"

namespace stagen {

enum class TargetKind { PhotonicGhz, RotatedPhotonicGhz, QubitGhz };

struct TargetSpec {
  TargetKind kind = TargetKind::PhotonicGhz;
  cplx alpha{};                 // photonic kinds
  std::size_t N = 0;            // qubit kind
  bool relabeled = false;       // qubit kind: conjugate GHZ phase (g <-> e relabeling)
};

TargetKind parse_target_kind(const std::string& name);
std::string to_string(TargetKind kind);

/// (|+x>|a>...|a> + |-x>|-a>...|-a>) / norm: the image of |g>|0...0> under a
/// displacement a of the +1 branch. Requires one qubit and at least one mode.
StateVector photonic_ghz_target(const LayoutPtr& layout, cplx alpha, double max_deficit = 1e-6);

/// exp(-i pi sy / 4) applied to the qubit of photonic_ghz_target.
StateVector rotated_photonic_ghz(const LayoutPtr& layout, cplx alpha, double max_deficit = 1e-6);

/// The same state assembled from odd and even cats: |+x>(A - B) + |-x>(A + B).
StateVector rotated_photonic_ghz_from_cats(const LayoutPtr& layout, cplx alpha, double max_deficit = 1e-6);

/// GHZ phase pi (N + 1) / 2.
double ghz_phase(std::size_t N);

/// (|g...g> + e^{i phi}|e...e>)/sqrt 2 on a qubit-only layout; phi = ghz_phase(N),
/// negated when `relabeled`.
StateVector qubit_ghz_target(const LayoutPtr& qubit_layout, bool relabeled = false);
StateVector qubit_ghz_target(std::size_t N, bool relabeled = false);

/// Layout of N qubits with a nominal frequency, for register-only states.
LayoutPtr qubit_register(std::size_t N);

StateVector make_target(const LayoutPtr& layout, const TargetSpec& spec);

/// prod_{n<n'} [cos(theta) I + i sin(theta) sx_n sx_n'] in the (g, e) basis.
Eigen::MatrixXcd sm_gate_unitary(std::size_t N, double theta_pair);

/// exp(-i angle/2 P) for P in {X, Y, Z}.
Eigen::Matrix2cd qubit_rotation(QubitOp axis, double angle);

/// Apply a 2x2 matrix to qubit n of a state.
StateVector apply_qubit_gate(const StateVector& psi, std::size_t n, const Eigen::Matrix2cd& gate);

}  // namespace stagen
