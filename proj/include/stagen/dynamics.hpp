#pragma once

// Fixed-step RK4 propagation of
//   H(t) = sum_n (W_n/2) sx_n + sum_m w_m a_m^dag a_m + g(t) S sum_m (a_m + a_m^dag),  S = sum_n sx_n
// and of the Lindblad equation built on it.
//
// Qubits are propagated in the sx eigenbasis, where the coupling is block
// diagonal; states are converted from and back to the (g, e) basis at the
// boundaries. Every recorded quantity is expressed in the interaction picture
// of the free Hamiltonian, whichever frame was integrated.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stagen/hilbert.hpp"
#include "stagen/kernels.hpp"
#include "stagen/pulses.hpp"

namespace stagen {

enum class Frame { Interaction, Lab };

struct EvolutionConfig {
  Frame frame = Frame::Interaction;
  double dt = 0.0;                 // 0 selects the automatic step
  double t_f = 0.0;                // 0 uses the pulse duration
  std::size_t record_stride = 0;   // steps between records; 0 records only t = 0 and t_f
  bool renormalize = false;        // closed runs only
  bool record_states = false;
  bool record_populations = false; // qubit (g, e) populations, 2^N per record
  double steps_per_period = 200.0; // dt <= (2 pi / w_max) / steps_per_period
  double stability_factor = 0.1;   // dt <= stability_factor / ||H|| bound
  double drift_tolerance = 1e-6;
  const kernels::KernelTable* kernels = nullptr;  // nullptr: kernels::active()
};

enum class DissipatorBasis { EnergyEigenbasis, ZBasisLiteral };

struct LindbladConfig {
  std::vector<double> kappa;      // per mode, rad/s
  std::vector<double> gamma;      // per qubit, rad/s
  std::vector<double> gamma_phi;  // per qubit, rad/s
  DissipatorBasis basis = DissipatorBasis::EnergyEigenbasis;
  std::size_t dimension_cap = 512;  // Hilbert-space dimension limit for density matrices
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> norms;                         // state norm or density trace
  std::vector<std::vector<cplx>> mode_mean;          // <a_m> per record
  std::vector<std::vector<cplx>> branch_mean;        // <a_m> conditioned on every qubit in |+x>
  std::vector<std::vector<double>> qubit_populations;
  std::vector<StateVector> states;
  std::optional<StateVector> final_state;
  std::optional<DensityMatrix> final_density;
  std::size_t steps = 0;
  double dt = 0.0;
  double max_drift = 0.0;
  std::string kernel_name;
};

/// Step count used for a run (dt = t_f / steps).
std::size_t step_count(const TensorLayout& layout, const CouplingProfile& pulse, const EvolutionConfig& config);

TrajectoryRecord schrodinger_evolve(const LayoutPtr& layout, const CouplingProfile& pulse,
                                    const StateVector& initial, const EvolutionConfig& config = {});

TrajectoryRecord lindblad_evolve(const LayoutPtr& layout, const CouplingProfile& pulse,
                                 const DensityMatrix& initial, const EvolutionConfig& config,
                                 const LindbladConfig& lindblad);

/// Uniform rates: kappa on every mode, 1/T1 and 1/T2 on every qubit.
LindbladConfig uniform_rates(const TensorLayout& layout, double kappa, double t1, double t2,
                             DissipatorBasis basis = DissipatorBasis::EnergyEigenbasis);

/// Apply the Hadamard to every qubit factor in place: maps (g, e) amplitudes to
/// (+x, -x) amplitudes and back.
void hadamard_qubits(const TensorLayout& layout, std::span<cplx> amplitudes);

std::string to_string(Frame f);
std::string to_string(DissipatorBasis b);

}  // namespace stagen
