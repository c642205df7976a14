#pragma once

// Fidelities, populations and phase-space functions.

#include <cstddef>
#include <string>
#include <vector>

#include "stagen/dynamics.hpp"
#include "stagen/hilbert.hpp"

namespace stagen {

enum class FidelityMethod { PurePure, PureMixed, MixedMixed };

struct FidelityReport {
  double value = 0.0;
  FidelityMethod method = FidelityMethod::PurePure;
  bool global_phase_optimized = true;  // |<a|b>|^2 is blind to a global phase
};

std::string to_string(FidelityMethod m);

FidelityReport fidelity(const StateVector& a, const StateVector& b);
FidelityReport fidelity(const StateVector& a, const DensityMatrix& b);
FidelityReport fidelity(const DensityMatrix& a, const StateVector& b);
/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 through Hermitian eigendecompositions.
FidelityReport fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// Index of a computational label such as "gge" (qubit 0 first).
std::size_t label_index(const std::string& label, std::size_t num_qubits);

/// One time series per label from a record made with record_populations.
std::vector<std::vector<double>> populations(const TrajectoryRecord& record, const std::vector<std::string>& labels,
                                             std::size_t num_qubits);
/// Qubit (g, e) populations of a state, modes traced out.
std::vector<double> populations(const StateVector& psi, const std::vector<std::string>& labels);

struct WignerGridSpec {
  double x_min = -5.0, x_max = 5.0;
  double p_min = -5.0, p_max = 5.0;
  std::size_t nx = 201, np = 201;

  static WignerGridSpec square(double half_width, std::size_t n = 201) {
    return {-half_width, half_width, -half_width, half_width, n, n};
  }
};

struct WignerGrid {
  std::vector<double> x;      // Re beta
  std::vector<double> p;      // Im beta
  std::vector<double> values; // values[ix * p.size() + ip]
  std::string warning;        // non-empty when the state reaches the truncation edge

  double at(std::size_t ix, std::size_t ip) const { return values[ix * p.size() + ip]; }
  /// Trapezoid integral over the window.
  double integral() const;
  double min() const;
};

struct Marginals {
  std::vector<double> x, px;  // P(x) = int W dp
  std::vector<double> p, pp;  // P(p) = int W dx
};

/// W(beta) = (2/pi) Tr[rho D(beta) Parity D(-beta)] for a single-mode density matrix.
WignerGrid wigner(const DensityMatrix& rho_mode, const WignerGridSpec& spec = {});
double wigner_at(const DenseMatrix& rho_mode, cplx beta);

Marginals wigner_marginals(const WignerGrid& grid);

}  // namespace stagen
