#pragma once

// Experiment orchestration shared by the CLI and the acceptance suite:
// pulse preparation, truncation, closed/open runs, calibration and the
// RunReport document.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagen/analysis.hpp"
#include "stagen/config.hpp"
#include "stagen/designer.hpp"
#include "stagen/dynamics.hpp"
#include "stagen/hilbert.hpp"
#include "stagen/pulses.hpp"

namespace stagen {

inline constexpr const char* kToolName = "stagen";
inline constexpr const char* kToolVersion = "1.0.0";

struct PreparedRun {
  ExperimentConfig config;
  std::optional<DesignResult> design;  // set when the pulse was designed
  CouplingProfile pulse;
  double peak_amplitude = 0.0;         // photonic: max |alpha|; qubit: N max |A|
  std::size_t mode_dim = 0;
  LayoutPtr layout;
  StateVector initial;
};

DesignProblem design_problem(const ExperimentConfig& config);
/// Designs or loads the pulse, fixes the truncation and builds |g..g>|0..0>.
PreparedRun prepare(const ExperimentConfig& config);

/// Largest |alpha(t)| (photonic) or N |A(t)| (qubit) over the pulse window.
double peak_amplitude(const CouplingProfile& pulse, const ExperimentConfig& config, std::size_t samples = 4001);

/// Pure target on the full layout (photonic kinds) or on the qubit register.
StateVector target_state(const PreparedRun& run, bool relabeled = false);

/// Fidelity of a final state (pure or mixed) to the configured target. Qubit
/// targets are compared on the register after tracing out the mode; the
/// rotated photonic target is compared after rotating the evolved qubit.
double target_fidelity(const PreparedRun& run, const StateVector& psi, bool relabeled = false);
double target_fidelity(const PreparedRun& run, const DensityMatrix& rho, bool relabeled = false);

EvolutionConfig evolution_config(const ExperimentConfig& config);

struct ClosedOutcome {
  TrajectoryRecord record;
  double fidelity = 0.0;
  double fidelity_relabeled = 0.0;  // qubit targets only
  double fidelity_initial = 0.0;    // |<psi(0)|psi(t_f)>|^2
  std::vector<double> fidelity_trace;
  double seconds = 0.0;
};

ClosedOutcome run_closed(const PreparedRun& run);

struct OpenOutcome {
  DissipatorBasis basis = DissipatorBasis::EnergyEigenbasis;
  TrajectoryRecord record;
  double fidelity = 0.0;
  double fidelity_relabeled = 0.0;
  double seconds = 0.0;
};

LindbladConfig lindblad_config(const ExperimentConfig& config, const TensorLayout& layout, DissipatorBasis basis);
/// One Lindblad run per configured dissipator basis.
std::vector<OpenOutcome> run_open(const PreparedRun& run);

struct CalibrationPoint {
  double theta = 0.0;        // pair-phase target of the convention
  double g = 0.0;            // constant coupling that realizes it, rad/s
  double ghz_fidelity = 0.0; // best-phase GHZ fidelity of the qubit register
  double target_fidelity = 0.0;
  bool passes = false;
};

struct Calibration {
  double omega = 0.0;
  double tau = 0.0;
  std::vector<CalibrationPoint> points;  // pi/4 convention, then pi/8
  std::optional<double> selected;         // theta of the single passing convention
};

/// Constant coupling, tau = 2 pi / omega, N = 2: for each convention the
/// coupling whose |B(tau)| equals its theta is propagated and scored.
Calibration calibrate_pair_phase(double omega = angular_from_hz(1e9), double threshold = 0.99);

/// max over phi of <GHZ_phi| rho |GHZ_phi> for a register density matrix.
double best_phase_ghz_fidelity(const DensityMatrix& register_state);

/// Reduced density matrix of mode m.
DensityMatrix reduced_mode(const StateVector& psi, std::size_t m = 0);
/// Mode-0 state of the branch left after rotating the qubit by exp(-i pi sy/4)
/// and projecting it onto |+x>: the odd-cat component for a one-mode state.
DensityMatrix rotated_cat_branch(const StateVector& psi);

/// Half width of the default Wigner window.
double wigner_half_width(const PreparedRun& run);

nlohmann::json conventions_json(const ExperimentConfig& config);
nlohmann::json design_json(const DesignResult& design);
nlohmann::json run_report(const PreparedRun& run, const ClosedOutcome* closed, const std::vector<OpenOutcome>* open);

/// Reports are comparable only when their convention ledgers agree; returns
/// the differing keys.
std::vector<std::string> convention_mismatch(const nlohmann::json& a, const nlohmann::json& b);

}  // namespace stagen
