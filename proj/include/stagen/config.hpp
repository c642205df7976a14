#pragma once

// Experiment configuration: one JSON document, units spelled out in the field
// names (frequency_ghz, t_f_ns, kappa_mhz, ...). Frequencies are linear; the
// conversion to angular units happens here and nowhere else.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagen/designer.hpp"
#include "stagen/dynamics.hpp"
#include "stagen/targets.hpp"

namespace stagen {

/// Pair-phase target selected by the calibration oracle (ordered-pair
/// convention): B(t_f) = pi/8 turns |g...g> into the GHZ state.
inline constexpr double kPairPhaseTarget = kPi / 8.0;

enum class SystemKind { Photonic, Qubit };

struct SystemConfig {
  SystemKind kind = SystemKind::Photonic;
  std::size_t num_qubits = 1;
  std::size_t num_modes = 1;
  double mode_frequency_ghz = 6.6;
  double qubit_frequency_ghz = 10.0;
  std::size_t mode_dim = 0;        // 0: smallest dim whose coherent tail is below leak_tolerance
  double leak_tolerance = 1e-5;
  std::size_t min_dim = 8;
};

enum class PulseSource { Design, Coefficients, Constant, File };
enum class InitKind { Spectral, Given, Random };

struct PulseConfig {
  PulseSource source = PulseSource::Design;
  double t_f_ns = 3.74;
  std::size_t terms = 0;                   // 0: designer default
  std::vector<double> coefficients_mhz;    // c_k / 2 pi; explicit pulse or qubit start point
  double constant_g_mhz = 0.0;             // g / 2 pi for a constant coupling
  std::string file;                        // pulse JSON written by `design`
  PhotonicSolver solver = PhotonicSolver::MinimumNorm;
  InitKind init = InitKind::Spectral;
  std::size_t max_iterations = 5000;
};

struct TargetConfig {
  TargetKind kind = TargetKind::PhotonicGhz;
  double d_max = 3.0;
  double theta_rad = kPairPhaseTarget;
};

struct DissipationConfig {
  bool enabled = false;
  double kappa_mhz = 1.0;   // kappa / 2 pi
  double t1_us = 40.0;      // gamma = 1 / T1
  double t2_us = 40.0;      // gamma_phi = 1 / T2
  std::vector<DissipatorBasis> bases{DissipatorBasis::EnergyEigenbasis, DissipatorBasis::ZBasisLiteral};
  std::size_t dimension_cap = 512;
};

struct RunConfig {
  Frame frame = Frame::Interaction;
  double dt_ps = 0.0;             // 0: automatic
  std::size_t record_stride = 0;  // steps between records; 0: endpoints only
  bool record_fidelity = false;   // fidelity to the target at every record
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  double wigner_half_width = 0.0;  // 0: d_max + 3
  std::size_t wigner_points = 201;
};

struct ExperimentConfig {
  SystemConfig system;
  PulseConfig pulse;
  TargetConfig target;
  DissipationConfig dissipation;
  RunConfig run;

  double omega() const;        // mode angular frequency
  double qubit_omega() const;  // qubit angular frequency
  double t_f() const;          // seconds
};

/// Validates and fills defaults. Unknown keys, wrong types and out-of-range
/// values raise ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
/// The normalized configuration, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

/// Built-in parameter sets.
ExperimentConfig photonic_config(std::size_t num_modes, double d_max);
ExperimentConfig qubit_config(std::size_t num_qubits);

std::string to_string(SystemKind kind);
std::string to_string(PulseSource source);

}  // namespace stagen
