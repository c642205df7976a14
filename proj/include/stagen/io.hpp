#pragma once

// Output files. CSVs carry a header row and print numbers with 17
// significant digits so they round-trip exactly.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stagen/analysis.hpp"
#include "stagen/dynamics.hpp"
#include "stagen/hilbert.hpp"
#include "stagen/pulses.hpp"

namespace stagen::io {

namespace fs = std::filesystem;

/// Creates the directory (and parents) if needed.
void ensure_dir(const fs::path& dir);

/// Pretty-printed JSON with a trailing newline.
void write_json(const fs::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const fs::path& path);

/// {t_f_seconds, coefficients_rad_per_s}; a constant pulse writes
/// constant_g_rad_per_s instead of the coefficient list.
nlohmann::json pulse_json(const CouplingProfile& pulse);

/// t, g, g_c, g_c_dot, beta on `samples` uniform points.
void write_pulse_csv(const fs::path& path, const CouplingProfile& pulse, double omega, std::size_t samples = 2001);

/// t, Re alpha, Im alpha, Re A, Im A, Re B, Im B.
void write_functionals_csv(const fs::path& path, const CouplingProfile& pulse, double omega,
                           std::size_t samples = 2001);

/// t, norm, then <a_m> and the +x branch mean per mode, qubit populations
/// when recorded, and an optional fidelity column.
void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& record, std::size_t num_qubits,
                          const std::vector<double>& fidelity = {});

/// Long format: x, p, W.
void write_wigner_csv(const fs::path& path, const WignerGrid& grid);
/// Whitespace-separated matrix, one row per x sample, one column per p sample.
void write_wigner_matrix(const fs::path& path, const WignerGrid& grid);
/// Two-column marginals: <stem>_x.csv (x, P) and <stem>_p.csv (p, P).
void write_marginals(const fs::path& stem, const Marginals& marginals);

/// Raw little-endian complex128 data in `<stem>.bin` plus layout metadata in
/// `<stem>.json`.
void write_state(const fs::path& stem, const StateVector& psi);
void write_state(const fs::path& stem, const DensityMatrix& rho);

/// Generic CSV with one header row.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace stagen::io
