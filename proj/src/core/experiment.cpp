#include "stagen/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "stagen/functionals.hpp"
#include "stagen/targets.hpp"

namespace stagen {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::size_t> qubit_factors(const TensorLayout& L) {
  std::vector<std::size_t> keep(L.num_qubits());
  for (std::size_t n = 0; n < keep.size(); ++n) keep[n] = L.qubit_factor(n);
  return keep;
}

CouplingProfile load_pulse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pulse file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed pulse file " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("t_f_seconds") || !doc["t_f_seconds"].is_number()) {
    throw ConfigError("pulse file " + path + " needs t_f_seconds");
  }
  const double t_f = doc["t_f_seconds"].get<double>();
  if (doc.contains("constant_g_rad_per_s")) {
    return ConstantPulse{doc["constant_g_rad_per_s"].get<double>(), t_f};
  }
  if (!doc.contains("coefficients_rad_per_s") || !doc["coefficients_rad_per_s"].is_array()) {
    throw ConfigError("pulse file " + path + " needs coefficients_rad_per_s");
  }
  try {
    return FourierPulse(t_f, doc["coefficients_rad_per_s"].get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError("pulse file " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("pulse file " + path + ": " + e.what());
  }
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

// U rho U^dagger for a gate on qubit 0.
DensityMatrix rotate_qubit(const DensityMatrix& rho, const Eigen::Matrix2cd& gate) {
  const LocalOperator op(rho.layout_ptr(), rho.layout().qubit_factor(0), gate);
  const Eigen::SparseMatrix<cplx> U = op.sparse();
  DenseMatrix out = U * rho.entries() * U.adjoint();
  return DensityMatrix(rho.layout_ptr(), std::move(out));
}

}  // namespace

DesignProblem design_problem(const ExperimentConfig& c) {
  DesignProblem p;
  p.kind = c.system.kind == SystemKind::Photonic ? DesignKind::Photonic : DesignKind::Qubit;
  p.omega = c.omega();
  p.t_f = c.t_f();
  p.K = c.pulse.terms;
  p.d_max = c.target.d_max;
  p.theta_target = c.target.theta_rad;
  p.photonic_solver = c.pulse.solver;
  p.optimizer.max_iterations = c.pulse.max_iterations;
  const std::size_t K = p.K ? p.K : default_term_count(p.kind, p.omega, p.t_f);
  switch (c.pulse.init) {
    case InitKind::Spectral:
      break;
    case InitKind::Given:
      p.qubit_init = QubitInit::Given;
      for (double mhz : c.pulse.coefficients_mhz) p.initial_coefficients.push_back(angular_from_hz(mhz * 1e6));
      break;
    case InitKind::Random: {
      // Unit spread in the optimizer's scaled units (c_k t_f).
      std::mt19937_64 rng(c.run.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      p.qubit_init = QubitInit::Given;
      for (std::size_t k = 0; k < K; ++k) p.initial_coefficients.push_back(normal(rng) / p.t_f);
      break;
    }
  }
  if (p.qubit_init == QubitInit::Given && p.initial_coefficients.size() != K) {
    throw ConfigError("pulse.coefficients_mhz has " + std::to_string(p.initial_coefficients.size()) +
                      " entries but the design uses " + std::to_string(K) + " terms");
  }
  return p;
}

double peak_amplitude(const CouplingProfile& pulse, const ExperimentConfig& c, std::size_t samples) {
  double peak = 0.0;
  for (double t : sample_times(pulse.t_f(), samples)) {
    if (c.system.kind == SystemKind::Photonic) {
      peak = std::max(peak, std::abs(displacement(pulse, c.omega(), t)));
    } else {
      peak = std::max(peak, std::abs(gate_A(pulse, c.omega(), t)));
    }
  }
  return c.system.kind == SystemKind::Photonic ? peak : peak * static_cast<double>(c.system.num_qubits);
}

PreparedRun prepare(const ExperimentConfig& c) {
  std::optional<DesignResult> designed;
  std::optional<CouplingProfile> pulse;
  switch (c.pulse.source) {
    case PulseSource::Design:
      designed = design(design_problem(c));
      pulse.emplace(designed->pulse);
      break;
    case PulseSource::Coefficients: {
      std::vector<double> coeffs;
      for (double mhz : c.pulse.coefficients_mhz) coeffs.push_back(angular_from_hz(mhz * 1e6));
      pulse.emplace(FourierPulse(c.t_f(), std::move(coeffs)));
      break;
    }
    case PulseSource::Constant:
      pulse.emplace(ConstantPulse{angular_from_hz(c.pulse.constant_g_mhz * 1e6), c.t_f()});
      break;
    case PulseSource::File:
      pulse.emplace(load_pulse_file(c.pulse.file));
      break;
  }

  const double peak = peak_amplitude(*pulse, c);
  std::size_t dim = c.system.mode_dim;
  if (dim == 0) dim = truncation_for_amplitude(peak, {c.system.leak_tolerance, c.system.min_dim});

  std::vector<QubitSpec> qubits(c.system.num_qubits, QubitSpec{c.qubit_omega()});
  std::vector<ModeSpec> modes(c.system.num_modes, ModeSpec{c.omega(), dim});
  LayoutPtr layout = make_layout(qubits, modes);

  std::vector<cvec> factors;
  for (std::size_t n = 0; n < c.system.num_qubits; ++n) factors.push_back(cvec{1.0, 0.0});
  for (std::size_t m = 0; m < c.system.num_modes; ++m) {
    cvec vac(dim, 0.0);
    vac[0] = 1.0;
    factors.push_back(std::move(vac));
  }
  StateVector initial = tensor_state(layout, factors);
  return PreparedRun{c, std::move(designed), std::move(*pulse), peak, dim, std::move(layout), std::move(initial)};
}

StateVector target_state(const PreparedRun& run, bool relabeled) {
  const ExperimentConfig& c = run.config;
  const double tol = c.system.leak_tolerance;
  switch (c.target.kind) {
    case TargetKind::PhotonicGhz:
      return photonic_ghz_target(run.layout, displacement(run.pulse, c.omega(), run.pulse.t_f()), tol);
    case TargetKind::RotatedPhotonicGhz:
      return rotated_photonic_ghz(run.layout, displacement(run.pulse, c.omega(), run.pulse.t_f()), tol);
    case TargetKind::QubitGhz: {
      const auto keep = qubit_factors(*run.layout);
      return qubit_ghz_target(run.layout->subset(keep), relabeled);
    }
  }
  throw std::invalid_argument("unknown target kind");
}

double target_fidelity(const PreparedRun& run, const StateVector& psi, bool relabeled) {
  const StateVector target = target_state(run, relabeled);
  switch (run.config.target.kind) {
    case TargetKind::PhotonicGhz:
      return fidelity(target, psi).value;
    case TargetKind::RotatedPhotonicGhz:
      return fidelity(target, apply_qubit_gate(psi, 0, qubit_rotation(QubitOp::Y, kPi / 2.0))).value;
    case TargetKind::QubitGhz: {
      const auto keep = qubit_factors(psi.layout());
      return fidelity(target, partial_trace(psi, keep)).value;
    }
  }
  throw std::invalid_argument("unknown target kind");
}

double target_fidelity(const PreparedRun& run, const DensityMatrix& rho, bool relabeled) {
  const StateVector target = target_state(run, relabeled);
  switch (run.config.target.kind) {
    case TargetKind::PhotonicGhz:
      return fidelity(target, rho).value;
    case TargetKind::RotatedPhotonicGhz:
      return fidelity(target, rotate_qubit(rho, qubit_rotation(QubitOp::Y, kPi / 2.0))).value;
    case TargetKind::QubitGhz: {
      const auto keep = qubit_factors(rho.layout());
      return fidelity(target, partial_trace(rho, keep)).value;
    }
  }
  throw std::invalid_argument("unknown target kind");
}

EvolutionConfig evolution_config(const ExperimentConfig& c) {
  EvolutionConfig e;
  e.frame = c.run.frame;
  e.dt = c.run.dt_ps * 1e-12;
  e.record_stride = c.run.record_stride;
  e.record_populations = c.system.kind == SystemKind::Qubit;
  e.record_states = c.run.record_fidelity;
  return e;
}

ClosedOutcome run_closed(const PreparedRun& run) {
  ClosedOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  out.record = schrodinger_evolve(run.layout, run.pulse, run.initial, evolution_config(run.config));
  out.seconds = seconds_since(t0);
  const StateVector& psi = *out.record.final_state;
  out.fidelity = target_fidelity(run, psi);
  if (run.config.target.kind == TargetKind::QubitGhz) out.fidelity_relabeled = target_fidelity(run, psi, true);
  out.fidelity_initial = fidelity(run.initial, psi).value;
  for (const StateVector& s : out.record.states) out.fidelity_trace.push_back(target_fidelity(run, s));
  return out;
}

LindbladConfig lindblad_config(const ExperimentConfig& c, const TensorLayout& layout, DissipatorBasis basis) {
  LindbladConfig lc = uniform_rates(layout, angular_from_hz(c.dissipation.kappa_mhz * 1e6), c.dissipation.t1_us * 1e-6,
                                    c.dissipation.t2_us * 1e-6, basis);
  lc.dimension_cap = c.dissipation.dimension_cap;
  return lc;
}

std::vector<OpenOutcome> run_open(const PreparedRun& run) {
  std::vector<OpenOutcome> outs;
  EvolutionConfig ec = evolution_config(run.config);
  ec.record_states = false;
  const DensityMatrix rho0 = DensityMatrix::from_pure(run.initial);
  for (DissipatorBasis basis : run.config.dissipation.bases) {
    OpenOutcome o;
    o.basis = basis;
    const auto t0 = std::chrono::steady_clock::now();
    o.record = lindblad_evolve(run.layout, run.pulse, rho0, ec, lindblad_config(run.config, *run.layout, basis));
    o.seconds = seconds_since(t0);
    o.fidelity = target_fidelity(run, *o.record.final_density);
    if (run.config.target.kind == TargetKind::QubitGhz) {
      o.fidelity_relabeled = target_fidelity(run, *o.record.final_density, true);
    }
    outs.push_back(std::move(o));
  }
  return outs;
}

double best_phase_ghz_fidelity(const DensityMatrix& reg) {
  const DenseMatrix& r = reg.entries();
  const Eigen::Index last = r.rows() - 1;
  return 0.5 * (r(0, 0).real() + r(last, last).real()) + std::abs(r(0, last));
}

Calibration calibrate_pair_phase(double omega, double threshold) {
  Calibration cal;
  cal.omega = omega;
  cal.tau = kTwoPi / omega;
  ExperimentConfig c = qubit_config(2);
  c.system.mode_frequency_ghz = hz_from_angular(omega) * 1e-9;
  c.pulse.source = PulseSource::Constant;
  c.pulse.t_f_ns = cal.tau * 1e9;
  for (double theta : {kPi / 4.0, kPi / 8.0}) {
    CalibrationPoint pt;
    pt.theta = theta;
    // |B(tau)| = 2 pi g^2 / omega^2 for a constant coupling.
    pt.g = omega * std::sqrt(theta / kTwoPi);
    c.pulse.constant_g_mhz = hz_from_angular(pt.g) * 1e-6;
    c.target.theta_rad = theta;
    const PreparedRun run = prepare(c);
    const TrajectoryRecord rec = schrodinger_evolve(run.layout, run.pulse, run.initial, evolution_config(c));
    const DensityMatrix reg = partial_trace(*rec.final_state, qubit_factors(*run.layout));
    pt.ghz_fidelity = best_phase_ghz_fidelity(reg);
    pt.target_fidelity = std::max(target_fidelity(run, *rec.final_state), target_fidelity(run, *rec.final_state, true));
    pt.passes = pt.ghz_fidelity >= threshold;
    cal.points.push_back(pt);
  }
  const auto passing = std::count_if(cal.points.begin(), cal.points.end(), [](const auto& p) { return p.passes; });
  if (passing == 1) {
    cal.selected = std::find_if(cal.points.begin(), cal.points.end(), [](const auto& p) { return p.passes; })->theta;
  }
  return cal;
}

DensityMatrix reduced_mode(const StateVector& psi, std::size_t m) {
  const std::size_t keep[] = {psi.layout().mode_factor(m)};
  return partial_trace(psi, keep);
}

DensityMatrix rotated_cat_branch(const StateVector& psi) {
  const TensorLayout& L = psi.layout();
  if (L.num_qubits() != 1 || L.num_modes() == 0) throw std::invalid_argument("cat branch needs one qubit and a mode");
  const StateVector rotated = apply_qubit_gate(psi, 0, qubit_rotation(QubitOp::Y, kPi / 2.0));
  const std::size_t block = L.mode_block();
  cvec branch(block);
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < block; ++i) branch[i] = s * (rotated[i] + rotated[block + i]);
  std::vector<std::size_t> modes;
  for (std::size_t m = 0; m < L.num_modes(); ++m) modes.push_back(L.mode_factor(m));
  const StateVector b(L.subset(modes), std::move(branch));
  const std::size_t keep[] = {0};
  return partial_trace(b, keep);
}

double wigner_half_width(const PreparedRun& run) {
  if (run.config.run.wigner_half_width > 0.0) return run.config.run.wigner_half_width;
  if (run.config.system.kind == SystemKind::Photonic) return run.config.target.d_max + 3.0;
  return run.peak_amplitude + 3.0;
}

json conventions_json(const ExperimentConfig& c) {
  json j;
  j["pair_phase"] = "ordered-pairs";
  j["pair_phase_target_rad"] = kPairPhaseTarget;
  j["qubit_basis"] = "0=g,1=e;sigma_z|e>=+|e>;sigma^-=|g><e|";
  j["branch_states"] = "sigma_x eigenstates";
  j["frame"] = to_string(c.run.frame);
  j["rates"] = "kappa=2pi*kappa_mhz;gamma=1/T1;gamma_phi=1/T2";
  json bases = json::array();
  if (c.dissipation.enabled) {
    for (auto b : c.dissipation.bases) bases.push_back(to_string(b));
  }
  j["dissipator_basis"] = bases;
  return j;
}

json design_json(const DesignResult& d) {
  json j;
  j["method"] = d.method;
  j["converged"] = d.converged;
  j["iterations"] = d.iterations;
  j["objective"] = d.objective;
  j["residuals"] = d.residuals;
  j["terms"] = d.pulse.K();
  j["t_f_seconds"] = d.pulse.t_f();
  j["peak_g_rad_per_s"] = d.peak_g;
  j["peak_g_mhz"] = hz_from_angular(d.peak_g) * 1e-6;
  j["alpha_tf"] = complex_json(d.alpha_tf);
  j["A_tf"] = complex_json(d.A_tf);
  j["B_tf"] = complex_json(d.B_tf);
  j["coefficients_rad_per_s"] = std::vector<double>(d.pulse.coefficients().begin(), d.pulse.coefficients().end());
  return j;
}

json run_report(const PreparedRun& run, const ClosedOutcome* closed, const std::vector<OpenOutcome>* open) {
  const ExperimentConfig& c = run.config;
  json r;
  r["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  r["config"] = to_json(c);
  r["conventions"] = conventions_json(c);
  if (run.design) r["design"] = design_json(*run.design);
  r["pulse"] = {{"source", to_string(c.pulse.source)}, {"t_f_seconds", run.pulse.t_f()}};
  r["truncation"] = {{"peak_amplitude", run.peak_amplitude},
                     {"mode_dim", run.mode_dim},
                     {"dimension", run.layout->dimension()},
                     {"leak_tolerance", c.system.leak_tolerance}};
  r["target"] = {{"kind", to_string(c.target.kind)}};
  if (c.system.kind == SystemKind::Photonic) {
    r["target"]["alpha_tf"] = complex_json(displacement(run.pulse, c.omega(), run.pulse.t_f()));
  } else {
    r["target"]["ghz_phase_rad"] = ghz_phase(c.system.num_qubits);
  }
  if (closed) {
    const TrajectoryRecord& rec = closed->record;
    json e = {{"steps", rec.steps}, {"dt_seconds", rec.dt}, {"max_norm_drift", rec.max_drift}, {"kernel", rec.kernel_name}};
    json f = {{"target", closed->fidelity}, {"initial_state", closed->fidelity_initial}};
    if (c.target.kind == TargetKind::QubitGhz) {
      f["target_relabeled"] = closed->fidelity_relabeled;
      f["best_convention"] = std::max(closed->fidelity, closed->fidelity_relabeled);
    }
    r["closed"] = {{"evolution", e}, {"fidelities", f}};
  }
  if (open) {
    json runs = json::array();
    for (const OpenOutcome& o : *open) {
      json f = {{"target", o.fidelity}};
      if (c.target.kind == TargetKind::QubitGhz) {
        f["target_relabeled"] = o.fidelity_relabeled;
        f["best_convention"] = std::max(o.fidelity, o.fidelity_relabeled);
      }
      runs.push_back({{"dissipator_basis", to_string(o.basis)},
                      {"steps", o.record.steps},
                      {"dt_seconds", o.record.dt},
                      {"max_trace_drift", o.record.max_drift},
                      {"fidelities", f}});
    }
    r["open"] = runs;
  }
  return r;
}

std::vector<std::string> convention_mismatch(const json& a, const json& b) {
  std::vector<std::string> diff;
  const json ca = a.value("conventions", json::object());
  const json cb = b.value("conventions", json::object());
  for (const auto& [key, v] : ca.items()) {
    if (!cb.contains(key) || cb.at(key) != v) diff.push_back(key);
  }
  for (const auto& [key, _] : cb.items()) {
    if (!ca.contains(key)) diff.push_back(key);
  }
  return diff;
}

}  // namespace stagen
