#include "stagen/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stagen {

using nlohmann::json;

namespace {

// Field access with the path kept for error messages.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::set<std::string> allowed) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
    for (const auto& [key, _] : obj_.items()) {
      if (!allowed.count(key)) throw ConfigError("unknown field " + path_ + "." + key);
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
  const json& raw(const std::string& key) const { return obj_.at(key); }
  std::string field(const std::string& key) const { return path_ + "." + key; }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key) + " must be finite");
    return x;
  }
  double positive(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(field(key) + " must be positive");
    return x;
  }
  double non_negative(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (x < 0.0) throw ConfigError(field(key) + " must be non-negative");
    return x;
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(field(key) + " must be a non-negative integer");
    return v.get<std::size_t>();
  }
  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!obj_.at(key).is_boolean()) throw ConfigError(field(key) + " must be true or false");
    return obj_.at(key).get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!obj_.at(key).is_string()) throw ConfigError(field(key) + " must be a string");
    return obj_.at(key).get<std::string>();
  }

  std::string where() const { return path_; }

 private:
  const json& obj_;
  std::string path_;
};

template <class E>
E choose(const Reader& r, const std::string& key, E fallback, const std::vector<std::pair<std::string, E>>& options) {
  if (!r.has(key)) return fallback;
  const std::string v = r.text(key, "");
  for (const auto& [name, e] : options) {
    if (name == v) return e;
  }
  std::string names;
  for (const auto& [name, _] : options) names += (names.empty() ? "" : ", ") + name;
  throw ConfigError(r.field(key) + " must be one of: " + names);
}

template <class E>
std::string name_of(E e, const std::vector<std::pair<std::string, E>>& options) {
  for (const auto& [name, v] : options) {
    if (v == e) return name;
  }
  return "unknown";
}

const std::vector<std::pair<std::string, SystemKind>> kSystemKinds{{"photonic", SystemKind::Photonic},
                                                                   {"qubit", SystemKind::Qubit}};
const std::vector<std::pair<std::string, PulseSource>> kSources{{"design", PulseSource::Design},
                                                                 {"coefficients", PulseSource::Coefficients},
                                                                 {"constant", PulseSource::Constant},
                                                                 {"file", PulseSource::File}};
const std::vector<std::pair<std::string, PhotonicSolver>> kSolvers{
    {"minimum_norm", PhotonicSolver::MinimumNorm}, {"gradient_descent", PhotonicSolver::GradientDescent}};
const std::vector<std::pair<std::string, InitKind>> kInits{
    {"spectral", InitKind::Spectral}, {"given", InitKind::Given}, {"random", InitKind::Random}};
const std::vector<std::pair<std::string, TargetKind>> kTargets{{"photonic_ghz", TargetKind::PhotonicGhz},
                                                               {"rotated_photonic_ghz", TargetKind::RotatedPhotonicGhz},
                                                               {"qubit_ghz", TargetKind::QubitGhz}};
const std::vector<std::pair<std::string, Frame>> kFrames{{"interaction", Frame::Interaction}, {"lab", Frame::Lab}};
const std::vector<std::pair<std::string, DissipatorBasis>> kBases{
    {"energy-eigenbasis", DissipatorBasis::EnergyEigenbasis}, {"z-basis-literal", DissipatorBasis::ZBasisLiteral}};

void apply_kind_defaults(ExperimentConfig& c) {
  if (c.system.kind == SystemKind::Photonic) {
    c.system.num_qubits = 1;
    c.system.num_modes = 1;
    c.system.mode_frequency_ghz = 6.6;
    c.pulse.t_f_ns = 3.74;
    c.target.kind = TargetKind::PhotonicGhz;
  } else {
    c.system.num_qubits = 2;
    c.system.num_modes = 1;
    c.system.mode_frequency_ghz = 1.0;
    c.pulse.t_f_ns = 1.89;
    c.target.kind = TargetKind::QubitGhz;
  }
  c.system.qubit_frequency_ghz = 10.0;
}

}  // namespace

double ExperimentConfig::omega() const { return angular_from_hz(system.mode_frequency_ghz * 1e9); }
double ExperimentConfig::qubit_omega() const { return angular_from_hz(system.qubit_frequency_ghz * 1e9); }
double ExperimentConfig::t_f() const { return pulse.t_f_ns * 1e-9; }

ExperimentConfig parse_config(const json& doc) {
  Reader top(doc, "config", {"system", "pulse", "target", "dissipation", "run"});
  ExperimentConfig c;
  if (!top.has("system")) throw ConfigError("config.system is required");

  Reader sys(top.raw("system"), "system",
             {"kind", "num_qubits", "num_modes", "mode_frequency_ghz", "qubit_frequency_ghz", "mode_dim",
              "leak_tolerance", "min_dim"});
  if (!sys.has("kind")) throw ConfigError("system.kind is required");
  c.system.kind = choose(sys, "kind", SystemKind::Photonic, kSystemKinds);
  apply_kind_defaults(c);
  c.system.num_qubits = sys.count("num_qubits", c.system.num_qubits);
  c.system.num_modes = sys.count("num_modes", c.system.num_modes);
  c.system.mode_frequency_ghz = sys.positive("mode_frequency_ghz", c.system.mode_frequency_ghz);
  c.system.qubit_frequency_ghz = sys.positive("qubit_frequency_ghz", c.system.qubit_frequency_ghz);
  c.system.mode_dim = sys.count("mode_dim", 0);
  c.system.leak_tolerance = sys.positive("leak_tolerance", c.system.leak_tolerance);
  c.system.min_dim = sys.count("min_dim", c.system.min_dim);
  if (c.system.kind == SystemKind::Photonic && c.system.num_qubits != 1) {
    throw ConfigError("system.num_qubits must be 1 for a photonic system");
  }
  if (c.system.kind == SystemKind::Qubit && c.system.num_modes != 1) {
    throw ConfigError("system.num_modes must be 1 for a qubit system");
  }
  if (c.system.num_qubits == 0 || c.system.num_modes == 0) throw ConfigError("system needs at least one qubit and one mode");
  if (c.system.mode_dim == 1) throw ConfigError("system.mode_dim must be 0 (automatic) or at least 2");
  if (c.system.min_dim < 2) throw ConfigError("system.min_dim must be at least 2");

  if (top.has("pulse")) {
    Reader p(top.raw("pulse"), "pulse",
             {"source", "t_f_ns", "terms", "coefficients_mhz", "constant_g_mhz", "file", "solver", "init", "max_iterations"});
    c.pulse.t_f_ns = p.positive("t_f_ns", c.pulse.t_f_ns);
    c.pulse.terms = p.count("terms", 0);
    c.pulse.solver = choose(p, "solver", c.pulse.solver, kSolvers);
    c.pulse.init = choose(p, "init", c.pulse.init, kInits);
    c.pulse.max_iterations = p.count("max_iterations", c.pulse.max_iterations);
    if (p.has("coefficients_mhz")) {
      const json& arr = p.raw("coefficients_mhz");
      if (!arr.is_array() || arr.empty()) throw ConfigError("pulse.coefficients_mhz must be a non-empty array");
      for (const auto& v : arr) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          throw ConfigError("pulse.coefficients_mhz must contain finite numbers");
        }
        c.pulse.coefficients_mhz.push_back(v.get<double>());
      }
    }
    c.pulse.constant_g_mhz = p.number("constant_g_mhz", 0.0);
    PulseSource fallback = PulseSource::Design;
    c.pulse.file = p.text("file", "");
    if (p.has("file")) fallback = PulseSource::File;
    else if (p.has("constant_g_mhz")) fallback = PulseSource::Constant;
    else if (p.has("coefficients_mhz") && c.pulse.init != InitKind::Given) fallback = PulseSource::Coefficients;
    c.pulse.source = choose(p, "source", fallback, kSources);
    if (c.pulse.source == PulseSource::Coefficients && c.pulse.coefficients_mhz.empty()) {
      throw ConfigError("pulse.source 'coefficients' needs pulse.coefficients_mhz");
    }
    if (c.pulse.source == PulseSource::File && c.pulse.file.empty()) {
      throw ConfigError("pulse.source 'file' needs pulse.file");
    }
    if (c.pulse.init == InitKind::Given && c.pulse.coefficients_mhz.empty()) {
      throw ConfigError("pulse.init 'given' needs pulse.coefficients_mhz");
    }
  }

  if (top.has("target")) {
    Reader t(top.raw("target"), "target", {"kind", "d_max", "theta_rad"});
    c.target.kind = choose(t, "kind", c.target.kind, kTargets);
    c.target.d_max = t.number("d_max", c.target.d_max);
    c.target.theta_rad = t.number("theta_rad", c.target.theta_rad);
  }
  const bool photonic_target = c.target.kind != TargetKind::QubitGhz;
  if (photonic_target != (c.system.kind == SystemKind::Photonic)) {
    throw ConfigError("target.kind '" + to_string(c.target.kind) + "' does not fit a " + to_string(c.system.kind) +
                      " system");
  }

  if (top.has("dissipation")) {
    Reader d(top.raw("dissipation"), "dissipation", {"kappa_mhz", "t1_us", "t2_us", "basis", "dimension_cap"});
    c.dissipation.enabled = true;
    c.dissipation.kappa_mhz = d.non_negative("kappa_mhz", c.dissipation.kappa_mhz);
    c.dissipation.t1_us = d.non_negative("t1_us", c.dissipation.t1_us);
    c.dissipation.t2_us = d.non_negative("t2_us", c.dissipation.t2_us);
    c.dissipation.dimension_cap = d.count("dimension_cap", c.dissipation.dimension_cap);
    if (d.has("basis")) {
      if (d.text("basis", "") == "both") {
        c.dissipation.bases = {DissipatorBasis::EnergyEigenbasis, DissipatorBasis::ZBasisLiteral};
      } else {
        c.dissipation.bases = {choose(d, "basis", DissipatorBasis::EnergyEigenbasis, kBases)};
      }
    }
  }

  if (top.has("run")) {
    Reader r(top.raw("run"), "run",
             {"frame", "dt_ps", "record_stride", "record_fidelity", "output_dir", "seed", "wigner_half_width",
              "wigner_points"});
    c.run.frame = choose(r, "frame", c.run.frame, kFrames);
    c.run.dt_ps = r.non_negative("dt_ps", 0.0);
    c.run.record_stride = r.count("record_stride", 0);
    c.run.record_fidelity = r.flag("record_fidelity", false);
    c.run.output_dir = r.text("output_dir", c.run.output_dir);
    c.run.seed = r.count("seed", 0);
    c.run.wigner_half_width = r.non_negative("wigner_half_width", 0.0);
    c.run.wigner_points = r.count("wigner_points", c.run.wigner_points);
    if (c.run.wigner_points < 2) throw ConfigError("run.wigner_points must be at least 2");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["system"] = {{"kind", name_of(c.system.kind, kSystemKinds)},
                 {"num_qubits", c.system.num_qubits},
                 {"num_modes", c.system.num_modes},
                 {"mode_frequency_ghz", c.system.mode_frequency_ghz},
                 {"qubit_frequency_ghz", c.system.qubit_frequency_ghz},
                 {"mode_dim", c.system.mode_dim},
                 {"leak_tolerance", c.system.leak_tolerance},
                 {"min_dim", c.system.min_dim}};
  j["pulse"] = {{"source", name_of(c.pulse.source, kSources)},
                {"t_f_ns", c.pulse.t_f_ns},
                {"terms", c.pulse.terms},
                {"solver", name_of(c.pulse.solver, kSolvers)},
                {"init", name_of(c.pulse.init, kInits)},
                {"max_iterations", c.pulse.max_iterations}};
  if (!c.pulse.coefficients_mhz.empty()) j["pulse"]["coefficients_mhz"] = c.pulse.coefficients_mhz;
  if (c.pulse.source == PulseSource::Constant) j["pulse"]["constant_g_mhz"] = c.pulse.constant_g_mhz;
  if (c.pulse.source == PulseSource::File) j["pulse"]["file"] = c.pulse.file;
  j["target"] = {{"kind", name_of(c.target.kind, kTargets)}};
  if (c.system.kind == SystemKind::Photonic) j["target"]["d_max"] = c.target.d_max;
  else j["target"]["theta_rad"] = c.target.theta_rad;
  if (c.dissipation.enabled) {
    json bases = json::array();
    for (auto b : c.dissipation.bases) bases.push_back(name_of(b, kBases));
    j["dissipation"] = {{"kappa_mhz", c.dissipation.kappa_mhz},
                        {"t1_us", c.dissipation.t1_us},
                        {"t2_us", c.dissipation.t2_us},
                        {"basis", c.dissipation.bases.size() == 1 ? json(bases[0]) : json("both")},
                        {"dimension_cap", c.dissipation.dimension_cap}};
  }
  j["run"] = {{"frame", name_of(c.run.frame, kFrames)},
              {"dt_ps", c.run.dt_ps},
              {"record_stride", c.run.record_stride},
              {"record_fidelity", c.run.record_fidelity},
              {"output_dir", c.run.output_dir},
              {"seed", c.run.seed},
              {"wigner_half_width", c.run.wigner_half_width},
              {"wigner_points", c.run.wigner_points}};
  return j;
}

ExperimentConfig photonic_config(std::size_t num_modes, double d_max) {
  ExperimentConfig c;
  c.system.kind = SystemKind::Photonic;
  apply_kind_defaults(c);
  c.system.num_modes = num_modes;
  c.target.d_max = d_max;
  return c;
}

ExperimentConfig qubit_config(std::size_t num_qubits) {
  ExperimentConfig c;
  c.system.kind = SystemKind::Qubit;
  apply_kind_defaults(c);
  c.system.num_qubits = num_qubits;
  c.target.theta_rad = kPairPhaseTarget;
  return c;
}

std::string to_string(SystemKind kind) { return name_of(kind, kSystemKinds); }
std::string to_string(PulseSource source) { return name_of(source, kSources); }

}  // namespace stagen
