#include "stagen/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <memory>

#include "stagen/functionals.hpp"

namespace stagen::io {

using nlohmann::json;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_write(const fs::path& path, const char* mode = "w") {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void put_row(std::FILE* f, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) std::fprintf(f, i ? ",%.17g" : "%.17g", row[i]);
  std::fputc('\n', f);
}

void put_header(std::FILE* f, const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f, i ? ",%s" : "%s", header[i].c_str());
  std::fputc('\n', f);
}

std::string qubit_label(std::size_t index, std::size_t N) {
  std::string s(N, 'g');
  for (std::size_t n = 0; n < N; ++n) {
    if ((index >> (N - 1 - n)) & 1U) s[n] = 'e';
  }
  return s;
}

json layout_json(const TensorLayout& L) {
  json q = json::array(), m = json::array();
  for (const auto& spec : L.qubits()) q.push_back({{"frequency_rad_per_s", spec.frequency}});
  for (const auto& spec : L.modes()) m.push_back({{"frequency_rad_per_s", spec.frequency}, {"dim", spec.dim}});
  return {{"qubits", q}, {"modes", m}, {"dimension", L.dimension()}, {"ordering", "qubits then modes, row-major"}};
}

void write_raw(const fs::path& path, const cplx* data, std::size_t count) {
  static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
  File f = open_write(path, "wb");
  if (std::fwrite(data, sizeof(cplx), count, f.get()) != count) throw std::runtime_error("short write to " + path.string());
}

}  // namespace

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& doc) {
  File f = open_write(path);
  const std::string s = doc.dump(2);
  std::fprintf(f.get(), "%s\n", s.c_str());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

json pulse_json(const CouplingProfile& pulse) {
  json j;
  j["t_f_seconds"] = pulse.t_f();
  if (const FourierPulse* fp = pulse.fourier()) {
    j["coefficients_rad_per_s"] = std::vector<double>(fp->coefficients().begin(), fp->coefficients().end());
  } else {
    j["constant_g_rad_per_s"] = pulse.constant()->g;
  }
  return j;
}

void write_pulse_csv(const fs::path& path, const CouplingProfile& pulse, double omega, std::size_t samples) {
  const AuxiliaryTrajectory aux = auxiliary_from_pulse(pulse, omega, samples);
  const PhaseTrajectory phase = lagrangian_phase(pulse, omega, samples);
  File f = open_write(path);
  put_header(f.get(), {"t", "g", "g_c", "g_c_dot", "beta"});
  for (std::size_t i = 0; i < aux.t.size(); ++i) {
    put_row(f.get(), {aux.t[i], pulse(aux.t[i]), aux.g_c[i], aux.g_c_dot[i], phase.beta[i]});
  }
}

void write_functionals_csv(const fs::path& path, const CouplingProfile& pulse, double omega, std::size_t samples) {
  const GateTrajectories tr = gate_trajectories(pulse, omega, samples);
  File f = open_write(path);
  put_header(f.get(), {"t", "re_alpha", "im_alpha", "re_A", "im_A", "re_B", "im_B"});
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    put_row(f.get(), {tr.t[i], tr.alpha[i].real(), tr.alpha[i].imag(), tr.A[i].real(), tr.A[i].imag(), tr.B[i].real(),
                      tr.B[i].imag()});
  }
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec, std::size_t num_qubits,
                          const std::vector<double>& fidelity) {
  std::vector<std::string> header{"t", "norm"};
  const std::size_t M = rec.mode_mean.empty() ? 0 : rec.mode_mean.front().size();
  for (std::size_t m = 0; m < M; ++m) {
    const std::string k = std::to_string(m);
    header.insert(header.end(), {"re_a" + k, "im_a" + k, "re_branch_a" + k, "im_branch_a" + k});
  }
  // Every computational label up to four qubits, the two GHZ labels beyond.
  std::vector<std::size_t> pop_index;
  if (!rec.qubit_populations.empty() && num_qubits > 0) {
    const std::size_t dim = std::size_t{1} << num_qubits;
    if (num_qubits <= 4) {
      for (std::size_t i = 0; i < dim; ++i) pop_index.push_back(i);
    } else {
      pop_index = {0, dim - 1};
    }
    for (std::size_t i : pop_index) header.push_back("P_" + qubit_label(i, num_qubits));
  }
  if (!fidelity.empty()) header.push_back("fidelity");

  File f = open_write(path);
  put_header(f.get(), header);
  for (std::size_t r = 0; r < rec.times.size(); ++r) {
    std::vector<double> row{rec.times[r], rec.norms[r]};
    for (std::size_t m = 0; m < M; ++m) {
      row.insert(row.end(), {rec.mode_mean[r][m].real(), rec.mode_mean[r][m].imag(), rec.branch_mean[r][m].real(),
                             rec.branch_mean[r][m].imag()});
    }
    for (std::size_t i : pop_index) row.push_back(rec.qubit_populations[r][i]);
    if (!fidelity.empty()) row.push_back(fidelity.at(r));
    put_row(f.get(), row);
  }
}

void write_wigner_csv(const fs::path& path, const WignerGrid& grid) {
  File f = open_write(path);
  put_header(f.get(), {"x", "p", "W"});
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    for (std::size_t ip = 0; ip < grid.p.size(); ++ip) put_row(f.get(), {grid.x[ix], grid.p[ip], grid.at(ix, ip)});
  }
}

void write_wigner_matrix(const fs::path& path, const WignerGrid& grid) {
  File f = open_write(path);
  for (std::size_t ix = 0; ix < grid.x.size(); ++ix) {
    for (std::size_t ip = 0; ip < grid.p.size(); ++ip) std::fprintf(f.get(), ip ? " %.17g" : "%.17g", grid.at(ix, ip));
    std::fputc('\n', f.get());
  }
}

void write_marginals(const fs::path& stem, const Marginals& mg) {
  std::vector<std::vector<double>> xs, ps;
  for (std::size_t i = 0; i < mg.x.size(); ++i) xs.push_back({mg.x[i], mg.px[i]});
  for (std::size_t i = 0; i < mg.p.size(); ++i) ps.push_back({mg.p[i], mg.pp[i]});
  write_csv(stem.string() + "_x.csv", {"x", "P"}, xs);
  write_csv(stem.string() + "_p.csv", {"p", "P"}, ps);
}

void write_state(const fs::path& stem, const StateVector& psi) {
  const fs::path bin = stem.string() + ".bin";
  write_raw(bin, psi.amplitudes().data(), psi.size());
  write_json(stem.string() + ".json", {{"kind", "state_vector"},
                                       {"layout", layout_json(psi.layout())},
                                       {"encoding", "complex128 little-endian, re/im interleaved"},
                                       {"data", bin.filename().string()}});
}

void write_state(const fs::path& stem, const DensityMatrix& rho) {
  const fs::path bin = stem.string() + ".bin";
  const DenseMatrix& e = rho.entries();
  write_raw(bin, e.data(), static_cast<std::size_t>(e.size()));
  write_json(stem.string() + ".json", {{"kind", "density_matrix"},
                                       {"layout", layout_json(rho.layout())},
                                       {"encoding", "complex128 little-endian, re/im interleaved, row-major"},
                                       {"data", bin.filename().string()}});
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  File f = open_write(path);
  put_header(f.get(), header);
  for (const auto& row : rows) put_row(f.get(), row);
}

}  // namespace stagen::io
