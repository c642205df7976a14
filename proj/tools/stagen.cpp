// stagen: pulse design and verification front end.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

#include "stagen/experiment.hpp"
#include "stagen/functionals.hpp"
#include "stagen/io.hpp"
#include "stagen/targets.hpp"

namespace {

using namespace stagen;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

int fail(int code, const std::string& kind, const std::string& message) {
  const json err = {{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}};
  std::cerr << err.dump() << '\n';
  return code;
}

struct Options {
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::string figure;
  std::string wigner_state = "reduced";
  std::size_t wigner_mode = 0;
  std::vector<std::string> reports;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig c = load_config(o.config);
  if (!o.out.empty()) c.run.output_dir = o.out;
  return c;
}

void write_timing(const fs::path& dir, const json& timing) { io::write_json(dir / "timing.json", timing); }

void write_pulse_files(const fs::path& dir, const PreparedRun& run) {
  io::write_json(dir / "pulse.json", io::pulse_json(run.pulse));
  io::write_pulse_csv(dir / "pulse.csv", run.pulse, run.config.omega());
  io::write_functionals_csv(dir / "functionals.csv", run.pulse, run.config.omega());
}

// Runs f(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- subcommands ----

int cmd_design(const Options& o) {
  ExperimentConfig c = load(o);
  if (c.pulse.source != PulseSource::Design) throw ConfigError("design needs pulse.source 'design'");
  const fs::path dir = c.run.output_dir;
  const PreparedRun run = prepare(c);
  const DesignResult& d = *run.design;
  json doc = {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
              {"config", to_json(c)},
              {"conventions", conventions_json(c)},
              {"design", design_json(d)}};
  io::write_json(dir / "design.json", doc);
  write_pulse_files(dir, run);
  std::printf("design %s: %s after %zu iterations, residuals", to_string(c.system.kind).c_str(), d.method.c_str(),
              d.iterations);
  for (double r : d.residuals) std::printf(" %.3e", r);
  std::printf(", peak g/2pi = %.3f MHz\n", hz_from_angular(d.peak_g) * 1e-6);
  if (!d.converged) return fail(kExitNumerical, "numerical", "design did not reach the residual tolerance");
  return kExitOk;
}

int cmd_evolve(const Options& o) {
  ExperimentConfig c = load(o);
  const fs::path dir = c.run.output_dir;
  const PreparedRun run = prepare(c);
  const ClosedOutcome out = run_closed(run);
  io::write_json(dir / "report.json", run_report(run, &out, nullptr));
  io::write_trajectory_csv(dir / "trajectory.csv", out.record, c.system.num_qubits, out.fidelity_trace);
  io::write_state(dir / "final_state", *out.record.final_state);
  io::write_json(dir / "pulse.json", io::pulse_json(run.pulse));
  write_timing(dir, {{"closed_seconds", out.seconds}});
  std::printf("evolve: dim %zu, %zu steps, fidelity %.6f", run.layout->dimension(), out.record.steps, out.fidelity);
  if (c.target.kind == TargetKind::QubitGhz) std::printf(" (relabeled %.6f)", out.fidelity_relabeled);
  std::printf(", initial-state overlap %.6f\n", out.fidelity_initial);
  return kExitOk;
}

int cmd_open_evolve(const Options& o) {
  ExperimentConfig c = load(o);
  c.dissipation.enabled = true;
  const fs::path dir = c.run.output_dir;
  const PreparedRun run = prepare(c);
  const std::vector<OpenOutcome> outs = run_open(run);
  io::write_json(dir / "report.json", run_report(run, nullptr, &outs));
  json timing = json::object();
  for (const OpenOutcome& out : outs) {
    const std::string b = to_string(out.basis);
    io::write_trajectory_csv(dir / ("trajectory_" + b + ".csv"), out.record, c.system.num_qubits);
    io::write_state(dir / ("final_density_" + b), *out.record.final_density);
    timing[b + "_seconds"] = out.seconds;
    std::printf("open-evolve %s: fidelity %.6f", b.c_str(), out.fidelity);
    if (c.target.kind == TargetKind::QubitGhz) std::printf(" (relabeled %.6f)", out.fidelity_relabeled);
    std::printf("\n");
  }
  write_timing(dir, timing);
  return kExitOk;
}

json write_wigner_files(const fs::path& dir, const std::string& stem, const DensityMatrix& mode, double half_width,
                        std::size_t points) {
  const WignerGrid grid = wigner(mode, WignerGridSpec::square(half_width, points));
  io::write_wigner_csv(dir / (stem + ".csv"), grid);
  io::write_wigner_matrix(dir / (stem + "_matrix.txt"), grid);
  io::write_marginals(dir / (stem + "_marginal"), wigner_marginals(grid));
  json s = {{"integral", grid.integral()}, {"min", grid.min()}, {"half_width", half_width}, {"points", points}};
  if (!grid.warning.empty()) s["warning"] = grid.warning;
  return s;
}

int cmd_wigner(const Options& o) {
  ExperimentConfig c = load(o);
  if (c.system.kind != SystemKind::Photonic) throw ConfigError("wigner needs a photonic system");
  if (o.wigner_mode >= c.system.num_modes) throw ConfigError("--mode is out of range");
  const fs::path dir = c.run.output_dir;
  const PreparedRun run = prepare(c);
  const ClosedOutcome out = run_closed(run);
  const StateVector& psi = *out.record.final_state;
  DensityMatrix mode =
      o.wigner_state == "cat-branch" ? rotated_cat_branch(psi) : reduced_mode(psi, o.wigner_mode);
  json s = write_wigner_files(dir, "wigner", mode, wigner_half_width(run), c.run.wigner_points);
  s["state"] = o.wigner_state;
  s["fidelity"] = out.fidelity;
  io::write_json(dir / "wigner.json", s);
  std::printf("wigner %s: min W = %.6f, integral %.6f\n", o.wigner_state.c_str(), s["min"].get<double>(),
              s["integral"].get<double>());
  return kExitOk;
}

// ---- reproduce ----

json tool_header() { return {{"name", kToolName}, {"version", kToolVersion}}; }

ExperimentConfig photonic(std::size_t M, double d_max) {
  ExperimentConfig c = photonic_config(M, d_max);
  c.dissipation.dimension_cap = 2048;
  return c;
}

void reproduce_design_figure(const fs::path& dir, bool functionals) {
  json summary = {{"tool", tool_header()}, {"conventions", conventions_json(qubit_config(2))}};
  auto emit = [&](const ExperimentConfig& c, const std::string& name) {
    const PreparedRun run = prepare(c);
    if (functionals) {
      io::write_functionals_csv(dir / ("functionals_" + name + ".csv"), run.pulse, c.omega());
    } else {
      io::write_pulse_csv(dir / ("pulse_" + name + ".csv"), run.pulse, c.omega());
    }
    summary[name] = design_json(*run.design);
  };
  for (double d : {1.0, 3.0, 5.0}) emit(photonic(1, d), "photonic_d" + std::to_string(static_cast<int>(d)));
  emit(qubit_config(2), "qubit");
  io::write_json(dir / "summary.json", summary);
}

void reproduce_fig3(const fs::path& dir) {
  json summary = {{"tool", tool_header()}, {"conventions", conventions_json(photonic(3, 3.0))}};
  for (double d : {1.0, 3.0}) {
    ExperimentConfig c = photonic(3, d);
    c.run.record_fidelity = true;
    c.run.record_stride = 50;
    const PreparedRun run = prepare(c);
    const ClosedOutcome out = run_closed(run);
    const std::string tag = "d" + std::to_string(static_cast<int>(d));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < out.record.times.size(); ++i) {
      rows.push_back({out.record.times[i] / run.pulse.t_f(), out.fidelity_trace[i]});
    }
    io::write_csv(dir / ("fidelity_" + tag + ".csv"), {"t_over_tf", "fidelity"}, rows);
    summary["fidelity_" + tag] = out.fidelity;
    if (d == 3.0) {
      summary["wigner_mode0"] = write_wigner_files(dir, "wigner_mode0", reduced_mode(*out.record.final_state, 0),
                                                   wigner_half_width(run), c.run.wigner_points);
    }
  }
  // Negativity shows in the odd-cat branch of a single-mode run.
  const PreparedRun one = prepare(photonic(1, 3.0));
  const ClosedOutcome out = run_closed(one);
  summary["wigner_cat_branch"] = write_wigner_files(dir, "wigner_cat_branch", rotated_cat_branch(*out.record.final_state),
                                                    wigner_half_width(one), one.config.run.wigner_points);
  io::write_json(dir / "summary.json", summary);
}

void reproduce_sweep(const fs::path& dir, const std::vector<ExperimentConfig>& configs, const std::string& key,
                     const std::vector<std::size_t>& values, std::size_t jobs) {
  std::vector<ClosedOutcome> outs(configs.size());
  std::vector<std::size_t> dims(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    const PreparedRun run = prepare(configs[i]);
    dims[i] = run.layout->dimension();
    outs[i] = run_closed(run);
    std::printf("  %s = %zu: fidelity %.6f (%.1f s)\n", key.c_str(), values[i], outs[i].fidelity, outs[i].seconds);
    std::fflush(stdout);
  });
  std::vector<std::vector<double>> rows;
  json timing = json::object();
  for (std::size_t i = 0; i < outs.size(); ++i) {
    rows.push_back({static_cast<double>(values[i]), static_cast<double>(dims[i]), outs[i].fidelity});
    timing[key + "=" + std::to_string(values[i])] = outs[i].seconds;
  }
  io::write_csv(dir / "fidelity.csv", {key, "dimension", "fidelity"}, rows);
  io::write_json(dir / "summary.json", {{"tool", tool_header()}, {"conventions", conventions_json(configs.front())}});
  write_timing(dir, timing);
}

void reproduce_fig5(const fs::path& dir) {
  ExperimentConfig c = qubit_config(2);
  c.run.record_stride = 10;
  c.run.record_fidelity = true;
  const PreparedRun run = prepare(c);
  const ClosedOutcome out = run_closed(run);
  io::write_trajectory_csv(dir / "trajectory.csv", out.record, 2, out.fidelity_trace);
  io::write_json(dir / "report.json", run_report(run, &out, nullptr));
}

int cmd_reproduce(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("out") / o.figure : fs::path(o.out);
  io::ensure_dir(dir);
  std::printf("reproduce %s -> %s\n", o.figure.c_str(), dir.c_str());
  if (o.figure == "fig1") {
    reproduce_design_figure(dir, false);
  } else if (o.figure == "fig2") {
    reproduce_design_figure(dir, true);
  } else if (o.figure == "fig3") {
    reproduce_fig3(dir);
  } else if (o.figure == "fig4a") {
    std::vector<ExperimentConfig> cs;
    const std::vector<std::size_t> Ms{1, 2, 3, 4};
    for (std::size_t M : Ms) cs.push_back(photonic(M, 3.0));
    reproduce_sweep(dir, cs, "M", Ms, o.jobs);
  } else if (o.figure == "fig4b") {
    std::vector<ExperimentConfig> cs;
    const std::vector<std::size_t> Ns{2, 4, 6, 8, 10, 12};
    for (std::size_t N : Ns) cs.push_back(qubit_config(N));
    reproduce_sweep(dir, cs, "N", Ns, o.jobs);
  } else if (o.figure == "fig5") {
    reproduce_fig5(dir);
  } else {
    throw ConfigError("unknown figure id '" + o.figure + "' (fig1, fig2, fig3, fig4a, fig4b, fig5)");
  }
  return kExitOk;
}

// ---- report ----

void print_fidelities(const std::string& name, const json& r) {
  if (r.contains("closed")) {
    std::printf("%s closed:", name.c_str());
    for (const auto& [k, v] : r["closed"]["fidelities"].items()) std::printf(" %s=%.6f", k.c_str(), v.get<double>());
    std::printf("\n");
  }
  if (r.contains("open")) {
    for (const auto& run : r["open"]) {
      std::printf("%s open[%s]:", name.c_str(), run["dissipator_basis"].get<std::string>().c_str());
      for (const auto& [k, v] : run["fidelities"].items()) std::printf(" %s=%.6f", k.c_str(), v.get<double>());
      std::printf("\n");
    }
  }
}

int cmd_report(const Options& o) {
  std::vector<json> docs;
  for (const auto& path : o.reports) {
    json d = io::read_json(path);
    if (!d.is_object() || !d.contains("conventions") || !d.contains("tool")) {
      throw ConfigError(path + " is not a run report");
    }
    docs.push_back(std::move(d));
  }
  for (std::size_t i = 1; i < docs.size(); ++i) {
    const auto diff = convention_mismatch(docs.front(), docs[i]);
    if (!diff.empty()) {
      std::string keys;
      for (const auto& k : diff) keys += (keys.empty() ? "" : ", ") + k;
      throw ConfigError("reports " + o.reports.front() + " and " + o.reports[i] +
                        " use different conventions (" + keys + "); refusing to compare");
    }
  }
  std::printf("conventions: %s\n", docs.front()["conventions"].dump().c_str());
  for (std::size_t i = 0; i < docs.size(); ++i) print_fidelities(o.reports[i], docs[i]);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse design and verification for longitudinally coupled qubit-resonator systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Options o;

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "Experiment config JSON")->required();
    sub->add_option("-o,--out", o.out, "Output directory (overrides run.output_dir)");
  };
  CLI::App* design = app.add_subcommand("design", "Design a coupling pulse");
  with_config(design);
  CLI::App* evolve = app.add_subcommand("evolve", "Closed-system evolution and fidelity report");
  with_config(evolve);
  CLI::App* open = app.add_subcommand("open-evolve", "Lindblad evolution and fidelity report");
  with_config(open);
  CLI::App* wig = app.add_subcommand("wigner", "Wigner function of a final mode state");
  with_config(wig);
  wig->add_option("--state", o.wigner_state, "reduced | cat-branch")
      ->check(CLI::IsMember({"reduced", "cat-branch"}));
  wig->add_option("--mode", o.wigner_mode, "Mode index for the reduced state");
  CLI::App* repro = app.add_subcommand("reproduce", "Emit the data behind a figure");
  repro->add_option("figure", o.figure, "fig1 | fig2 | fig3 | fig4a | fig4b | fig5")->required();
  repro->add_option("-o,--out", o.out, "Output directory (default out/<figure>)");
  repro->add_option("-j,--jobs", o.jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
  CLI::App* report = app.add_subcommand("report", "Summarize and compare run reports");
  report->add_option("reports", o.reports, "RunReport JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitConfig, "usage", e.what());
  }

  try {
    if (*design) return cmd_design(o);
    if (*evolve) return cmd_evolve(o);
    if (*open) return cmd_open_evolve(o);
    if (*wig) return cmd_wigner(o);
    if (*repro) return cmd_reproduce(o);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const std::out_of_range& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const std::length_error& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const NumericalError& e) {
    return fail(kExitNumerical, "numerical", e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumerical, "runtime", e.what());
  }
  return kExitConfig;
}
