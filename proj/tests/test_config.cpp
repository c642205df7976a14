#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stagen/config.hpp"
#include "stagen/experiment.hpp"
#include "stagen/io.hpp"

using namespace stagen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json schema() { return json::parse(slurp(STAGEN_SCHEMA_PATH)); }

// A valid value for a schema property without a usable default.
json sample_value(const std::string& section, const std::string& key, const json& prop) {
  if (prop.contains("default")) return prop["default"];
  if (prop.contains("enum")) return prop["enum"][0];
  if (key == "num_qubits") return 1;
  if (key == "num_modes") return 2;
  if (key == "coefficients_mhz") return json::array({10.0, -5.0});
  if (key == "file") return "pulse.json";
  const std::string type = prop.value("type", "");
  if (type == "integer") return 3;
  if (type == "number") return section == "system" ? 5.0 : 2.5;
  if (type == "string") return "x";
  FAIL("no sample for " << section << "." << key);
  return nullptr;
}

json photonic_doc() { return json{{"system", {{"kind", "photonic"}}}}; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(STAGEN_TEST_SCRATCH) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int code;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + STAGEN_CLI_PATH + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                          "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& doc) {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("every documented key is accepted") {
    const json s = schema();
    for (const auto& [section, spec] : s["properties"].items()) {
      for (const auto& [key, prop] : spec["properties"].items()) {
        CAPTURE(section);
        CAPTURE(key);
        json doc = photonic_doc();
        doc[section][key] = sample_value(section, key, prop);
        if (section == "target" && key == "kind") doc[section][key] = "photonic_ghz";
        if (section == "system" && key == "kind") doc[section][key] = "photonic";
        CHECK_NOTHROW(parse_config(doc));
      }
    }
  }

  TEST_CASE("unknown keys and sections are rejected by name") {
    json doc = photonic_doc();
    doc["system"]["mode_frequncy_ghz"] = 6.6;
    try {
      parse_config(doc);
      FAIL("accepted a misspelled key");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("system.mode_frequncy_ghz") != std::string::npos);
    }
    doc = photonic_doc();
    doc["extras"] = json::object();
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    CHECK_THROWS_AS(parse_config(json::array()), ConfigError);
  }

  TEST_CASE("wrong types and out-of-range values are rejected") {
    for (const auto& patch : {json{{"system", {{"num_modes", "two"}}}}, json{{"system", {{"num_modes", 0}}}},
                              json{{"system", {{"num_qubits", 2}}}}, json{{"system", {{"mode_frequency_ghz", -1.0}}}},
                              json{{"pulse", {{"t_f_ns", 0.0}}}}, json{{"pulse", {{"source", "spline"}}}},
                              json{{"target", {{"kind", "qubit_ghz"}}}}, json{{"dissipation", {{"basis", "diagonal"}}}},
                              json{{"dissipation", {{"kappa_mhz", -1.0}}}}, json{{"run", {{"frame", "rotating"}}}}}) {
      CAPTURE(patch.dump());
      json doc = photonic_doc();
      doc.merge_patch(patch);
      CHECK_THROWS_AS(parse_config(doc), ConfigError);
    }
  }

  TEST_CASE("defaults follow the system kind") {
    const ExperimentConfig p = parse_config(photonic_doc());
    CHECK(p.system.num_qubits == 1);
    CHECK(p.system.mode_frequency_ghz == 6.6);
    CHECK(p.pulse.t_f_ns == 3.74);
    CHECK(p.target.kind == TargetKind::PhotonicGhz);
    CHECK_FALSE(p.dissipation.enabled);
    const ExperimentConfig q = parse_config(json{{"system", {{"kind", "qubit"}}}});
    CHECK(q.system.num_qubits == 2);
    CHECK(q.system.mode_frequency_ghz == 1.0);
    CHECK(q.pulse.t_f_ns == 1.89);
    CHECK(q.target.kind == TargetKind::QubitGhz);
    CHECK(q.target.theta_rad == doctest::Approx(kPi / 8.0));
    CHECK(q.omega() == doctest::Approx(kTwoPi * 1e9));
    CHECK(q.t_f() == doctest::Approx(1.89e-9));
    // A dissipation block switches the open run on.
    json d = photonic_doc();
    d["dissipation"] = json::object();
    const ExperimentConfig o = parse_config(d);
    CHECK(o.dissipation.enabled);
    CHECK(o.dissipation.bases.size() == 2);
  }

  TEST_CASE("normalized form round-trips") {
    json doc = photonic_doc();
    doc["system"]["num_modes"] = 3;
    doc["pulse"] = {{"t_f_ns", 4.0}, {"solver", "gradient_descent"}};
    doc["dissipation"] = {{"kappa_mhz", 2.0}, {"basis", "z-basis-literal"}};
    doc["run"] = {{"seed", 99}, {"record_stride", 10}};
    const json once = to_json(parse_config(doc));
    CHECK(to_json(parse_config(once)) == once);
    CHECK(once["pulse"]["solver"] == "gradient_descent");
    const json q = to_json(qubit_config(4));
    CHECK(to_json(parse_config(q)) == q);
  }

  TEST_CASE("malformed files raise ConfigError") {
    const fs::path dir = scratch("config_files");
    std::ofstream(dir / "bad.json") << "{ \"system\": ";
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
  }
}

TEST_SUITE("io") {
  TEST_CASE("pulse files reload to the same coefficients") {
    const fs::path dir = scratch("io_pulse");
    ExperimentConfig c = qubit_config(2);
    const PreparedRun designed = prepare(c);
    io::write_json(dir / "pulse.json", io::pulse_json(designed.pulse));
    c.pulse.source = PulseSource::File;
    c.pulse.file = (dir / "pulse.json").string();
    const PreparedRun loaded = prepare(c);
    for (double t : {0.1e-9, 0.9e-9, 1.7e-9}) CHECK(loaded.pulse(t) == designed.pulse(t));
    CHECK(loaded.mode_dim == designed.mode_dim);
  }

  TEST_CASE("state dumps hold raw complex128 data") {
    const fs::path dir = scratch("io_state");
    const LayoutPtr L = make_layout({QubitSpec{1.0}}, {ModeSpec{1.0, 3}});
    const StateVector psi(L, {1.0, kI, 0.0, -0.5, 0.25, 0.0});
    io::write_state(dir / "psi", psi);
    const std::string bytes = slurp(dir / "psi.bin");
    REQUIRE(bytes.size() == 6 * 16);
    double re = 0.0, im = 0.0;
    std::memcpy(&re, bytes.data() + 16, 8);
    std::memcpy(&im, bytes.data() + 24, 8);
    CHECK(re == psi[1].real());
    CHECK(im == psi[1].imag());
    const json meta = io::read_json(dir / "psi.json");
    CHECK(meta["kind"] == "state_vector");
    CHECK(meta["data"] == "psi.bin");
  }

  TEST_CASE("csv output is full precision") {
    const fs::path dir = scratch("io_csv");
    io::write_csv(dir / "x.csv", {"a", "b"}, {{0.1, 1.0 / 3.0}});
    const std::string text = slurp(dir / "x.csv");
    CHECK(text.rfind("a,b\n", 0) == 0);
    CHECK(text.find("0.33333333333333331") != std::string::npos);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("configuration errors exit 2 with a JSON error") {
    const fs::path dir = scratch("cli_errors");
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{ not json";
    CliResult r = cli("evolve -c \"" + bad.string() + "\" -o \"" + (dir / "o").string() + "\"", dir);
    CHECK(r.code == 2);
    const json err = json::parse(r.err);
    CHECK(err.contains("error"));
    const fs::path unknown = write_config(dir, "unknown.json", json{{"system", {{"kind", "qubit"}, {"colour", 1}}}});
    CHECK(cli("design -c \"" + unknown.string() + "\"", dir).code == 2);
    CHECK(cli("transmogrify", dir).code == 2);
    CHECK(cli("", dir).code == 2);
    CHECK(cli("reproduce fig9 -o \"" + (dir / "o").string() + "\"", dir).code == 2);
  }

  TEST_CASE("unconverged design exits 1") {
    const fs::path dir = scratch("cli_numeric");
    const fs::path c = write_config(dir, "c.json", json{{"system", {{"kind", "qubit"}}},
                                                        {"pulse", {{"init", "random"}, {"max_iterations", 1}}},
                                                        {"run", {{"seed", 5}}}});
    const CliResult r = cli("design -c \"" + c.string() + "\" -o \"" + (dir / "o").string() + "\"", dir);
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).contains("error"));
  }

  TEST_CASE("evolve is deterministic and reports refuse mixed conventions") {
    const fs::path dir = scratch("cli_evolve");
    const fs::path c = write_config(dir, "c.json", json{{"system", {{"kind", "qubit"}}}});
    REQUIRE(cli("evolve -c \"" + c.string() + "\" -o \"" + (dir / "a").string() + "\"", dir).code == 0);
    REQUIRE(cli("evolve -c \"" + c.string() + "\" -o \"" + (dir / "b").string() + "\"", dir).code == 0);
    json ra = io::read_json(dir / "a" / "report.json"), rb = io::read_json(dir / "b" / "report.json");
    CHECK(ra["closed"]["fidelities"]["target"].get<double>() > 0.999);
    // Only the output directory differs between the two runs.
    ra["config"]["run"].erase("output_dir");
    rb["config"]["run"].erase("output_dir");
    CHECK(ra.dump() == rb.dump());
    CHECK(slurp(dir / "a" / "final_state.bin") == slurp(dir / "b" / "final_state.bin"));

    const fs::path lab = write_config(dir, "lab.json", json{{"system", {{"kind", "qubit"}}}, {"run", {{"frame", "lab"}}}});
    REQUIRE(cli("evolve -c \"" + lab.string() + "\" -o \"" + (dir / "l").string() + "\"", dir).code == 0);
    const std::string a = "\"" + (dir / "a" / "report.json").string() + "\"";
    CHECK(cli("report " + a + " \"" + (dir / "b" / "report.json").string() + "\"", dir).code == 0);
    CHECK(cli("report " + a + " \"" + (dir / "l" / "report.json").string() + "\"", dir).code == 2);
  }
}
