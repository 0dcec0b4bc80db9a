#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hk/harness.hpp"
#include "hk/reference.hpp"

using namespace hk;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hkprop_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal configuration gets the documented defaults") {
  const auto cfg = parse_config(R"({"model": "harmonic", "initial": {"hbar": 0.1}, "time": {"t": 1}})");
  CHECK(cfg.model_kind == ModelKind::harmonic);
  CHECK(cfg.hbar == 0.1);
  CHECK(cfg.t == 1.0);
  CHECK(cfg.steps_per_unit_time == 1000);
  CHECK(cfg.quadrature.coverage_target == doctest::Approx(1.0 - 1e-8));
  CHECK(cfg.ehrenfest_threshold == 0.1);
  CHECK(cfg.hbars() == std::vector<double>{0.1});
  CHECK(cfg.phase.theta_mode == ThetaMode::frozen_iI);
  CHECK(std::abs(cfg.compare.gamma(0, 0) - Complex(0, 2)) == 0.0);
  CHECK(resolve_reference(cfg) == ReferenceSolver::exact);
}

TEST_CASE("configuration validation") {
  CHECK(message_of(R"({"model": "harmonic", "hbar_ladder": [0.1, 0.2]})") != "");
  CHECK(message_of(R"({"model": "harmonic", "hbar_ladder": [0.1, 0.2, 0.05]})").find("decreasing") !=
        std::string::npos);
  CHECK(message_of(R"({"model": "harmonic", "hbar_ladder": [0.1]})") != "");
  CHECK(message_of(R"({"model": "harmonic", "foo": 1})").find("foo") != std::string::npos);
  CHECK(message_of(R"({"model": "harmonic", "initial": {"hbar": 0.1, "bar": 2}})").find("initial.bar") !=
        std::string::npos);
  CHECK(message_of(R"({"model": "harmonic", "ehrenfest": {"threshold": 0}})").find("threshold") !=
        std::string::npos);
  CHECK(message_of(R"({"model": "harmonic", "time": {"t": 1, "horizon": 2, "samples": [0.5, 3]}})") != "");
  CHECK(message_of(R"({"model": "rotor"})").find("model") != std::string::npos);
  CHECK(message_of(R"({"model": "harmonic", "hk": {"order": 1}})") != "");
  CHECK(message_of(R"({"model": "harmonic", "hk": {"theta_mode": "constant"}})").find("theta") !=
        std::string::npos);
  CHECK(message_of("{not json") != "");
  CHECK(message_of(R"({"model": "pendulum", "initial": {"width": {"re": 0, "im": -1}}})") != "");
}

TEST_CASE("configuration echo parses back to the same document") {
  const auto cfg = parse_config(R"({"model": {"kind": "pendulum", "strength": 0.5},
    "initial": {"q": [0.2], "p": [1], "width": {"re": 0.1, "im": 1.5}, "hbar": 0.05},
    "hk": {"theta_mode": "constant", "theta": 2.0, "gamma": 1.5},
    "time": {"t": 1, "horizon": 3, "samples": [0.5, 1, 3]},
    "hbar_ladder": [0.1, 0.05, 0.025], "seed": 4})");
  const auto echo = to_json(cfg);
  const auto again = to_json(parse_config(echo.dump()));
  CHECK(echo == again);
  CHECK(echo["seed"] == 4);
}

TEST_CASE("fits and tables") {
  const auto f = fit_loglog({0.1, 0.05, 0.025}, {0.2, 0.1, 0.05});
  CHECK(f.valid);
  CHECK(f.slope == doctest::Approx(1.0));
  CHECK(fit_through_origin({1, 2}, {2, 4}) == doctest::Approx(2.0));
  ErrorTable t;
  ErrorRow r;
  r.hbar = 0.1;
  r.t = 1;
  r.error = 0.5;
  t.add(r);
  CHECK_THROWS_AS(t.add(r), Error);
  r.t = 2;
  r.error = -1;
  CHECK_THROWS_AS(t.add(r), Error);
}

TEST_CASE("state grid keeps a power-of-two size and resolves the momentum") {
  const auto cfg = parse_config(R"({"model": "pendulum", "initial": {"p": [1], "hbar": 0.05}})");
  const GridSpec g = state_grid(cfg, 0.05);
  CHECK((g.counts[0] & (g.counts[0] - 1)) == 0);
  const double p_cut = 1.0 + 3.0 + 8.0 * std::sqrt(0.05);
  CHECK(M_PI * 0.05 / g.spacing(0) >= p_cut);
  CHECK(l2_norm(initial_state(cfg, 0.05)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("harmonic scaling sits at the quadrature floor") {
  const auto cfg = parse_config(R"({"model": "harmonic", "initial": {"q": [0.5], "p": [0.5]},
    "time": {"t": 1}, "hbar_ladder": [0.1, 0.05, 0.025]})");
  const auto r = run_scaling_study(cfg);
  for (const auto& row : r.table.rows()) {
    CHECK(row.error <= 1e-6);
    CHECK(row.at_floor);
  }
  CHECK(r.quadrature_floor);
  CHECK_FALSE(r.fit.valid);
  CHECK(r.reference_crosscheck_kind == "exact_vs_split");
  CHECK(r.reference_crosscheck <= 1e-6);
}

TEST_CASE("harmonic Ehrenfest sweep never crosses") {
  const auto cfg = parse_config(R"({"model": "harmonic", "initial": {"p": [0.5]},
    "time": {"horizon": 3}, "hbar_ladder": [0.1, 0.05, 0.025], "ehrenfest": {"time_step": 1.5}})");
  const auto r = run_ehrenfest(cfg);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) CHECK_FALSE(row.t_star.has_value());
  CHECK(r.nondecreasing);
  CHECK_FALSE(r.fit_valid);
  CHECK(r.delta == doctest::Approx(1.0));
}

TEST_CASE("phase invariance of identical and equivalent choices") {
  const auto same = parse_config(R"({"model": "pendulum", "initial": {"p": [1]}, "time": {"t": 0.5},
    "compare": {"theta_mode": "frozen", "gamma": 1}, "hbar_ladder": [0.2, 0.1, 0.05]})");
  for (const auto& row : run_phase_invariance(same).table.rows()) CHECK(row.error <= 1e-12);

  const auto thawed = parse_config(R"({"model": "harmonic", "initial": {"q": [0.3], "p": [1]}, "time": {"t": 2},
    "compare": {"theta_mode": "thawed", "gamma": 1}, "hbar_ladder": [0.2, 0.1, 0.05]})");
  for (const auto& row : run_phase_invariance(thawed).table.rows()) CHECK(row.error <= 1e-10);
}

TEST_CASE("kernel peaks follow the classical flow") {
  const auto id = parse_config(R"({"model": "harmonic", "initial": {"hbar": 0.1},
    "kernel": {"operator": "identity", "y_half_width": 6}})");
  const auto ri = run_inspect_kernel(id);
  CHECK(ri.worst_peak_offset < 1.0);
  CHECK(ri.report.monotone);
  for (double o : ri.report.peak_offset) CHECK(o == doctest::Approx(0.0).epsilon(1e-12));

  const auto harm = parse_config(R"({"model": "harmonic", "initial": {"hbar": 0.1},
    "time": {"t": 1.5707963267948966}, "kernel": {"y_half_width": 6}})");
  const auto rh = run_inspect_kernel(harm);
  CHECK(rh.worst_peak_offset <= 1.0);
  for (std::size_t i = 0; i < rh.x_nodes.size(); ++i) {
    CHECK(rh.images[i].q(0) == doctest::Approx(rh.x_nodes[i].p(0)).epsilon(1e-8));
    CHECK(rh.images[i].p(0) == doctest::Approx(-rh.x_nodes[i].q(0)).epsilon(1e-8));
  }
}

TEST_CASE("an emitted error is reproduced by a single propagation job") {
  const auto scaling = parse_config(R"({"model": "pendulum", "initial": {"p": [1]}, "time": {"t": 0.5},
    "hbar_ladder": [0.2, 0.1, 0.05]})");
  const auto table = run_scaling_study(scaling).table;
  const auto single = parse_config(R"({"model": "pendulum", "initial": {"p": [1], "hbar": 0.1},
    "time": {"t": 0.5, "samples": [0.5]}})");
  const auto prop = run_propagate(single);
  CHECK(prop.table.rows().front().error == table.rows()[1].error);
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
  const std::string text = R"({"model": "pendulum", "initial": {"p": [1]}, "time": {"t": 0.5},
    "hbar_ladder": [0.2, 0.1, 0.05]})";
  auto cfg = parse_config(text);
  const fs::path a = scratch("a"), b = scratch("b"), c = scratch("c");
  const auto summary = run_command("scaling", cfg, a.string());
  run_command("scaling", cfg, b.string());
  cfg.workers = 3;
  run_command("scaling", cfg, c.string());
  const std::string first = slurp(a / "scaling.csv");
  CHECK(first.rfind("schema_version,", 0) == 0);
  CHECK(first == slurp(b / "scaling.csv"));
  CHECK(first == slurp(c / "scaling.csv"));
  CHECK(fs::exists(a / "summary.json"));
  CHECK(summary["schema_version"] == kSchemaVersion);
  CHECK(summary["command"] == "scaling");
  CHECK(summary.contains("versions"));
  CHECK_THROWS_AS(run_command("bogus", cfg, a.string()), Error);
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("propagate writes wavefunction dumps on request") {
  const fs::path out = scratch("dump");
  const auto cfg = parse_config(R"({"model": "harmonic", "initial": {"hbar": 0.1},
    "time": {"t": 1, "samples": [0.5, 1]}, "output": {"dump_wavefunctions": true}})");
  const auto summary = run_command("propagate", cfg, out.string());
  CHECK(fs::exists(out / "propagate.csv"));
  bool found = false;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().extension() == ".bin") found = true;
  CHECK(found);
  fs::remove_all(out);
}
