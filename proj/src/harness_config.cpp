#include "hk/harness_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace hk {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// View of one JSON object that rejects keys outside an allowed set.
class Section {
public:
  Section(const json& j, std::string path, std::initializer_list<const char*> keys)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(label() + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items())
      if (!allowed.count(key)) throw ConfigError("unknown key '" + join(key) + "'");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_number()) throw ConfigError("'" + join(key) + "' must be a number");
    return at(key).get<double>();
  }
  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_number_integer()) throw ConfigError("'" + join(key) + "' must be an integer");
    return at(key).get<int>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) throw ConfigError("'" + join(key) + "' must be a string");
    return at(key).get<std::string>();
  }
  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_boolean()) throw ConfigError("'" + join(key) + "' must be true or false");
    return at(key).get<bool>();
  }
  std::vector<double> numbers(const char* key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError("'" + join(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("'" + join(key) + "' must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  RealVector vector(const char* key, int d, double fallback) const {
    if (!has(key)) return RealVector::Constant(d, fallback);
    const std::vector<double> v = numbers(key);
    if (static_cast<int>(v.size()) != d)
      throw ConfigError("'" + join(key) + "' must have " + std::to_string(d) + " entries");
    return Eigen::Map<const RealVector>(v.data(), d);
  }
  RealMatrix real_matrix(const json& v, const std::string& name, int d) const {
    if (v.is_number()) return v.get<double>() * RealMatrix::Identity(d, d);
    if (!v.is_array() || static_cast<int>(v.size()) != d)
      throw ConfigError("'" + name + "' must be a number or a " + std::to_string(d) + "x" + std::to_string(d) +
                        " array");
    RealMatrix m(d, d);
    for (int r = 0; r < d; ++r) {
      if (!v[r].is_array() || static_cast<int>(v[r].size()) != d)
        throw ConfigError("'" + name + "' row " + std::to_string(r) + " has the wrong length");
      for (int c = 0; c < d; ++c) {
        if (!v[r][c].is_number()) throw ConfigError("'" + name + "' entries must be numbers");
        m(r, c) = v[r][c].get<double>();
      }
    }
    return m;
  }
  RealMatrix real_matrix(const char* key, int d, const RealMatrix& fallback) const {
    if (!has(key)) return fallback;
    return real_matrix(at(key), join(key), d);
  }
  /// Width: a number s means i*s*I; an object {"re": ..., "im": ...} gives the full matrix.
  ComplexMatrix width(const char* key, int d, const ComplexMatrix& fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (v.is_number()) return kI * v.get<double>() * ComplexMatrix::Identity(d, d);
    Section w(v, join(key), {"re", "im"});
    const RealMatrix re = w.real_matrix("re", d, RealMatrix::Zero(d, d));
    if (!w.has("im")) throw ConfigError("'" + join(key) + ".im' is required");
    const RealMatrix im = w.real_matrix("im", d, RealMatrix::Zero(d, d));
    ComplexMatrix m = re.cast<Complex>() + kI * im.cast<Complex>();
    try {
      (void)SiegelMatrix(m);
    } catch (const Error& e) {
      throw ConfigError("'" + join(key) + "': " + e.what());
    }
    return m;
  }

private:
  std::string label() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
};

PhaseChoice parse_phase(const Section& s, int d, const PhaseChoice& fallback) {
  PhaseChoice c;
  try {
    c.theta_mode = s.has("theta_mode") ? parse_theta_mode(s.text("theta_mode", "")) : fallback.theta_mode;
  } catch (const Error& e) {
    throw ConfigError("'" + s.join("theta_mode") + "': " + e.what());
  }
  c.gamma = s.width("gamma", d, fallback.gamma);
  if (s.has("theta"))
    c.theta = s.width("theta", d, ComplexMatrix());
  else
    c.theta = fallback.theta;
  if (c.theta_mode == ThetaMode::constant && !c.theta)
    throw ConfigError("'" + s.join("theta") + "' is required when theta_mode is constant");
  return c;
}

ordered_json matrix_json(const ComplexMatrix& m) {
  ordered_json re = ordered_json::array(), im = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json rr = ordered_json::array(), ri = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return ordered_json{{"re", re}, {"im", im}};
}

ordered_json real_json(const RealMatrix& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

ordered_json vector_json(const RealVector& v) { return ordered_json(std::vector<double>(v.data(), v.data() + v.size())); }

ordered_json phase_json(const PhaseChoice& c) {
  ordered_json j{{"theta_mode", to_string(c.theta_mode)}, {"gamma", matrix_json(c.gamma)}};
  j["theta"] = c.theta ? matrix_json(*c.theta) : ordered_json(nullptr);
  return j;
}

}  // namespace

ReferenceSolver parse_reference_solver(const std::string& name) {
  if (name == "auto") return ReferenceSolver::automatic;
  if (name == "exact") return ReferenceSolver::exact;
  if (name == "split") return ReferenceSolver::split;
  throw Error("unknown reference solver '" + name + "' (expected auto, exact or split)");
}

std::string to_string(ReferenceSolver s) {
  switch (s) {
    case ReferenceSolver::automatic: return "auto";
    case ReferenceSolver::exact: return "exact";
    case ReferenceSolver::split: return "split";
  }
  return "?";
}

HKConfig ExperimentConfig::hk_config(const PhaseChoice& choice) const {
  std::optional<SiegelMatrix> theta;
  if (choice.theta) theta = SiegelMatrix(*choice.theta);
  HKConfig c = make_hk_config(choice.theta_mode, SiegelMatrix(choice.gamma), theta);
  c.quadrature = quadrature;
  c.quadrature.workers = workers;
  c.steps_per_unit_time = steps_per_unit_time;
  c.workers = workers;
  return c;
}

std::vector<double> ExperimentConfig::hbars() const {
  return hbar_ladder.empty() ? std::vector<double>{hbar} : hbar_ladder;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  const Section top(doc, "",
                    {"model", "initial", "hk", "compare", "time", "hbar_ladder", "quadrature", "grid", "reference",
                     "ehrenfest", "kernel", "output", "seed", "workers"});
  ExperimentConfig cfg;

  // model
  if (!top.has("model")) throw ConfigError("'model' is required");
  if (top.at("model").is_string()) {
    try {
      cfg.model_kind = parse_model_kind(top.text("model", ""));
    } catch (const Error& e) {
      throw ConfigError(std::string("'model': ") + e.what());
    }
  } else {
    const Section m(top.at("model"), "model", {"kind", "dim", "omega", "strength", "G", "L", "K"});
    if (!m.has("kind")) throw ConfigError("'model.kind' is required");
    try {
      cfg.model_kind = parse_model_kind(m.text("kind", ""));
    } catch (const Error& e) {
      throw ConfigError(std::string("'model.kind': ") + e.what());
    }
    cfg.model_params.dim = m.integer("dim", 1);
    if (cfg.model_params.dim < 1 || cfg.model_params.dim > 3) throw ConfigError("'model.dim' must be 1, 2 or 3");
    const int d = cfg.model_params.dim;
    cfg.model_params.omega = m.number("omega", 1.0);
    cfg.model_params.strength = m.number("strength", 1.0);
    cfg.model_params.G = m.real_matrix("G", d, RealMatrix::Identity(d, d));
    cfg.model_params.L = m.real_matrix("L", d, RealMatrix::Zero(d, d));
    cfg.model_params.K = m.real_matrix("K", d, RealMatrix::Identity(d, d));
  }
  const int d = cfg.dim();
  if (cfg.model_params.G.size() == 0) {
    cfg.model_params.G = RealMatrix::Identity(d, d);
    cfg.model_params.L = RealMatrix::Zero(d, d);
    cfg.model_params.K = RealMatrix::Identity(d, d);
  }
  try {
    (void)cfg.model();
  } catch (const Error& e) {
    throw ConfigError(std::string("'model': ") + e.what());
  }

  // initial state
  const ComplexMatrix unit = kI * ComplexMatrix::Identity(d, d);
  cfg.q0 = RealVector::Zero(d);
  cfg.p0 = RealVector::Zero(d);
  cfg.width = unit;
  if (top.has("initial")) {
    const Section s(top.at("initial"), "initial", {"q", "p", "width", "hbar"});
    cfg.q0 = s.vector("q", d, 0.0);
    cfg.p0 = s.vector("p", d, 0.0);
    cfg.width = s.width("width", d, unit);
    cfg.hbar = s.number("hbar", cfg.hbar);
  }
  if (!(cfg.hbar > 0.0)) throw ConfigError("'initial.hbar' must be positive");

  // HK choices
  PhaseChoice base{ThetaMode::frozen_iI, unit, std::nullopt};
  cfg.phase = base;
  if (top.has("hk")) {
    const Section s(top.at("hk"), "hk", {"theta_mode", "gamma", "theta", "steps_per_unit_time", "order"});
    cfg.phase = parse_phase(s, d, base);
    cfg.steps_per_unit_time = s.integer("steps_per_unit_time", cfg.steps_per_unit_time);
    if (s.integer("order", 0) != 0) throw ConfigError("'hk.order' must be 0 (leading order only)");
  }
  if (cfg.steps_per_unit_time < 1) throw ConfigError("'hk.steps_per_unit_time' must be >= 1");
  PhaseChoice alt = cfg.phase;
  alt.gamma = 2.0 * unit;
  cfg.compare = alt;
  if (top.has("compare")) {
    const Section s(top.at("compare"), "compare", {"theta_mode", "gamma", "theta"});
    cfg.compare = parse_phase(s, d, alt);
  }

  // time
  if (top.has("time")) {
    const Section s(top.at("time"), "time", {"t", "horizon", "samples"});
    cfg.t = s.number("t", cfg.t);
    if (s.has("samples")) cfg.sample_times = s.numbers("samples");
    double latest = cfg.t;
    for (double v : cfg.sample_times) latest = std::max(latest, v);
    cfg.horizon = s.number("horizon", latest);
  } else {
    cfg.horizon = cfg.t;
  }
  if (cfg.sample_times.empty()) cfg.sample_times = {cfg.t};
  if (!(cfg.horizon > 0.0)) throw ConfigError("'time.horizon' must be positive");
  if (cfg.t < 0.0 || cfg.t > cfg.horizon) throw ConfigError("'time.t' must lie in [0, horizon]");
  for (std::size_t k = 0; k < cfg.sample_times.size(); ++k) {
    const double v = cfg.sample_times[k];
    if (v < 0.0 || v > cfg.horizon) throw ConfigError("'time.samples' entries must lie in [0, horizon]");
    if (k > 0 && !(v > cfg.sample_times[k - 1])) throw ConfigError("'time.samples' must be strictly increasing");
  }

  // hbar ladder
  if (top.has("hbar_ladder")) {
    cfg.hbar_ladder = top.numbers("hbar_ladder");
    if (cfg.hbar_ladder.size() < 3) throw ConfigError("'hbar_ladder' needs at least 3 entries");
    for (std::size_t k = 0; k < cfg.hbar_ladder.size(); ++k) {
      if (!(cfg.hbar_ladder[k] > 0.0)) throw ConfigError("'hbar_ladder' entries must be positive");
      if (k > 0 && !(cfg.hbar_ladder[k] < cfg.hbar_ladder[k - 1]))
        throw ConfigError("'hbar_ladder' must be strictly decreasing");
    }
  }

  // quadrature
  if (top.has("quadrature")) {
    const Section s(top.at("quadrature"), "quadrature", {"coverage", "density", "margin", "max_half_width", "jitter"});
    cfg.quadrature.coverage_target = s.number("coverage", cfg.quadrature.coverage_target);
    cfg.quadrature.density = s.number("density", cfg.quadrature.density);
    cfg.quadrature.margin = s.number("margin", cfg.quadrature.margin);
    cfg.quadrature.max_half_width = s.number("max_half_width", cfg.quadrature.max_half_width);
    cfg.quadrature.jitter = s.number("jitter", cfg.quadrature.jitter);
  }
  if (!(cfg.quadrature.coverage_target > 0.0 && cfg.quadrature.coverage_target < 1.0))
    throw ConfigError("'quadrature.coverage' must lie in (0, 1)");
  if (!(cfg.quadrature.density > 0.0)) throw ConfigError("'quadrature.density' must be positive");
  if (cfg.quadrature.margin < 0.0) throw ConfigError("'quadrature.margin' must be nonnegative");
  if (!(cfg.quadrature.max_half_width > 0.0)) throw ConfigError("'quadrature.max_half_width' must be positive");
  if (cfg.quadrature.jitter < 0.0 || cfg.quadrature.jitter >= 1.0)
    throw ConfigError("'quadrature.jitter' must lie in [0, 1)");

  // grid
  if (top.has("grid")) {
    const Section s(top.at("grid"), "grid", {"half_width", "points", "p_cut"});
    if (s.has("half_width")) cfg.grid_half_width = s.number("half_width", 0.0);
    if (s.has("points")) cfg.grid_points = s.integer("points", 0);
    if (s.has("p_cut")) cfg.grid_p_cut = s.number("p_cut", 0.0);
    if (cfg.grid_half_width && !(*cfg.grid_half_width > 0.0)) throw ConfigError("'grid.half_width' must be positive");
    if (cfg.grid_points && *cfg.grid_points < 8) throw ConfigError("'grid.points' must be at least 8");
    if (cfg.grid_p_cut && !(*cfg.grid_p_cut > 0.0)) throw ConfigError("'grid.p_cut' must be positive");
  }

  // reference
  if (top.has("reference")) {
    const Section s(top.at("reference"), "reference", {"solver", "steps_per_unit_time"});
    try {
      cfg.reference = parse_reference_solver(s.text("solver", "auto"));
    } catch (const Error& e) {
      throw ConfigError(std::string("'reference.solver': ") + e.what());
    }
    cfg.reference_steps_per_unit_time = s.integer("steps_per_unit_time", cfg.reference_steps_per_unit_time);
  }
  if (cfg.reference_steps_per_unit_time < 1) throw ConfigError("'reference.steps_per_unit_time' must be >= 1");
  if (cfg.reference == ReferenceSolver::split && !cfg.model().split_form)
    throw ConfigError("'reference.solver': split requires a model of the form T(p) + V(q)");

  // Ehrenfest
  if (top.has("ehrenfest")) {
    const Section s(top.at("ehrenfest"), "ehrenfest", {"threshold", "time_step"});
    cfg.ehrenfest_threshold = s.number("threshold", cfg.ehrenfest_threshold);
    cfg.ehrenfest_time_step = s.number("time_step", cfg.ehrenfest_time_step);
  }
  if (!(cfg.ehrenfest_threshold > 0.0)) throw ConfigError("'ehrenfest.threshold' must be positive");
  if (!(cfg.ehrenfest_time_step > 0.0)) throw ConfigError("'ehrenfest.time_step' must be positive");

  // kernel
  if (top.has("kernel")) {
    const Section s(top.at("kernel"), "kernel",
                    {"operator", "x_per_axis", "x_spacing", "y_half_width", "y_spacing", "bin_width"});
    cfg.kernel_operator = s.text("operator", cfg.kernel_operator);
    cfg.kernel_x_per_axis = s.integer("x_per_axis", cfg.kernel_x_per_axis);
    cfg.kernel_x_spacing = s.number("x_spacing", cfg.kernel_x_spacing);
    cfg.kernel_y_half_width = s.number("y_half_width", cfg.kernel_y_half_width);
    cfg.kernel_y_spacing = s.number("y_spacing", cfg.kernel_y_spacing);
    cfg.kernel_bin_width = s.number("bin_width", cfg.kernel_bin_width);
  }
  if (cfg.kernel_operator != "hk" && cfg.kernel_operator != "identity")
    throw ConfigError("'kernel.operator' must be hk or identity");
  if (cfg.kernel_x_per_axis < 1) throw ConfigError("'kernel.x_per_axis' must be >= 1");
  if (!(cfg.kernel_x_spacing > 0.0) || !(cfg.kernel_y_half_width > 0.0) || !(cfg.kernel_y_spacing > 0.0) ||
      !(cfg.kernel_bin_width > 0.0))
    throw ConfigError("'kernel' spacings, widths and bin_width must be positive");

  // output
  if (top.has("output")) {
    const Section s(top.at("output"), "output", {"dir", "dump_wavefunctions"});
    cfg.output_dir = s.text("dir", cfg.output_dir);
    cfg.dump_wavefunctions = s.flag("dump_wavefunctions", cfg.dump_wavefunctions);
  }

  if (top.has("seed")) {
    if (!top.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a nonnegative integer");
    cfg.seed = top.at("seed").get<std::uint64_t>();
  }
  cfg.quadrature.seed = cfg.seed;
  cfg.workers = top.integer("workers", cfg.workers);
  if (cfg.workers < 1) throw ConfigError("'workers' must be >= 1");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["model"] = ordered_json{{"kind", to_string(cfg.model_kind)},
                            {"dim", cfg.model_params.dim},
                            {"omega", cfg.model_params.omega},
                            {"strength", cfg.model_params.strength},
                            {"G", real_json(cfg.model_params.G)},
                            {"L", real_json(cfg.model_params.L)},
                            {"K", real_json(cfg.model_params.K)}};
  j["initial"] = ordered_json{
      {"q", vector_json(cfg.q0)}, {"p", vector_json(cfg.p0)}, {"width", matrix_json(cfg.width)}, {"hbar", cfg.hbar}};
  ordered_json hk = phase_json(cfg.phase);
  hk["steps_per_unit_time"] = cfg.steps_per_unit_time;
  hk["order"] = 0;
  j["hk"] = hk;
  j["compare"] = phase_json(cfg.compare);
  j["time"] = ordered_json{{"t", cfg.t}, {"horizon", cfg.horizon}, {"samples", cfg.sample_times}};
  j["hbar_ladder"] = cfg.hbar_ladder;
  j["quadrature"] = ordered_json{{"coverage", cfg.quadrature.coverage_target},
                                 {"density", cfg.quadrature.density},
                                 {"margin", cfg.quadrature.margin},
                                 {"max_half_width", cfg.quadrature.max_half_width},
                                 {"jitter", cfg.quadrature.jitter}};
  ordered_json grid;
  grid["half_width"] = cfg.grid_half_width ? ordered_json(*cfg.grid_half_width) : ordered_json(nullptr);
  grid["points"] = cfg.grid_points ? ordered_json(*cfg.grid_points) : ordered_json(nullptr);
  grid["p_cut"] = cfg.grid_p_cut ? ordered_json(*cfg.grid_p_cut) : ordered_json(nullptr);
  j["grid"] = grid;
  j["reference"] = ordered_json{{"solver", to_string(cfg.reference)},
                                {"steps_per_unit_time", cfg.reference_steps_per_unit_time}};
  j["ehrenfest"] = ordered_json{{"threshold", cfg.ehrenfest_threshold}, {"time_step", cfg.ehrenfest_time_step}};
  j["kernel"] = ordered_json{{"operator", cfg.kernel_operator},
                             {"x_per_axis", cfg.kernel_x_per_axis},
                             {"x_spacing", cfg.kernel_x_spacing},
                             {"y_half_width", cfg.kernel_y_half_width},
                             {"y_spacing", cfg.kernel_y_spacing},
                             {"bin_width", cfg.kernel_bin_width}};
  j["output"] = ordered_json{{"dir", cfg.output_dir}, {"dump_wavefunctions", cfg.dump_wavefunctions}};
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  return j;
}

}  // namespace hk
