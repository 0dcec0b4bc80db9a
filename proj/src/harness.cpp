#include "hk/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <fftw3.h>

#include "hk/reference.hpp"
#include "hk/wavefunction_io.hpp"

#ifndef HK_VERSION
#define HK_VERSION "0.0.0"
#endif

namespace hk {

using nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;
// Points below this multiple of the harmonic-control error are at the quadrature floor.
constexpr double kFloorFactor = 10.0;
// Off-graph distance (units of sqrt(hbar)) used for the far-field ratio.
constexpr double kFarDistance = 5.0;

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

bool is_quadratic_kind(ModelKind k) {
  return k == ModelKind::harmonic || k == ModelKind::free || k == ModelKind::quadratic_general;
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

PhasePoint start_point(const ExperimentConfig& cfg) { return PhasePoint{cfg.q0, cfg.p0}; }

// HK error for the unit harmonic oscillator from the same initial state and
// grid, measured against the closed-form evolved Gaussian. HK is exact there,
// so this is the quadrature floor of the settings.
double control_error(const ExperimentConfig& cfg, const WaveFunction& psi0, double t) {
  ModelParams params;
  params.dim = cfg.dim();
  const HamiltonianModel harmonic = make_model(ModelKind::harmonic, params);
  const HKResult hk = hk_propagate(harmonic, psi0, t, cfg.hk_config(cfg.phase));
  const GaussianState exact = exact_quadratic_coherent(harmonic, start_point(cfg), SiegelMatrix(cfg.width), t,
                                                       psi0.hbar, 0.0, cfg.steps_per_unit_time);
  return l2_distance(hk.psi, evaluate(exact, psi0.grid));
}

double hk_error(const ExperimentConfig& cfg, const WaveFunction& psi0, double t, ErrorRow& row) {
  const HamiltonianModel model = cfg.model();
  Stopwatch clock;
  const HKResult hk = hk_propagate(model, psi0, t, cfg.hk_config(cfg.phase));
  const WaveFunction ref = reference_propagate(cfg, psi0, t);
  row.runtime = clock.seconds();
  row.hk_norm = l2_norm(hk.psi);
  row.nodes = hk.nodes;
  return l2_distance(hk.psi, ref);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

ordered_json fit_json(const SlopeFit& f) {
  ordered_json j{{"valid", f.valid}, {"points", f.points}};
  j["slope"] = f.valid ? ordered_json(f.slope) : ordered_json(nullptr);
  j["intercept"] = f.valid ? ordered_json(f.intercept) : ordered_json(nullptr);
  j["residuals"] = f.residuals;
  return j;
}

ordered_json table_timings(const ErrorTable& t) {
  ordered_json out = ordered_json::array();
  for (const auto& r : t.rows())
    out.push_back(ordered_json{{"hbar", r.hbar}, {"t", r.t}, {"runtime_seconds", r.runtime}});
  return out;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  body(out);
}

}  // namespace

std::string library_version() { return HK_VERSION; }

void ErrorTable::add(const ErrorRow& row) {
  if (!(row.error >= 0.0)) throw Error("ErrorTable: error must be nonnegative");
  for (const auto& r : rows_)
    if (r.hbar == row.hbar && r.t == row.t) throw Error("ErrorTable: duplicate (hbar, t) row");
  rows_.push_back(row);
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("fit_loglog: size mismatch");
  SlopeFit f;
  f.points = x.size();
  if (x.size() < 2) return f;
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) return f;
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t k = 0; k < n; ++k) f.residuals.push_back(ly[k] - (f.intercept + f.slope * lx[k]));
  f.valid = true;
  return f;
}

double fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += x[k] * y[k];
    sxx += x[k] * x[k];
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

GridSpec state_grid(const ExperimentConfig& cfg, double hbar) {
  const int d = cfg.dim();
  const double half = cfg.grid_half_width.value_or(10.0);
  const double p_cut = cfg.grid_p_cut.value_or(cfg.p0.cwiseAbs().maxCoeff() + 3.0 + 8.0 * std::sqrt(hbar));
  std::size_t n;
  if (cfg.grid_points) {
    n = static_cast<std::size_t>(*cfg.grid_points);
  } else {
    // Keep p_cut below 80% of the Nyquist momentum pi hbar / h.
    const double h = 0.8 * kPi * hbar / p_cut;
    n = next_power_of_two(static_cast<std::size_t>(std::ceil(2.0 * half / h)) + 1);
  }
  return GridSpec::centered(cfg.q0, RealVector::Constant(d, half), std::vector<int>(d, static_cast<int>(n)));
}

WaveFunction initial_state(const ExperimentConfig& cfg, double hbar) {
  return coherent_state(start_point(cfg), SiegelMatrix(cfg.width), hbar, state_grid(cfg, hbar));
}

ReferenceSolver resolve_reference(const ExperimentConfig& cfg) {
  if (cfg.reference != ReferenceSolver::automatic) return cfg.reference;
  return is_quadratic_kind(cfg.model_kind) ? ReferenceSolver::exact : ReferenceSolver::split;
}

WaveFunction reference_propagate(const ExperimentConfig& cfg, const WaveFunction& psi0, double t) {
  const HamiltonianModel model = cfg.model();
  if (resolve_reference(cfg) == ReferenceSolver::exact) {
    QuadratureOptions q = cfg.quadrature;
    q.workers = cfg.workers;
    q.jitter = 0.0;
    return exact_quadratic_apply(model, psi0, t, SiegelMatrix::scaled_identity(cfg.dim()), q, 0.0,
                                 cfg.steps_per_unit_time);
  }
  if (t == 0.0) return psi0;
  return split_step_propagate(model, psi0, t, default_steps(0.0, t, cfg.reference_steps_per_unit_time));
}

// propagate -------------------------------------------------------------------

PropagateResult run_propagate(const ExperimentConfig& cfg) {
  const HamiltonianModel model = cfg.model();
  const WaveFunction psi0 = initial_state(cfg, cfg.hbar);
  PropagateResult r;
  r.times = cfg.sample_times;
  Stopwatch clock;
  r.hk = hk_propagate_series(model, psi0, r.times, cfg.hk_config(cfg.phase));
  const double hk_time = clock.seconds() / static_cast<double>(r.times.size());
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    Stopwatch ref_clock;
    r.reference.push_back(reference_propagate(cfg, psi0, r.times[k]));
    ErrorRow row;
    row.hbar = cfg.hbar;
    row.t = r.times[k];
    row.error = l2_distance(r.hk[k].psi, r.reference.back());
    row.hk_norm = l2_norm(r.hk[k].psi);
    row.nodes = r.hk[k].nodes;
    row.runtime = hk_time + ref_clock.seconds();
    r.table.add(row);
  }
  return r;
}

// scaling ---------------------------------------------------------------------

ScalingResult run_scaling_study(const ExperimentConfig& cfg) {
  const std::vector<double> hbars = cfg.hbars();
  if (hbars.size() < 3) throw ConfigError("scaling study needs an hbar ladder with at least 3 entries");
  ScalingResult out;
  std::vector<double> fx, fy;
  for (double hbar : hbars) {
    const WaveFunction psi0 = initial_state(cfg, hbar);
    ErrorRow row;
    row.hbar = hbar;
    row.t = cfg.t;
    row.error = hk_error(cfg, psi0, cfg.t, row);
    row.control_error = control_error(cfg, psi0, cfg.t);
    row.at_floor = row.error < kFloorFactor * row.control_error;
    if (!row.at_floor) {
      fx.push_back(hbar);
      fy.push_back(row.error);
    }
    if (!out.table.rows().empty() && !(row.error < out.table.rows().back().error)) out.monotone = false;
    out.table.add(row);
  }
  out.quadrature_floor = fx.empty();
  out.fit = fit_loglog(fx, fy);

  // One cross-check of the reference solver per run, at the largest hbar.
  const HamiltonianModel model = cfg.model();
  const WaveFunction psi0 = initial_state(cfg, hbars.front());
  const int steps = default_steps(0.0, cfg.t, cfg.reference_steps_per_unit_time);
  if (model.split_form && resolve_reference(cfg) == ReferenceSolver::exact) {
    out.reference_crosscheck_kind = "exact_vs_split";
    out.reference_crosscheck = l2_distance(reference_propagate(cfg, psi0, cfg.t),
                                           split_step_propagate(model, psi0, cfg.t, steps));
  } else if (model.split_form) {
    out.reference_crosscheck_kind = "split_dt_halving";
    out.reference_crosscheck = l2_distance(split_step_propagate(model, psi0, cfg.t, steps),
                                           split_step_propagate(model, psi0, cfg.t, 2 * steps));
  } else {
    out.reference_crosscheck_kind = "none";
  }
  return out;
}

// phase invariance ------------------------------------------------------------

PhaseInvarianceResult run_phase_invariance(const ExperimentConfig& cfg) {
  const std::vector<double> hbars = cfg.hbars();
  const HamiltonianModel model = cfg.model();
  const HKConfig a = cfg.hk_config(cfg.phase);
  const HKConfig b = cfg.hk_config(cfg.compare);
  PhaseInvarianceResult out;
  std::vector<double> fy;
  for (double hbar : hbars) {
    const WaveFunction psi0 = initial_state(cfg, hbar);
    Stopwatch clock;
    const HKResult ra = hk_propagate(model, psi0, cfg.t, a);
    const HKResult rb = hk_propagate(model, psi0, cfg.t, b);
    ErrorRow row;
    row.hbar = hbar;
    row.t = cfg.t;
    row.error = l2_distance(ra.psi, rb.psi);
    row.hk_norm = l2_norm(ra.psi);
    row.nodes = ra.nodes + rb.nodes;
    row.runtime = clock.seconds();
    out.table.add(row);
    fy.push_back(row.error);
  }
  if (hbars.size() >= 2) out.fit = fit_loglog(hbars, fy);
  return out;
}

// Ehrenfest -------------------------------------------------------------------

EhrenfestResult run_ehrenfest(const ExperimentConfig& cfg) {
  const HamiltonianModel model = cfg.model();
  const std::vector<double> hbars = cfg.hbars();
  const int d = cfg.dim();
  EhrenfestResult out;
  {
    PhaseBox box{start_point(cfg).packed().array() - 3.0, start_point(cfg).packed().array() + 3.0};
    out.delta = estimate_delta(model, box, d == 1 ? 41 : 9).delta;
  }
  const ReferenceSolver solver = resolve_reference(cfg);
  const HKConfig hkcfg = cfg.hk_config(cfg.phase);
  std::vector<double> tx, ty;
  std::optional<double> previous;
  bool first = true;
  for (double hbar : hbars) {
    const WaveFunction psi0 = initial_state(cfg, hbar);
    QuadratureOptions q = hkcfg.quadrature;
    const PhaseGrid nodes = build_quadrature(psi0, hkcfg.gamma, q);
    const std::vector<Complex> coeff = fb_transform(psi0, hkcfg.gamma, nodes, cfg.workers);
    HKEnsemble ensemble(model, nodes, hkcfg, hbar);

    std::unique_ptr<SplitStepper> stepper;
    WaveFunction ref = psi0;
    const double dt = cfg.ehrenfest_time_step;
    const int ref_steps = std::max(1, static_cast<int>(std::ceil(dt * cfg.reference_steps_per_unit_time - 1e-9)));
    if (solver == ReferenceSolver::split) {
      stepper = std::make_unique<SplitStepper>(model, psi0.grid, hbar, dt / ref_steps);
      stepper->check(ref);
    }

    EhrenfestRow row;
    row.hbar = hbar;
    double prev_t = 0.0, prev_err = 0.0;
    const int count = static_cast<int>(std::floor(cfg.horizon / dt + 1e-9));
    for (int k = 1; k <= count; ++k) {
      const double t = k * dt;
      Stopwatch clock;
      ensemble.advance_to(t);
      const HKResult hk = ensemble.synthesize(coeff, psi0.grid);
      if (stepper) {
        stepper->advance(ref, ref_steps);
        stepper->check(ref);
      } else {
        ref = reference_propagate(cfg, psi0, t);
      }
      ErrorRow e;
      e.hbar = hbar;
      e.t = t;
      e.error = l2_distance(hk.psi, ref);
      e.hk_norm = l2_norm(hk.psi);
      e.nodes = hk.nodes;
      e.runtime = clock.seconds();
      out.curve.add(e);
      if (e.error > cfg.ehrenfest_threshold) {
        // Linear interpolation of the error between the last two grid times.
        row.t_star = prev_t + (t - prev_t) * (cfg.ehrenfest_threshold - prev_err) / (e.error - prev_err);
        break;
      }
      prev_t = t;
      prev_err = e.error;
    }
    if (!first) {
      // A missing crossing counts as beyond the horizon.
      const double now = row.t_star.value_or(std::numeric_limits<double>::infinity());
      const double before = previous.value_or(std::numeric_limits<double>::infinity());
      if (now < before) out.nondecreasing = false;
    }
    previous = row.t_star;
    first = false;
    if (row.t_star) {
      tx.push_back(std::log(1.0 / hbar));
      ty.push_back(*row.t_star);
    }
    out.rows.push_back(row);
  }
  if (!tx.empty()) {
    out.c = fit_through_origin(tx, ty);
    out.fit_valid = true;
  }
  return out;
}

// kernel ----------------------------------------------------------------------

KernelResult run_inspect_kernel(const ExperimentConfig& cfg) {
  const int d = cfg.dim();
  const int n2 = 2 * d;
  const double hbar = cfg.hbar;
  const double root = std::sqrt(hbar);
  const HamiltonianModel model = cfg.model();
  const GridSpec grid = state_grid(cfg, hbar);
  const bool identity = cfg.kernel_operator == "identity";
  KernelResult out;
  out.bin_width = cfg.kernel_bin_width;

  // X nodes: small tensor grid around the initial point.
  const PhaseVector z0 = start_point(cfg).packed();
  const int m = cfg.kernel_x_per_axis;
  std::size_t total = 1;
  for (int a = 0; a < n2; ++a) total *= static_cast<std::size_t>(m);
  for (std::size_t flat = 0; flat < total; ++flat) {
    PhaseVector x = z0;
    std::size_t rest = flat;
    for (int a = n2 - 1; a >= 0; --a) {
      const int k = static_cast<int>(rest % m);
      rest /= m;
      x(a) += (k - 0.5 * (m - 1)) * cfg.kernel_x_spacing * root;
    }
    out.x_nodes.push_back(PhasePoint::unpack(x));
  }

  const int steps = default_steps(0.0, cfg.t, cfg.steps_per_unit_time);
  auto flow_map = [&](const PhasePoint& x) {
    if (identity || cfg.t == 0.0) return x;
    return integrate_flow(model, x, 0.0, cfg.t, steps).final().z;
  };
  for (const auto& x : out.x_nodes) out.images.push_back(flow_map(x));

  // Y nodes: box around the images.
  PhaseVector lo = out.images.front().packed(), hi = lo;
  for (const auto& y : out.images) {
    lo = lo.cwiseMin(y.packed());
    hi = hi.cwiseMax(y.packed());
  }
  const double pad = cfg.kernel_y_half_width * root;
  const double h = cfg.kernel_y_spacing * root;
  RealVector centre = 0.5 * (lo + hi);
  RealVector half(n2);
  std::vector<int> counts(n2);
  for (int a = 0; a < n2; ++a) {
    counts[a] = static_cast<int>(std::ceil((hi(a) - lo(a) + 2.0 * pad) / h)) + 1;
    half(a) = 0.5 * h * (counts[a] - 1);
  }
  out.y_nodes = make_phase_grid(centre, half, counts).nodes;

  std::function<WaveFunction(const WaveFunction&)> apply;
  std::unique_ptr<HKEnsemble> ensemble;
  HKConfig hkcfg = cfg.hk_config(cfg.phase);
  if (identity) {
    apply = [](const WaveFunction& psi) { return psi; };
  } else {
    // One ensemble covers the Fourier-Bargmann support of every X state.
    WaveFunction cover = WaveFunction::zeros(grid, hbar);
    const SiegelMatrix unit = SiegelMatrix::scaled_identity(d);
    for (const auto& x : out.x_nodes) {
      const WaveFunction phi = coherent_state(x, unit, hbar, grid);
      for (std::size_t k = 0; k < cover.values.size(); ++k) cover.values[k] += phi.values[k];
    }
    QuadratureOptions q = hkcfg.quadrature;
    const PhaseGrid nodes = build_quadrature(cover, hkcfg.gamma, q);
    ensemble = std::make_unique<HKEnsemble>(model, nodes, hkcfg, hbar);
    ensemble->advance_to(cfg.t);
    apply = [&](const WaveFunction& psi) {
      std::vector<Complex> c = fb_transform(psi, hkcfg.gamma, ensemble->nodes(), cfg.workers);
      double peak = 0.0;
      for (const Complex& v : c) peak = std::max(peak, std::abs(v));
      for (Complex& v : c)
        if (std::abs(v) < 1e-16 * peak) v = 0.0;
      return ensemble->synthesize(c, grid).psi;
    };
  }

  out.report = fb_kernel_diagnostic(apply, flow_map, out.x_nodes, out.y_nodes, hbar, grid, cfg.kernel_bin_width,
                                    cfg.workers);
  double far = 0.0;
  for (std::size_t i = 0; i < out.x_nodes.size(); ++i) {
    const PhaseVector img = out.images[i].packed();
    for (std::size_t j = 0; j < out.y_nodes.size(); ++j)
      if ((img - out.y_nodes[j].packed()).norm() / root >= kFarDistance)
        far = std::max(far, std::abs(out.report.ktilde(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    out.worst_peak_offset = std::max(out.worst_peak_offset, out.report.peak_offset[i] / cfg.kernel_bin_width);
  }
  if (out.report.peak > 0.0) {
    out.far_amplitude_ratio = far / out.report.peak;
    out.far_intensity_ratio = out.far_amplitude_ratio * out.far_amplitude_ratio;
  }
  return out;
}

// CSV -------------------------------------------------------------------------

void write_error_csv(std::ostream& out, const ErrorTable& table) {
  out << "schema_version,hbar,t,l2_error,hk_norm,nodes,control_error,at_floor\n";
  for (const auto& r : table.rows()) {
    out << kSchemaVersion << ',' << fmt(r.hbar) << ',' << fmt(r.t) << ',' << fmt(r.error) << ','
        << fmt(r.hk_norm) << ',' << r.nodes << ',' << (std::isnan(r.control_error) ? "" : fmt(r.control_error))
        << ',' << (r.at_floor ? 1 : 0) << '\n';
  }
}

void write_ehrenfest_csv(std::ostream& out, const EhrenfestResult& r) {
  out << "schema_version,hbar,log_inv_hbar,t_star,crossed\n";
  for (const auto& row : r.rows) {
    out << kSchemaVersion << ',' << fmt(row.hbar) << ',' << fmt(std::log(1.0 / row.hbar)) << ','
        << (row.t_star ? fmt(*row.t_star) : "") << ',' << (row.t_star ? 1 : 0) << '\n';
  }
}

void write_decay_csv(std::ostream& out, const KernelReport& report) {
  out << "schema_version,bin_lower,bin_upper,max_abs_ktilde,count\n";
  for (const auto& b : report.bins)
    out << kSchemaVersion << ',' << fmt(b.lower) << ',' << fmt(b.upper) << ',' << fmt(b.max_abs_ktilde) << ','
        << b.count << '\n';
}

void write_peaks_csv(std::ostream& out, const KernelResult& r) {
  const int d = r.x_nodes.empty() ? 0 : r.x_nodes.front().dim();
  out << "schema_version";
  for (const char* name : {"x", "image", "peak"}) {
    for (int a = 0; a < d; ++a) out << ',' << name << "_q" << a;
    for (int a = 0; a < d; ++a) out << ',' << name << "_p" << a;
  }
  out << ",peak_offset,peak_bin,max_abs_ktilde\n";
  for (std::size_t i = 0; i < r.x_nodes.size(); ++i) {
    out << kSchemaVersion;
    for (const PhasePoint* p : {&r.x_nodes[i], &r.images[i], &r.y_nodes[r.report.peak_y[i]]}) {
      for (int a = 0; a < d; ++a) out << ',' << fmt(p->q(a));
      for (int a = 0; a < d; ++a) out << ',' << fmt(p->p(a));
    }
    const double off = r.report.peak_offset[i];
    out << ',' << fmt(off) << ',' << static_cast<long>(off / r.bin_width) << ','
        << fmt(std::abs(r.report.ktilde(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(r.report.peak_y[i]))))
        << '\n';
  }
}

// CLI entry -------------------------------------------------------------------

ordered_json run_command(const std::string& command, const ExperimentConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  ordered_json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["command"] = command;
  summary["config"] = to_json(cfg);
  ordered_json results;
  ordered_json timings;
  Stopwatch total;

  if (command == "propagate") {
    const PropagateResult r = run_propagate(cfg);
    write_file(dir / "propagate.csv", [&](std::ostream& o) { write_error_csv(o, r.table); });
    if (cfg.dump_wavefunctions)
      for (std::size_t k = 0; k < r.times.size(); ++k) {
        save_wavefunction((dir / ("hk_" + std::to_string(k) + ".bin")).string(), r.hk[k].psi);
        save_wavefunction((dir / ("reference_" + std::to_string(k) + ".bin")).string(), r.reference[k]);
      }
    ordered_json rows = ordered_json::array();
    for (std::size_t k = 0; k < r.times.size(); ++k)
      rows.push_back(ordered_json{{"t", r.times[k]},
                                  {"l2_error", r.table.rows()[k].error},
                                  {"ensemble_coverage", r.hk[k].ensemble_coverage}});
    results["rows"] = rows;
    results["reference_solver"] = to_string(resolve_reference(cfg));
    timings["rows"] = table_timings(r.table);
  } else if (command == "scaling") {
    const ScalingResult r = run_scaling_study(cfg);
    write_file(dir / "scaling.csv", [&](std::ostream& o) { write_error_csv(o, r.table); });
    results["fit"] = fit_json(r.fit);
    results["monotone"] = r.monotone;
    results["flag"] = r.quadrature_floor ? "quadrature-floor" : (r.monotone ? "ok" : "non-monotone");
    results["reference_solver"] = to_string(resolve_reference(cfg));
    results["reference_crosscheck"] = ordered_json{{"kind", r.reference_crosscheck_kind},
                                                   {"l2_difference", r.reference_crosscheck}};
    timings["rows"] = table_timings(r.table);
  } else if (command == "phase-invariance") {
    const PhaseInvarianceResult r = run_phase_invariance(cfg);
    write_file(dir / "phase_invariance.csv", [&](std::ostream& o) { write_error_csv(o, r.table); });
    results["fit"] = fit_json(r.fit);
    timings["rows"] = table_timings(r.table);
  } else if (command == "ehrenfest") {
    const EhrenfestResult r = run_ehrenfest(cfg);
    write_file(dir / "ehrenfest.csv", [&](std::ostream& o) { write_ehrenfest_csv(o, r); });
    write_file(dir / "ehrenfest_curve.csv", [&](std::ostream& o) { write_error_csv(o, r.curve); });
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows)
      rows.push_back(ordered_json{{"hbar", row.hbar},
                                  {"t_star", row.t_star ? ordered_json(*row.t_star) : ordered_json(nullptr)},
                                  {"status", row.t_star ? "crossed" : "no crossing within horizon"}});
    results["rows"] = rows;
    results["nondecreasing"] = r.nondecreasing;
    results["c"] = r.fit_valid ? ordered_json(r.c) : ordered_json(nullptr);
    results["delta_estimate"] = r.delta;
    results["asymptotic_c_lower"] = r.delta > 0.0 ? ordered_json(1.0 / (4.0 * r.delta)) : ordered_json(nullptr);
    timings["rows"] = table_timings(r.curve);
  } else if (command == "inspect-kernel") {
    const KernelResult r = run_inspect_kernel(cfg);
    write_file(dir / "kernel_decay.csv", [&](std::ostream& o) { write_decay_csv(o, r.report); });
    write_file(dir / "kernel_peaks.csv", [&](std::ostream& o) { write_peaks_csv(o, r); });
    results["monotone"] = r.report.monotone;
    results["peak"] = r.report.peak;
    results["far_distance"] = kFarDistance;
    results["far_amplitude_ratio"] = r.far_amplitude_ratio;
    results["far_intensity_ratio"] = r.far_intensity_ratio;
    results["worst_peak_offset_bins"] = r.worst_peak_offset;
  } else {
    throw Error("unknown command '" + command + "'");
  }

  timings["total_seconds"] = total.seconds();
  summary["results"] = results;
  summary["versions"] = ordered_json{{"hkprop", library_version()},
                                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                   std::to_string(EIGEN_MINOR_VERSION)},
                                     {"fftw", std::string(fftw_version)}};
  summary["timings"] = timings;
  write_file(dir / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  return summary;
}

}  // namespace hk
