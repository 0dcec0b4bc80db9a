#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hk/harness_config.hpp"

namespace hk {

/// Version of every CSV layout written by the harness.
inline constexpr int kSchemaVersion = 1;

struct ErrorRow {
  double hbar = 0.0;
  double t = 0.0;
  double error = 0.0;
  double hk_norm = 0.0;
  double runtime = 0.0;
  std::size_t nodes = 0;
  /// Same-settings error of the harmonic control; NaN when not measured.
  double control_error = std::numeric_limits<double>::quiet_NaN();
  bool at_floor = false;
};

/// Rows keyed uniquely by (hbar, t); errors are nonnegative.
class ErrorTable {
public:
  void add(const ErrorRow& row);
  const std::vector<ErrorRow>& rows() const { return rows_; }

private:
  std::vector<ErrorRow> rows_;
};

struct SlopeFit {
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  /// log(error) - fitted value for the points used.
  std::vector<double> residuals;
  std::size_t points = 0;
};

/// Unweighted least squares of log y against log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares c with y = c x (no intercept).
double fit_through_origin(const std::vector<double>& x, const std::vector<double>& y);

/// Position grid used for a given hbar: centred on the initial position,
/// spacing resolving momenta up to p_cut, power-of-two point counts.
GridSpec state_grid(const ExperimentConfig& cfg, double hbar);

/// phi_{z0}^{width} on state_grid(cfg, hbar).
WaveFunction initial_state(const ExperimentConfig& cfg, double hbar);

/// Reference solver actually used for the configured model.
ReferenceSolver resolve_reference(const ExperimentConfig& cfg);

/// Reference propagation of psi0 to time t.
WaveFunction reference_propagate(const ExperimentConfig& cfg, const WaveFunction& psi0, double t);

struct PropagateResult {
  ErrorTable table;
  std::vector<HKResult> hk;
  std::vector<WaveFunction> reference;
  std::vector<double> times;
};

/// HK and reference at every sample time for cfg.hbar.
PropagateResult run_propagate(const ExperimentConfig& cfg);

struct ScalingResult {
  ErrorTable table;
  SlopeFit fit;
  bool monotone = true;
  /// Every point sits at the quadrature floor, so no slope is meaningful.
  bool quadrature_floor = false;
  /// |exact - split| or the split-step dt self-difference at the first hbar.
  double reference_crosscheck = 0.0;
  std::string reference_crosscheck_kind;
};

ScalingResult run_scaling_study(const ExperimentConfig& cfg);

struct PhaseInvarianceResult {
  ErrorTable table;
  SlopeFit fit;
};

/// L2 difference between HK outputs for cfg.phase and cfg.compare.
PhaseInvarianceResult run_phase_invariance(const ExperimentConfig& cfg);

struct EhrenfestRow {
  double hbar = 0.0;
  std::optional<double> t_star;
};

struct EhrenfestResult {
  std::vector<EhrenfestRow> rows;
  /// Error curve per hbar: (hbar, t, error).
  ErrorTable curve;
  bool nondecreasing = true;
  bool fit_valid = false;
  double c = 0.0;
  double delta = 0.0;
};

EhrenfestResult run_ehrenfest(const ExperimentConfig& cfg);

struct KernelResult {
  KernelReport report;
  std::vector<PhasePoint> x_nodes;
  std::vector<PhasePoint> y_nodes;
  std::vector<PhasePoint> images;
  double bin_width = 1.0;
  /// Largest |ktilde| with off-graph distance >= 5 sqrt(hbar), over the peak,
  /// as an amplitude ratio and as an intensity ratio |ktilde|^2.
  double far_amplitude_ratio = 0.0;
  double far_intensity_ratio = 0.0;
  /// Largest distance to the kernel peak over X, in units of bin_width.
  double worst_peak_offset = 0.0;
};

KernelResult run_inspect_kernel(const ExperimentConfig& cfg);

/// CSV writers; every table starts with a schema_version column.
void write_error_csv(std::ostream& out, const ErrorTable& table);
void write_ehrenfest_csv(std::ostream& out, const EhrenfestResult& r);
void write_decay_csv(std::ostream& out, const KernelReport& report);
void write_peaks_csv(std::ostream& out, const KernelResult& r);

/// Runs a CLI subcommand, writes CSV/JSON into out_dir and returns the summary.
nlohmann::ordered_json run_command(const std::string& command, const ExperimentConfig& cfg,
                                   const std::string& out_dir);

std::string library_version();

}  // namespace hk
