#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hk/hk_core.hpp"

namespace hk {

enum class ReferenceSolver { automatic, exact, split };

ReferenceSolver parse_reference_solver(const std::string& name);
std::string to_string(ReferenceSolver s);

/// Raised for invalid configuration documents; the message names the key.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// One (Theta mode, Gamma, Theta) choice.
struct PhaseChoice {
  ThetaMode theta_mode = ThetaMode::frozen_iI;
  ComplexMatrix gamma;
  std::optional<ComplexMatrix> theta;
};

struct ExperimentConfig {
  // model
  ModelKind model_kind = ModelKind::harmonic;
  ModelParams model_params;

  // initial coherent state
  RealVector q0, p0;
  ComplexMatrix width;
  double hbar = 0.1;

  // propagation
  PhaseChoice phase;
  /// Second choice for phase-invariance studies (default Gamma = 2iI).
  PhaseChoice compare;
  int steps_per_unit_time = kDefaultStepsPerUnitTime;

  // time
  double t = 1.0;
  double horizon = 1.0;
  std::vector<double> sample_times;

  std::vector<double> hbar_ladder;

  // phase-space quadrature
  QuadratureOptions quadrature;

  // position grid; unset values are chosen per hbar
  std::optional<double> grid_half_width;
  std::optional<int> grid_points;
  std::optional<double> grid_p_cut;

  // reference solver
  ReferenceSolver reference = ReferenceSolver::automatic;
  int reference_steps_per_unit_time = 1000;

  // Ehrenfest sweep
  double ehrenfest_threshold = 0.1;
  double ehrenfest_time_step = 0.25;

  // kernel inspection
  std::string kernel_operator = "hk";  // "hk" or "identity"
  int kernel_x_per_axis = 3;
  double kernel_x_spacing = 2.0;  // in units of sqrt(hbar)
  double kernel_y_half_width = 8.0;  // in units of sqrt(hbar), around the X images
  double kernel_y_spacing = 0.5;  // in units of sqrt(hbar)
  double kernel_bin_width = 1.0;  // in units of sqrt(hbar)

  // output
  std::string output_dir = "out";
  bool dump_wavefunctions = false;

  std::uint64_t seed = 0;
  int workers = 1;

  int dim() const { return model_params.dim; }
  HamiltonianModel model() const { return make_model(model_kind, model_params); }
  HKConfig hk_config(const PhaseChoice& choice) const;
  /// hbar ladder if present, otherwise {hbar}.
  std::vector<double> hbars() const;
};

/// Parses and validates a JSON configuration. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON echo with every default filled in.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

}  // namespace hk
