#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hk/coherent.hpp"

namespace hk {

/// Branch-continuous square root of a determinant along a trajectory.
struct HKPrefactor {
  Complex value;
  Complex det_arg;
  /// Total argument swept by det_arg since t0 (unwound).
  double branch_phase = 0.0;
  double t = 0.0;
};

/// Raised when branch continuity cannot be established.
class BranchError : public Error {
public:
  using Error::Error;
};

enum class ThetaMode { frozen_iI, constant, thawed };

ThetaMode parse_theta_mode(const std::string& name);
std::string to_string(ThetaMode mode);

/// Leading-order Herman-Kluk configuration.
///
/// The propagated state is
///   psi_t = (2 pi hbar)^{-d/2} sum_z w(z) FB_Gamma[psi0](z) amp(t, z) e^{i delta / hbar} phi_{z_t}^{Theta_t}
/// with amp = 2^{-d/2} value(t, z) a_{Theta_0} / a_{Theta_t} and
/// value = normalization * det^{1/2} M(Theta_t, Gamma).
struct HKConfig {
  ThetaMode theta_mode = ThetaMode::frozen_iI;
  SiegelMatrix gamma = SiegelMatrix::scaled_identity(1);
  /// Only used in constant mode.
  std::optional<SiegelMatrix> theta;
  /// Expansion order; only the leading term is available.
  int order = 0;
  QuadratureOptions quadrature;
  int steps_per_unit_time = kDefaultStepsPerUnitTime;
  /// Fixed by calibrate(); makes the propagator the identity at t0.
  Complex normalization{1.0, 0.0};
  bool calibrated = false;
  int workers = 1;

  int dim() const { return gamma.dim(); }
  /// Theta at t0 for the configured mode.
  SiegelMatrix theta_at_start() const;
};

/// Builds a calibrated configuration. Throws when constant mode lacks Theta.
HKConfig make_hk_config(ThetaMode mode, const SiegelMatrix& gamma,
                        std::optional<SiegelMatrix> theta = std::nullopt);

/// Computes cfg.normalization so that the t0 propagator is the identity.
void calibrate(HKConfig& cfg);

/// Scalar lambda with (2 pi hbar)^{-d} int |phi_z^Theta><phi_z^Gamma| dz = lambda * Id:
/// lambda = 2^{d/2} a_Theta a_Gamma / det^{1/2}((Theta - conj Gamma) / i).
Complex resolution_scalar(const SiegelMatrix& theta, const SiegelMatrix& gamma);

/// det^{1/2}(A + D + i(B - C)) continued from 2^{d/2} at t0.
/// `model` enables re-integration of steps where the determinant turns by
/// pi/2 or more; without it such steps raise BranchError.
std::vector<HKPrefactor> hk_prefactor_frozen(const TrajectoryRecord& traj,
                                             const HamiltonianModel* model = nullptr);

/// M(Theta, Gamma) = C + D conj(Gamma) - Theta (A + B conj(Gamma)).
/// Throws when its smallest singular value is below 1e-12.
ComplexMatrix m_matrix(const FlowState& state, const SiegelMatrix& theta, const SiegelMatrix& gamma);

/// normalization * det^{1/2} M(Theta_t, Gamma), continued from t0.
std::vector<HKPrefactor> hk_prefactor_general(const TrajectoryRecord& traj, const HKConfig& cfg,
                                              const HamiltonianModel* model = nullptr);

struct HKResult {
  WaveFunction psi;
  /// Coefficient-weighted share of the evolved Gaussians lying on the output grid.
  double ensemble_coverage = 1.0;
  std::size_t nodes = 0;
  double t = 0.0;
};

/// Trajectory ensemble that can be advanced in time and resynthesized for any
/// input expressed as Fourier-Bargmann coefficients on its phase grid.
class HKEnsemble {
public:
  HKEnsemble(const HamiltonianModel& model, const PhaseGrid& nodes, const HKConfig& cfg, double hbar,
             double t0 = 0.0);

  /// Integrates every trajectory up to t (t must not move backwards).
  void advance_to(double t);
  double time() const { return t_; }

  /// Synthesizes sum_z w(z) coeff(z) (...) on `grid`.
  HKResult synthesize(const std::vector<Complex>& coefficients, const GridSpec& grid) const;

  const PhaseGrid& nodes() const { return nodes_; }
  double hbar() const { return hbar_; }
  /// Current prefactor of node k.
  const HKPrefactor& prefactor(std::size_t k) const { return states_[k].prefactor; }
  const FlowState& flow_state(std::size_t k) const { return states_[k].flow; }

private:
  struct NodeState {
    FlowState flow;
    HKPrefactor prefactor;
    double subprincipal_integral = 0.0;
    double subprincipal_last = 0.0;
  };

  void advance_node(NodeState& s, double t) const;
  SiegelMatrix theta_of(const FlowState& s) const;
  Complex det_arg_of(const FlowState& s) const;

  const HamiltonianModel* model_;
  PhaseGrid nodes_;
  HKConfig cfg_;
  double hbar_;
  double t_;
  std::vector<NodeState> states_;
  /// Theta for the frozen and constant modes.
  std::optional<SiegelMatrix> fixed_theta_;
  ComplexMatrix gamma_bar_;
};

/// Leading-order HK propagation of psi0 to time t on psi0's grid. The phase
/// grid is built from psi0 unless `nodes` is given (needed for linearity).
HKResult hk_propagate(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                      const HKConfig& cfg, const std::optional<PhaseGrid>& nodes = std::nullopt,
                      double t0 = 0.0);

/// HK propagation at several increasing times with one ensemble.
std::vector<HKResult> hk_propagate_series(const HamiltonianModel& model, const WaveFunction& psi0,
                                          const std::vector<double>& times, const HKConfig& cfg,
                                          double t0 = 0.0);

/// <phi, HK_{t0} phi> - 1 for a coherent state: numerical check of calibrate().
Complex calibration_residual(const HKConfig& cfg, const PhasePoint& z, double hbar,
                             const GridSpec& grid);

// Kernel diagnostics ---------------------------------------------------------

struct DecayBin {
  double lower = 0.0;
  double upper = 0.0;
  double max_abs_ktilde = 0.0;
  long count = 0;
};

struct KernelReport {
  std::vector<DecayBin> bins;
  /// (2 pi hbar)^{-d} <apply(phi_X), phi_Y>, row = X index, column = Y index.
  ComplexMatrix ktilde;
  /// Per X: index of the Y node with the largest |ktilde| and its distance to
  /// flow_map(X) in units of sqrt(hbar).
  std::vector<std::size_t> peak_y;
  std::vector<double> peak_offset;
  bool monotone = true;
  double peak = 0.0;
};

/// Samples the Fourier-Bargmann kernel of a linear operator on coherent states
/// of width iI and bins max |ktilde| by off-graph distance |flow_map(X) - Y| / sqrt(hbar).
KernelReport fb_kernel_diagnostic(const std::function<WaveFunction(const WaveFunction&)>& apply,
                                  const std::function<PhasePoint(const PhasePoint&)>& flow_map,
                                  const std::vector<PhasePoint>& x_nodes,
                                  const std::vector<PhasePoint>& y_nodes, double hbar,
                                  const GridSpec& grid, double bin_width = 1.0, int workers = 1);

struct SchurBound {
  double bound = 0.0;
  bool boundary_warning = false;
};

/// (2 pi hbar)^{-d} max(sup_Y sum_X wx |K|, sup_X sum_Y wy |K|) for samples
/// |K(X_i, Y_j)| = |<U phi_X, phi_Y>|. Warns when samples on either grid's
/// boundary exceed 1e-3 of the peak.
SchurBound schur_norm_bound(const RealMatrix& abs_kernel, const PhaseGrid& x_grid,
                            const PhaseGrid& y_grid, double hbar);

}  // namespace hk
