#pragma once

#include <memory>

#include "hk/coherent.hpp"

namespace hk {

/// amplitude * (pi hbar)^{-d/4} exp((i/hbar) p.(x - q/2) + (i/2hbar) W (x-q).(x-q)).
/// For evolved coherent states the amplitude carries a_Gamma(t) and the phase.
struct GaussianState {
  PhasePoint center;
  SiegelMatrix width;
  Complex amplitude;
  double hbar = 1.0;
};

WaveFunction evaluate(const GaussianState& g, const GridSpec& grid);

/// Exact evolution of phi_z^{Gamma0} under a quadratic Hamiltonian. The model
/// is rejected when its Hessian differs between two sample points.
GaussianState exact_quadratic_coherent(const HamiltonianModel& model, const PhasePoint& z,
                                       const SiegelMatrix& gamma0, double t, double hbar,
                                       double t0 = 0.0,
                                       int steps_per_unit_time = kDefaultStepsPerUnitTime);

/// Exact quadratic propagation of psi0: Fourier-Bargmann decomposition on
/// coherent states of width gamma_decomp, exact evolution of every node,
/// resynthesis on psi0's grid. Error is quadrature error only.
WaveFunction exact_quadratic_apply(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                                   const SiegelMatrix& gamma_decomp, const QuadratureOptions& options = {},
                                   double t0 = 0.0,
                                   int steps_per_unit_time = kDefaultStepsPerUnitTime);

/// Strang split-operator solver for H = T(xi) + V(x) on a periodic box.
///
/// The box length per axis is counts * spacing. Before and after every run the
/// state is checked for mass near the box boundary and spectral mass near the
/// Nyquist band; either exceeding kTruncationThreshold raises GridError.
class SplitStepper {
public:
  SplitStepper(const HamiltonianModel& model, const GridSpec& grid, double hbar, double dt);
  ~SplitStepper();
  SplitStepper(const SplitStepper&) = delete;
  SplitStepper& operator=(const SplitStepper&) = delete;

  /// Applies `steps` Strang steps of size dt in place.
  void advance(WaveFunction& psi, int steps);
  /// Raises GridError when psi leaks into the boundary or the spectral edge.
  void check(const WaveFunction& psi);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// psi0 evolved to t with `steps` Strang steps.
WaveFunction split_step_propagate(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                                  int steps);

}  // namespace hk
