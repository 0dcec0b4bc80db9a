#pragma once

#include <functional>
#include <optional>
#include <string>

#include "hk/linalg.hpp"

namespace hk {

/// Phase-space point X = (x, xi) packed as a vector of length 2d.
using PhaseVector = RealVector;

/// H = T(xi) + V(x); enables the spectral reference solver.
struct SplitForm {
  std::function<double(const RealVector& xi)> kinetic;
  std::function<double(const RealVector& x)> potential;
};

/// Classical symbol H(t, X) with its first and second derivatives.
///
/// Built-in models are autonomous but every evaluator takes the time argument,
/// so user supplied models may depend on t. Models are immutable once built
/// and safe to share between threads.
struct HamiltonianModel {
  int dim = 1;
  std::string name;
  std::function<double(double t, const PhaseVector& x)> value;
  std::function<RealVector(double t, const PhaseVector& x)> gradient;
  std::function<RealMatrix(double t, const PhaseVector& x)> hessian;
  /// Subprincipal term H1; absent means zero.
  std::function<double(double t, const PhaseVector& x)> subprincipal;
  std::optional<SplitForm> split_form;
};

enum class ModelKind { harmonic, free, quadratic_general, pendulum, relativistic };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelParams {
  int dim = 1;
  /// harmonic: H = |p|^2/2 + omega^2 |q|^2/2.
  double omega = 1.0;
  /// quadratic_general: H = (G q.q + 2 L q.p + K p.p)/2. G and K symmetric.
  RealMatrix G, L, K;
  /// pendulum: H = |p|^2/2 - strength * sum cos(q_i).
  /// relativistic: H = sqrt(1 + |p|^2) + strength * |q|^2 / 2.
  double strength = 1.0;
};

/// Builds one of the built-in subquadratic models.
/// Throws hk::Error for d <= 0 or non-symmetric G/K.
HamiltonianModel make_model(ModelKind kind, const ModelParams& params);

/// Axis-aligned box in phase space R^{2d}.
struct PhaseBox {
  RealVector lower;
  RealVector upper;
};

/// Sampled estimate of delta = sup ||J d^2 H|| over a box.
struct StabilityBound {
  double delta = 0.0;
  PhaseBox sample_box;
  long sample_count = 0;
};

/// Maximum spectral norm of J * hessian(t, X) over an n^{2d} tensor grid
/// spanning `box` (endpoints included).
StabilityBound estimate_delta(const HamiltonianModel& model, const PhaseBox& box, int n,
                              double t = 0.0);

}  // namespace hk
