#pragma once

#include <cstdint>
#include <vector>

#include "hk/classical_flow.hpp"

namespace hk {

/// Complex symmetric d x d matrix with positive definite imaginary part.
class SiegelMatrix {
public:
  /// Symmetrizes `m` and checks Im m > 0 (tolerance 1e-12). Throws hk::Error.
  explicit SiegelMatrix(const ComplexMatrix& m);

  static SiegelMatrix scaled_identity(int d, double im_scale = 1.0);

  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  RealMatrix imag() const { return m_.imag(); }
  /// a_Gamma = det^{1/4} Im Gamma (positive root).
  double normalization() const { return a_; }

private:
  ComplexMatrix m_;
  double a_;
};

/// Uniform tensor grid. Row-major flattening: the last axis varies fastest.
struct GridSpec {
  RealVector origin;
  RealVector spacing;
  std::vector<int> counts;

  int dim() const { return static_cast<int>(counts.size()); }
  std::size_t size() const;
  /// Trapezoid weight of a flat index (endpoints carry half weight per axis).
  double weight(std::size_t flat) const;
  RealVector point(std::size_t flat) const;
  double upper(int axis) const { return origin(axis) + spacing(axis) * (counts[axis] - 1); }

  /// Grid spanning [center - half_width, center + half_width] per axis.
  static GridSpec centered(const RealVector& center, const RealVector& half_width,
                           const std::vector<int>& counts);
};

/// Samples of a wavefunction on a GridSpec.
struct WaveFunction {
  GridSpec grid;
  std::vector<Complex> values;
  double hbar = 1.0;

  static WaveFunction zeros(const GridSpec& grid, double hbar);
};

/// Raised when a grid cannot represent a state to the required accuracy.
class GridError : public Error {
public:
  using Error::Error;
};

/// Threshold for truncated mass of a state on a finite grid.
inline constexpr double kTruncationThreshold = 1e-10;

/// Trapezoid inner product sum w psi conj(phi) (second argument conjugated).
Complex inner_product(const WaveFunction& psi, const WaveFunction& phi);
double l2_norm(const WaveFunction& psi);
/// ||a - b|| on a shared grid.
double l2_distance(const WaveFunction& a, const WaveFunction& b);

/// phi_z^Gamma sampled on `grid`. Throws GridError when the grid loses more
/// than kTruncationThreshold of the mass or cannot resolve the momentum.
WaveFunction coherent_state(const PhasePoint& z, const SiegelMatrix& gamma, double hbar,
                            const GridSpec& grid);

/// Closed form <phi_X, phi_z> for Gamma = iI:
/// exp(-|X - z|^2 / 4 hbar + i sigma(X, z) / 2 hbar), sigma(X, X') = J X . X'.
Complex coherent_overlap_formula(const PhasePoint& x, const PhasePoint& z, double hbar);

/// One Gaussian term c * exp((i/hbar)(p.(x - q/2)) + (i/2hbar) W (x-q).(x-q)).
/// The (pi hbar)^{-d/4} a_W prefactor is part of `coefficient`.
struct GaussianTerm {
  PhasePoint center;
  ComplexMatrix width;
  Complex coefficient;
};

/// Sum over terms sampled on `grid`, accumulated in term order for every grid
/// point so the result is independent of `workers`. If `on_grid_mass` is given
/// it receives, per term, the grid mass of |term / coefficient|^2 normalised
/// by the full-space mass.
WaveFunction synthesize(const GridSpec& grid, double hbar, const std::vector<GaussianTerm>& terms,
                        int workers = 1, std::vector<double>* on_grid_mass = nullptr);

/// Phase-space quadrature nodes with trapezoid weights.
struct PhaseGrid {
  std::vector<PhasePoint> nodes;
  std::vector<double> weights;
  double coverage = 0.0;
  /// Box description: centre, half widths and points per axis (2d axes).
  RealVector center;
  RealVector half_width;
  std::vector<int> counts;

  std::size_t size() const { return nodes.size(); }
  double volume() const;
};

/// Tensor-product trapezoid grid on a box of 2d axes.
PhaseGrid make_phase_grid(const RealVector& center, const RealVector& half_width,
                          const std::vector<int>& counts, const RealVector& offset_fraction = {});

/// (2 pi hbar)^{-d/2} <psi, phi_z^Gamma> at every node.
std::vector<Complex> fb_transform(const WaveFunction& psi, const SiegelMatrix& gamma,
                                  const PhaseGrid& zgrid, int workers = 1);

struct InverseResult {
  WaveFunction psi;
  bool coverage_ok = true;
};

/// sum_nodes w(z) field(z) phi_z^Gamma(x). Flags coverage below 1 - 1e-8.
InverseResult fb_inverse(const std::vector<Complex>& field, const PhaseGrid& zgrid,
                         const SiegelMatrix& gamma, const GridSpec& grid, double hbar,
                         int workers = 1);

struct QuadratureOptions {
  double coverage_target = 1.0 - 1e-8;
  /// Nodes per sqrt(hbar) per axis.
  double density = 2.0;
  /// Extra box half width, in units of the per-axis spread, added once the
  /// coverage target is met. Trims the truncation error of the inversion.
  double margin = 1.0;
  /// Largest half width (any axis) the box search may reach.
  double max_half_width = 60.0;
  /// Random lattice shift as a fraction of the node spacing (0 = none).
  double jitter = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Box-searching quadrature for the Fourier-Bargmann transform of psi0.
/// Throws hk::Error when the required box exceeds max_half_width.
PhaseGrid build_quadrature(const WaveFunction& psi0, const SiegelMatrix& gamma,
                           const QuadratureOptions& options = {});

/// Gamma_t = (C + D Gamma)(A + B Gamma)^{-1}, symmetrized.
SiegelMatrix gamma_update(const FlowState& state, const SiegelMatrix& gamma0);

/// Position and momentum mean of psi and the diagonal of its phase-space
/// covariance (central differences for derivatives).
struct PhaseMoments {
  RealVector mean;
  RealVector variance;
};
PhaseMoments phase_moments(const WaveFunction& psi);

}  // namespace hk
