#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hk {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Canonical symplectic matrix J = [[0, I], [-I, 0]] of size 2d.
RealMatrix symplectic_j(int d);

/// Largest singular value. Closed form for 2x2, power iteration on M^T M otherwise
/// (tolerance 1e-10, at most 1e4 iterations).
double spectral_norm(const RealMatrix& m);

/// Smallest singular value of a complex matrix.
double min_singular_value(const ComplexMatrix& m);

/// True when the Hermitian matrix is positive definite with smallest eigenvalue
/// above tol * max(1, largest |eigenvalue|).
bool is_positive_definite(const RealMatrix& m, double tol = 1e-12);

/// Principal square root of det(m) for a matrix whose Hermitian part is positive
/// definite: product of principal roots of its eigenvalues, all of which lie in
/// the open right half plane.
Complex sqrt_det_right_half_plane(const ComplexMatrix& m);

/// Tracks a complex square root along a sampled path, always picking the root
/// closest to the previous one.
class BranchTracker {
public:
  /// Starts the path at `value` with the given root of it.
  BranchTracker(Complex value, Complex root);

  /// Continues the path to `value` and returns the chosen root.
  Complex advance(Complex value);

  Complex root() const { return root_; }
  Complex value() const { return value_; }
  /// Total argument swept by `value` since the start.
  double unwound_phase() const { return phase_; }

private:
  Complex value_;
  Complex root_;
  double phase_ = 0.0;
};

/// Argument of b/a in (-pi, pi].
double rotation_angle(Complex a, Complex b);

}  // namespace hk
