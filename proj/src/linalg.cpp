#include "hk/linalg.hpp"

#include <cmath>

namespace hk {

RealMatrix symplectic_j(int d) {
  RealMatrix j = RealMatrix::Zero(2 * d, 2 * d);
  j.topRightCorner(d, d).setIdentity();
  j.bottomLeftCorner(d, d) = -RealMatrix::Identity(d, d);
  return j;
}

double spectral_norm(const RealMatrix& m) {
  if (m.rows() == 2 && m.cols() == 2) {
    const double f2 = m.squaredNorm();
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::max(0.0, f2 * f2 - 4.0 * det * det);
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
  }
  const RealMatrix gram = m.transpose() * m;
  if (gram.norm() == 0.0) return 0.0;
  RealVector v = RealVector::Ones(gram.cols());
  // A fixed irregular start vector avoids accidental orthogonality to the
  // dominant eigenvector for structured inputs.
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 0.1 * static_cast<double>(i + 1) / static_cast<double>(v.size());
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    RealVector w = gram * v;
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(0.0, lambda));
}

double min_singular_value(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().minCoeff();
}

bool is_positive_definite(const RealMatrix& m, double tol) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev.minCoeff() > tol * scale;
}

Complex sqrt_det_right_half_plane(const ComplexMatrix& m) {
  if (m.rows() == 1) return std::sqrt(m(0, 0));
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, false);
  Complex root{1.0, 0.0};
  for (Eigen::Index i = 0; i < m.rows(); ++i) root *= std::sqrt(es.eigenvalues()(i));
  return root;
}

double rotation_angle(Complex a, Complex b) { return std::arg(b / a); }

BranchTracker::BranchTracker(Complex value, Complex root) : value_(value), root_(root) {}

Complex BranchTracker::advance(Complex value) {
  phase_ += rotation_angle(value_, value);
  Complex candidate = std::sqrt(value);
  if (std::abs(candidate - root_) > std::abs(-candidate - root_)) candidate = -candidate;
  value_ = value;
  root_ = candidate;
  return root_;
}

}  // namespace hk
