#include "hk/reference.hpp"

#include <cmath>
#include <numbers>

#include <fftw3.h>

namespace hk {

namespace {

constexpr double kPi = std::numbers::pi;

// Fraction of each axis (at both ends, in space and in frequency) that must
// stay empty.
constexpr double kEdgeFraction = 0.05;

void require_quadratic(const HamiltonianModel& model, double t0, double t) {
  const int d = model.dim;
  const PhaseVector a = PhaseVector::Zero(2 * d);
  PhaseVector b(2 * d);
  for (int k = 0; k < 2 * d; ++k) b(k) = 0.7 + 0.3 * k;
  const RealMatrix ha = model.hessian(t0, a);
  const RealMatrix hb = model.hessian(t0, b);
  const RealMatrix hc = model.hessian(t, b);
  const double scale = std::max(1.0, ha.cwiseAbs().maxCoeff());
  if ((ha - hb).cwiseAbs().maxCoeff() > 1e-12 * scale || (ha - hc).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("model '" + model.name + "' is not quadratic (Hessian varies)");
}

// Affine flow of a quadratic model: z_t = F z + shift, delta(z) quadratic.
struct AffineFlow {
  FlowState origin;  // trajectory from z = 0 (carries F)
  Complex inv_root;  // det(A + B Gamma0)^{-1/2}, branch-continuous
  SiegelMatrix width;
  // delta(z) = c + g.z + z.Q z / 2
  double c = 0.0;
  RealVector g;
  RealMatrix Q;

  PhasePoint image(const PhasePoint& z) const {
    const PhaseVector x = origin.stability() * z.packed() + origin.z.packed();
    return PhasePoint::unpack(x);
  }
  double delta(const PhasePoint& z) const {
    const PhaseVector x = z.packed();
    return c + g.dot(x) + 0.5 * x.dot(Q * x);
  }
};

double delta_of(const FlowState& s, const PhasePoint& z0) {
  return s.action + 0.5 * (z0.p.dot(z0.q) - s.z.p.dot(s.z.q));
}

AffineFlow affine_flow(const HamiltonianModel& model, const SiegelMatrix& gamma0, double t0, double t,
                       int steps_per_unit_time) {
  require_quadratic(model, t0, t);
  const int d = model.dim;
  const int steps = default_steps(t0, t, steps_per_unit_time);
  auto run = [&](const PhaseVector& x) {
    return integrate_flow(model, PhasePoint::unpack(x), t0, t, steps);
  };
  const TrajectoryRecord base = run(PhaseVector::Zero(2 * d));

  // det(A + B Gamma0) starts at 1; follow its square root along the samples.
  BranchTracker tracker(Complex(1.0), Complex(1.0));
  for (std::size_t k = 1; k < base.samples.size(); ++k) {
    const FlowState& s = base.samples[k];
    const Complex det = (s.A.cast<Complex>() + s.B.cast<Complex>() * gamma0.matrix()).determinant();
    if (std::abs(rotation_angle(tracker.value(), det)) >= 0.5 * kPi)
      throw Error("exact_quadratic_coherent: determinant turns too fast; raise steps per unit time");
    tracker.advance(det);
  }

  AffineFlow f{base.final(), 1.0 / tracker.root(), gamma_update(base.final(), gamma0), 0.0, {}, {}};
  f.c = delta_of(base.final(), PhasePoint::unpack(PhaseVector::Zero(2 * d)));
  const int n = 2 * d;
  f.g = RealVector::Zero(n);
  f.Q = RealMatrix::Zero(n, n);
  std::vector<double> plus(n), minus(n);
  for (int i = 0; i < n; ++i) {
    PhaseVector e = PhaseVector::Zero(n);
    e(i) = 1.0;
    plus[i] = delta_of(run(e).final(), PhasePoint::unpack(e));
    minus[i] = delta_of(run(-e).final(), PhasePoint::unpack(-e));
    f.g(i) = 0.5 * (plus[i] - minus[i]);
    f.Q(i, i) = plus[i] + minus[i] - 2.0 * f.c;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      PhaseVector e = PhaseVector::Zero(n);
      e(i) = 1.0;
      e(j) = 1.0;
      const double v = delta_of(run(e).final(), PhasePoint::unpack(e));
      f.Q(i, j) = f.Q(j, i) = v - f.c - f.g(i) - f.g(j) - 0.5 * (f.Q(i, i) + f.Q(j, j));
    }
  return f;
}

}  // namespace

WaveFunction evaluate(const GaussianState& g, const GridSpec& grid) {
  const int d = grid.dim();
  const Complex c = g.amplitude * std::pow(kPi * g.hbar, -0.25 * d);
  return synthesize(grid, g.hbar, {GaussianTerm{g.center, g.width.matrix(), c}});
}

GaussianState exact_quadratic_coherent(const HamiltonianModel& model, const PhasePoint& z,
                                       const SiegelMatrix& gamma0, double t, double hbar, double t0,
                                       int steps_per_unit_time) {
  if (!(hbar > 0.0)) throw Error("exact_quadratic_coherent: hbar must be positive");
  if (t == t0) return GaussianState{z, gamma0, gamma0.normalization(), hbar};
  const AffineFlow f = affine_flow(model, gamma0, t0, t, steps_per_unit_time);
  const Complex amp = gamma0.normalization() * f.inv_root * std::exp(kI * f.delta(z) / hbar);
  return GaussianState{f.image(z), f.width, amp, hbar};
}

WaveFunction exact_quadratic_apply(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                                   const SiegelMatrix& gamma_decomp, const QuadratureOptions& options,
                                   double t0, int steps_per_unit_time) {
  const PhaseGrid nodes = build_quadrature(psi0, gamma_decomp, options);
  const std::vector<Complex> coeff = fb_transform(psi0, gamma_decomp, nodes, options.workers);
  const double hbar = psi0.hbar;
  const int d = gamma_decomp.dim();
  const double norm =
      gamma_decomp.normalization() * std::pow(kPi * hbar, -0.25 * d) * std::pow(2.0 * kPi * hbar, -0.5 * d);
  std::vector<GaussianTerm> terms;
  terms.reserve(nodes.size());
  if (t == t0) {
    for (std::size_t k = 0; k < nodes.size(); ++k)
      terms.push_back({nodes.nodes[k], gamma_decomp.matrix(), nodes.weights[k] * coeff[k] * norm});
  } else {
    const AffineFlow f = affine_flow(model, gamma_decomp, t0, t, steps_per_unit_time);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const PhasePoint& z = nodes.nodes[k];
      const Complex c = nodes.weights[k] * coeff[k] * norm * f.inv_root * std::exp(kI * f.delta(z) / hbar);
      terms.push_back({f.image(z), f.width.matrix(), c});
    }
  }
  return synthesize(psi0.grid, hbar, terms, options.workers);
}

// Split-operator solver -----------------------------------------------------

struct SplitStepper::Impl {
  GridSpec grid;
  double hbar;
  std::size_t n;
  std::vector<Complex> half_potential;
  std::vector<Complex> kinetic;
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }

  // Frequency index of FFT bin k on an axis of length m.
  static int frequency(int k, int m) { return k <= m / 2 ? k : k - m; }

  void load(const WaveFunction& psi) {
    for (std::size_t i = 0; i < n; ++i) {
      buffer[i][0] = psi.values[i].real();
      buffer[i][1] = psi.values[i].imag();
    }
  }

  // Mass within kEdgeFraction of either end of any axis, on index tuples.
  template <class Value>
  double edge_mass(Value&& value, bool spectral) const {
    const int d = grid.dim();
    double edge = 0.0;
    std::vector<int> idx(d, 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
      std::size_t rest = flat;
      for (int a = d - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rest % grid.counts[a]);
        rest /= grid.counts[a];
      }
      bool near = false;
      for (int a = 0; a < d && !near; ++a) {
        const int m = grid.counts[a];
        const int band = std::max(1, static_cast<int>(std::ceil(kEdgeFraction * m)));
        if (spectral)
          near = std::abs(frequency(idx[a], m)) > m / 2 - band;
        else
          near = idx[a] < band || idx[a] >= m - band;
      }
      if (near) edge += value(flat);
    }
    return edge;
  }
};

SplitStepper::SplitStepper(const HamiltonianModel& model, const GridSpec& grid, double hbar, double dt)
    : impl_(std::make_unique<Impl>()) {
  if (!model.split_form) throw Error("split_step: model '" + model.name + "' has no T(xi) + V(x) split");
  if (grid.dim() != model.dim) throw Error("split_step: grid and model dimensions differ");
  if (!(hbar > 0.0)) throw Error("split_step: hbar must be positive");
  Impl& m = *impl_;
  m.grid = grid;
  m.hbar = hbar;
  m.n = grid.size();
  const int d = grid.dim();
  m.half_potential.resize(m.n);
  m.kinetic.resize(m.n);
  std::vector<int> idx(d);
  RealVector xi(d);
  for (std::size_t flat = 0; flat < m.n; ++flat) {
    const RealVector x = grid.point(flat);
    m.half_potential[flat] = std::exp(-kI * (0.5 * dt / hbar) * model.split_form->potential(x));
    std::size_t rest = flat;
    for (int a = d - 1; a >= 0; --a) {
      const int count = grid.counts[a];
      const int k = static_cast<int>(rest % count);
      rest /= count;
      const double length = count * grid.spacing(a);
      xi(a) = 2.0 * kPi * hbar * Impl::frequency(k, count) / length;
    }
    // Normalization of the unnormalized inverse transform is folded in here.
    m.kinetic[flat] =
        std::exp(-kI * (dt / hbar) * model.split_form->kinetic(xi)) / static_cast<double>(m.n);
  }
  m.buffer = fftw_alloc_complex(m.n);
  m.forward = fftw_plan_dft(d, grid.counts.data(), m.buffer, m.buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  m.backward = fftw_plan_dft(d, grid.counts.data(), m.buffer, m.buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!m.forward || !m.backward) throw Error("split_step: FFTW planning failed");
}

SplitStepper::~SplitStepper() = default;

void SplitStepper::check(const WaveFunction& psi) {
  Impl& m = *impl_;
  double total = 0.0;
  for (const Complex& v : psi.values) total += std::norm(v);
  if (total <= 0.0) return;
  const double spatial = m.edge_mass([&](std::size_t i) { return std::norm(psi.values[i]); }, false) / total;
  if (spatial > kTruncationThreshold)
    throw GridError("split_step: wavepacket reaches the box boundary (edge mass " + std::to_string(spatial) + ")");
  m.load(psi);
  fftw_execute(m.forward);
  double spec_total = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) spec_total += m.buffer[i][0] * m.buffer[i][0] + m.buffer[i][1] * m.buffer[i][1];
  const double spectral = m.edge_mass(
      [&](std::size_t i) { return m.buffer[i][0] * m.buffer[i][0] + m.buffer[i][1] * m.buffer[i][1]; }, true);
  if (spectral / spec_total > kTruncationThreshold)
    throw GridError("split_step: spectral tail " + std::to_string(spectral / spec_total) +
                    " near the Nyquist band (aliasing)");
}

void SplitStepper::advance(WaveFunction& psi, int steps) {
  Impl& m = *impl_;
  if (psi.values.size() != m.n) throw Error("split_step: wavefunction does not match the grid");
  if (steps <= 0) return;
  m.load(psi);
  // Adjacent half potential kicks merge into one full kick between steps.
  for (std::size_t i = 0; i < m.n; ++i) {
    const Complex v = m.half_potential[i] * Complex(m.buffer[i][0], m.buffer[i][1]);
    m.buffer[i][0] = v.real();
    m.buffer[i][1] = v.imag();
  }
  for (int s = 0; s < steps; ++s) {
    fftw_execute(m.forward);
    for (std::size_t i = 0; i < m.n; ++i) {
      const Complex v = m.kinetic[i] * Complex(m.buffer[i][0], m.buffer[i][1]);
      m.buffer[i][0] = v.real();
      m.buffer[i][1] = v.imag();
    }
    fftw_execute(m.backward);
    const bool last = s + 1 == steps;
    for (std::size_t i = 0; i < m.n; ++i) {
      const Complex kick = last ? m.half_potential[i] : m.half_potential[i] * m.half_potential[i];
      const Complex v = kick * Complex(m.buffer[i][0], m.buffer[i][1]);
      m.buffer[i][0] = v.real();
      m.buffer[i][1] = v.imag();
    }
  }
  for (std::size_t i = 0; i < m.n; ++i) psi.values[i] = Complex(m.buffer[i][0], m.buffer[i][1]);
}

WaveFunction split_step_propagate(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                                  int steps) {
  if (steps < 1) throw Error("split_step: steps must be >= 1");
  WaveFunction psi = psi0;
  if (t == 0.0) return psi;
  SplitStepper stepper(model, psi0.grid, psi0.hbar, t / steps);
  stepper.check(psi);
  stepper.advance(psi, steps);
  stepper.check(psi);
  return psi;
}

}  // namespace hk
