#include "hk/coherent.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hk/parallel.hpp"

namespace hk {

namespace {

constexpr double kPi = std::numbers::pi;
// |term| >= exp(-kWindowExponent / 2) inside the evaluation window.
constexpr double kWindowExponent = 80.0;

}  // namespace

SiegelMatrix::SiegelMatrix(const ComplexMatrix& m) : m_(0.5 * (m + m.transpose())) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) throw Error("Siegel matrix must be square and non-empty");
  if (!m_.allFinite()) throw Error("Siegel matrix has non-finite entries");
  const RealMatrix im = m_.imag();
  if (!is_positive_definite(im, 1e-12)) throw Error("Siegel matrix: imaginary part is not positive definite");
  a_ = std::pow(im.determinant(), 0.25);
}

SiegelMatrix SiegelMatrix::scaled_identity(int d, double im_scale) {
  return SiegelMatrix(kI * im_scale * ComplexMatrix::Identity(d, d));
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (int c : counts) n *= static_cast<std::size_t>(c);
  return n;
}

double GridSpec::weight(std::size_t flat) const {
  double w = 1.0;
  for (int a = dim() - 1; a >= 0; --a) {
    const int i = static_cast<int>(flat % counts[a]);
    flat /= counts[a];
    double wa = spacing(a);
    if (counts[a] > 1 && (i == 0 || i == counts[a] - 1)) wa *= 0.5;
    w *= wa;
  }
  return w;
}

RealVector GridSpec::point(std::size_t flat) const {
  RealVector x(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    const int i = static_cast<int>(flat % counts[a]);
    flat /= counts[a];
    x(a) = origin(a) + spacing(a) * i;
  }
  return x;
}

GridSpec GridSpec::centered(const RealVector& center, const RealVector& half_width,
                            const std::vector<int>& counts) {
  GridSpec g;
  const int d = static_cast<int>(counts.size());
  g.origin = center - half_width;
  g.spacing.resize(d);
  for (int a = 0; a < d; ++a) {
    if (counts[a] < 2) throw Error("grid needs at least two points per axis");
    g.spacing(a) = 2.0 * half_width(a) / (counts[a] - 1);
  }
  g.counts = counts;
  return g;
}

WaveFunction WaveFunction::zeros(const GridSpec& grid, double hbar) {
  WaveFunction w;
  w.grid = grid;
  w.values.assign(grid.size(), Complex{});
  w.hbar = hbar;
  return w;
}

Complex inner_product(const WaveFunction& psi, const WaveFunction& phi) {
  if (psi.values.size() != phi.values.size()) throw Error("inner_product: grid mismatch");
  Complex s{};
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    s += psi.grid.weight(i) * psi.values[i] * std::conj(phi.values[i]);
  return s;
}

double l2_norm(const WaveFunction& psi) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i) s += psi.grid.weight(i) * std::norm(psi.values[i]);
  return std::sqrt(s);
}

double l2_distance(const WaveFunction& a, const WaveFunction& b) {
  if (a.values.size() != b.values.size()) throw Error("l2_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.grid.weight(i) * std::norm(a.values[i] - b.values[i]);
  return std::sqrt(s);
}

namespace {

// Pre-digested Gaussian term for fast pointwise evaluation.
struct PreparedTerm {
  int d;
  std::vector<double> q, p;
  std::vector<Complex> w;  // row-major width
  Complex coefficient;
  std::vector<int> lo, hi;  // inclusive index window per axis
  bool empty = false;

  Complex eval_unit(const double* x, double hbar) const {
    double lin = 0.0;
    Complex quad{};
    for (int i = 0; i < d; ++i) {
      const double dxi = x[i] - q[i];
      lin += p[i] * (x[i] - 0.5 * q[i]);
      for (int j = 0; j < d; ++j) quad += w[i * d + j] * dxi * (x[j] - q[j]);
    }
    return std::exp(kI * (lin + 0.5 * quad) / hbar);
  }
};

PreparedTerm prepare(const GridSpec& grid, double hbar, const PhasePoint& center,
                     const ComplexMatrix& width, Complex coefficient) {
  const int d = grid.dim();
  PreparedTerm t;
  t.d = d;
  t.q.assign(center.q.data(), center.q.data() + d);
  t.p.assign(center.p.data(), center.p.data() + d);
  t.w.resize(static_cast<std::size_t>(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t.w[i * d + j] = width(i, j);
  t.coefficient = coefficient;
  const RealMatrix sinv = RealMatrix(width.imag()).inverse();
  t.lo.resize(d);
  t.hi.resize(d);
  for (int a = 0; a < d; ++a) {
    const double ext = std::sqrt(kWindowExponent * hbar * std::max(0.0, sinv(a, a)));
    const double lo = (t.q[a] - ext - grid.origin(a)) / grid.spacing(a);
    const double hi = (t.q[a] + ext - grid.origin(a)) / grid.spacing(a);
    t.lo[a] = static_cast<int>(std::max(0.0, std::ceil(lo)));
    t.hi[a] = static_cast<int>(std::min(static_cast<double>(grid.counts[a] - 1), std::floor(hi)));
    if (t.lo[a] > t.hi[a] || !std::isfinite(lo) || !std::isfinite(hi)) t.empty = true;
  }
  return t;
}

// Visits every grid point in the window lo..hi (inclusive per axis), with the
// first axis further restricted to [row_begin, row_end).
template <class F>
void for_window(const GridSpec& grid, const std::vector<int>& lo, const std::vector<int>& hi,
                int row_begin, int row_end, F&& f) {
  const int d = grid.dim();
  std::vector<int> first_lo = lo, first_hi = hi;
  first_lo[0] = std::max(lo[0], row_begin);
  first_hi[0] = std::min(hi[0], row_end - 1);
  if (first_lo[0] > first_hi[0]) return;
  std::vector<int> idx = first_lo;
  std::vector<double> x(d);
  while (true) {
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      flat = flat * grid.counts[a] + static_cast<std::size_t>(idx[a]);
      x[a] = grid.origin(a) + grid.spacing(a) * idx[a];
    }
    f(flat, x.data());
    int a = d - 1;
    while (a >= 0) {
      if (++idx[a] <= first_hi[a]) break;
      idx[a] = first_lo[a];
      --a;
    }
    if (a < 0) break;
  }
}


double coherent_prefactor(int d, double hbar, double a_gamma) {
  return std::pow(kPi * hbar, -0.25 * d) * a_gamma;
}

}  // namespace

WaveFunction coherent_state(const PhasePoint& z, const SiegelMatrix& gamma, double hbar,
                            const GridSpec& grid) {
  if (!(hbar > 0.0)) throw Error("coherent_state: hbar must be positive");
  const int d = gamma.dim();
  if (grid.dim() != d || z.dim() != d) throw Error("coherent_state: dimension mismatch");

  // Momentum content must sit well inside the grid's Nyquist band.
  const RealMatrix s = gamma.imag();
  const RealMatrix r = gamma.matrix().real();
  const RealMatrix sinv = s.inverse();
  const RealMatrix pcov = 0.5 * hbar * (s + r * sinv * r);
  for (int a = 0; a < d; ++a) {
    const double reach = std::abs(z.p(a)) + 8.0 * std::sqrt(pcov(a, a));
    if (reach >= kPi * hbar / grid.spacing(a))
      throw GridError("coherent_state: grid spacing too coarse for momentum on axis " + std::to_string(a));
  }

  WaveFunction out = WaveFunction::zeros(grid, hbar);
  const Complex c = coherent_prefactor(d, hbar, gamma.normalization());
  const PreparedTerm term = prepare(grid, hbar, z, gamma.matrix(), c);
  if (!term.empty)
    for_window(grid, term.lo, term.hi, 0, grid.counts[0], [&](std::size_t flat, const double* x) {
      out.values[flat] = c * term.eval_unit(x, hbar);
    });
  const double mass = l2_norm(out);
  if (1.0 - mass * mass > kTruncationThreshold)
    throw GridError("coherent_state: grid truncates " + std::to_string(1.0 - mass * mass) +
                    " of the mass");
  return out;
}

Complex coherent_overlap_formula(const PhasePoint& x, const PhasePoint& z, double hbar) {
  const PhaseVector a = x.packed();
  const PhaseVector b = z.packed();
  const double sigma = (symplectic_j(x.dim()) * a).dot(b);
  return std::exp(Complex(-(a - b).squaredNorm() / (4.0 * hbar), sigma / (2.0 * hbar)));
}

WaveFunction synthesize(const GridSpec& grid, double hbar, const std::vector<GaussianTerm>& terms,
                        int workers, std::vector<double>* on_grid_mass) {
  WaveFunction out = WaveFunction::zeros(grid, hbar);
  std::vector<PreparedTerm> prepared;
  prepared.reserve(terms.size());
  for (const auto& t : terms) prepared.push_back(prepare(grid, hbar, t.center, t.width, t.coefficient));

  const int rows = grid.counts[0];
  parallel_for(static_cast<std::size_t>(rows), workers, [&](std::size_t r0, std::size_t r1) {
    for (const auto& t : prepared) {
      if (t.empty || t.coefficient == Complex{}) continue;
      for_window(grid, t.lo, t.hi, static_cast<int>(r0), static_cast<int>(r1),
                 [&](std::size_t flat, const double* x) { out.values[flat] += t.coefficient * t.eval_unit(x, hbar); });
    }
  });

  if (on_grid_mass) {
    on_grid_mass->assign(terms.size(), 0.0);
    parallel_for(terms.size(), workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const auto& t = prepared[k];
        const RealMatrix s = terms[k].width.imag();
        const double full = std::pow(kPi * hbar, 0.5 * grid.dim()) / std::sqrt(s.determinant());
        double m = 0.0;
        if (!t.empty)
          for_window(grid, t.lo, t.hi, 0, rows, [&](std::size_t flat, const double* x) {
            m += grid.weight(flat) * std::norm(t.eval_unit(x, hbar));
          });
        (*on_grid_mass)[k] = m / full;
      }
    });
  }
  return out;
}

double PhaseGrid::volume() const {
  double v = 1.0;
  for (Eigen::Index a = 0; a < half_width.size(); ++a) v *= 2.0 * half_width(a);
  return v;
}

PhaseGrid make_phase_grid(const RealVector& center, const RealVector& half_width,
                          const std::vector<int>& counts, const RealVector& offset_fraction) {
  const int n2 = static_cast<int>(counts.size());
  if (n2 % 2 != 0 || center.size() != n2 || half_width.size() != n2)
    throw Error("make_phase_grid: inconsistent box description");
  PhaseGrid g;
  g.center = center;
  g.half_width = half_width;
  g.counts = counts;
  std::vector<double> h(n2);
  std::size_t total = 1;
  for (int a = 0; a < n2; ++a) {
    if (counts[a] < 2) throw Error("make_phase_grid: need at least 2 nodes per axis");
    h[a] = 2.0 * half_width(a) / (counts[a] - 1);
    total *= static_cast<std::size_t>(counts[a]);
  }
  g.nodes.reserve(total);
  g.weights.reserve(total);
  std::vector<int> idx(n2, 0);
  PhaseVector x(n2);
  const int d = n2 / 2;
  for (std::size_t k = 0; k < total; ++k) {
    double w = 1.0;
    for (int a = 0; a < n2; ++a) {
      const double shift = offset_fraction.size() == n2 ? offset_fraction(a) * h[a] : 0.0;
      x(a) = center(a) - half_width(a) + shift + h[a] * idx[a];
      w *= (idx[a] == 0 || idx[a] == counts[a] - 1) ? 0.5 * h[a] : h[a];
    }
    g.nodes.push_back(PhasePoint{x.head(d), x.tail(d)});
    g.weights.push_back(w);
    for (int a = n2 - 1; a >= 0; --a) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
  }
  return g;
}

std::vector<Complex> fb_transform(const WaveFunction& psi, const SiegelMatrix& gamma,
                                  const PhaseGrid& zgrid, int workers) {
  const int d = gamma.dim();
  if (psi.grid.dim() != d) throw Error("fb_transform: dimension mismatch");
  const double hbar = psi.hbar;
  const double scale = std::pow(2.0 * kPi * hbar, -0.5 * d);
  const Complex c = coherent_prefactor(d, hbar, gamma.normalization());
  std::vector<Complex> out(zgrid.size());
  parallel_for(zgrid.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const PreparedTerm t = prepare(psi.grid, hbar, zgrid.nodes[k], gamma.matrix(), c);
      Complex s{};
      if (!t.empty)
        for_window(psi.grid, t.lo, t.hi, 0, psi.grid.counts[0], [&](std::size_t flat, const double* x) {
          s += psi.grid.weight(flat) * psi.values[flat] * std::conj(c * t.eval_unit(x, hbar));
        });
      out[k] = scale * s;
    }
  });
  return out;
}

InverseResult fb_inverse(const std::vector<Complex>& field, const PhaseGrid& zgrid,
                         const SiegelMatrix& gamma, const GridSpec& grid, double hbar, int workers) {
  if (field.size() != zgrid.size()) throw Error("fb_inverse: field does not match the phase grid");
  const int d = gamma.dim();
  // psi = (2 pi hbar)^{-d/2} int FB[psi](z) phi_z dz.
  const Complex c = coherent_prefactor(d, hbar, gamma.normalization()) * std::pow(2.0 * kPi * hbar, -0.5 * d);
  std::vector<GaussianTerm> terms;
  terms.reserve(field.size());
  for (std::size_t k = 0; k < field.size(); ++k)
    terms.push_back(GaussianTerm{zgrid.nodes[k], gamma.matrix(), zgrid.weights[k] * field[k] * c});
  InverseResult r;
  r.psi = synthesize(grid, hbar, terms, workers);
  r.coverage_ok = zgrid.coverage >= 1.0 - 1e-8 - 1e-12;
  return r;
}

PhaseMoments phase_moments(const WaveFunction& psi) {
  const GridSpec& g = psi.grid;
  const int d = g.dim();
  const double hbar = psi.hbar;
  PhaseMoments m;
  m.mean = RealVector::Zero(2 * d);
  RealVector second = RealVector::Zero(2 * d);
  double norm2 = 0.0;
  std::vector<std::size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * g.counts[a + 1];
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double w = g.weight(k);
    const RealVector x = g.point(k);
    const double rho = std::norm(psi.values[k]);
    norm2 += w * rho;
    for (int a = 0; a < d; ++a) {
      const int i = static_cast<int>((k / stride[a]) % g.counts[a]);
      Complex deriv{};
      if (i > 0 && i < g.counts[a] - 1)
        deriv = (psi.values[k + stride[a]] - psi.values[k - stride[a]]) / (2.0 * g.spacing(a));
      m.mean(a) += w * rho * x(a);
      second(a) += w * rho * x(a) * x(a);
      m.mean(d + a) += w * hbar * std::imag(std::conj(psi.values[k]) * deriv);
      second(d + a) += w * hbar * hbar * std::norm(deriv);
    }
  }
  if (norm2 <= 0.0) throw Error("phase_moments: zero wavefunction");
  m.mean /= norm2;
  second /= norm2;
  m.variance = (second - m.mean.cwiseProduct(m.mean)).cwiseMax(0.0);
  return m;
}

PhaseGrid build_quadrature(const WaveFunction& psi0, const SiegelMatrix& gamma,
                           const QuadratureOptions& options) {
  const double target = options.coverage_target;
  if (!(target > 0.0 && target < 1.0)) throw Error("build_quadrature: coverage target must lie in (0, 1)");
  if (!(options.density > 0.0)) throw Error("build_quadrature: density must be positive");
  const int d = gamma.dim();
  const double hbar = psi0.hbar;
  const double norm2 = std::pow(l2_norm(psi0), 2);
  if (norm2 <= 0.0) throw Error("build_quadrature: zero wavefunction");

  // FB density covariance = state covariance + covariance of the window state.
  const PhaseMoments mom = phase_moments(psi0);
  const RealMatrix s = gamma.imag();
  const RealMatrix r = gamma.matrix().real();
  const RealMatrix sinv = s.inverse();
  const RealMatrix pcov = 0.5 * hbar * (s + r * sinv * r);
  RealVector sigma(2 * d);
  RealVector spacing(2 * d);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(s, Eigen::EigenvaluesOnly);
  const double smin = es.eigenvalues().minCoeff();
  const double smax = es.eigenvalues().maxCoeff();
  const double base = std::sqrt(hbar) / options.density;
  for (int a = 0; a < d; ++a) {
    sigma(a) = std::sqrt(mom.variance(a) + 0.5 * hbar * sinv(a, a));
    sigma(d + a) = std::sqrt(mom.variance(d + a) + pcov(a, a));
    spacing(a) = base * std::min(1.0, 1.0 / std::sqrt(smax));
    spacing(d + a) = base * std::min(1.0, std::sqrt(smin));
  }

  RealVector offset;
  if (options.jitter > 0.0) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    offset.resize(2 * d);
    for (int a = 0; a < 2 * d; ++a) offset(a) = options.jitter * u(rng);
  }

  // Gaussian tail estimate for the starting box, then widen until covered.
  double scale = std::sqrt(2.0 * std::log(4.0 * d / (1.0 - target)));
  bool margin_added = false;
  while (true) {
    RealVector half = scale * sigma;
    if (half.maxCoeff() > options.max_half_width)
      throw Error("build_quadrature: box search exceeded the maximum half width " +
                  std::to_string(options.max_half_width));
    std::vector<int> counts(2 * d);
    for (int a = 0; a < 2 * d; ++a) {
      counts[a] = static_cast<int>(std::ceil(2.0 * half(a) / spacing(a))) + 1;
      if (counts[a] % 2 == 0) ++counts[a];
    }
    PhaseGrid g = make_phase_grid(mom.mean, half, counts, offset);
    const std::vector<Complex> fb = fb_transform(psi0, gamma, g, options.workers);
    double mass = 0.0;
    for (std::size_t k = 0; k < fb.size(); ++k) mass += g.weights[k] * std::norm(fb[k]);
    g.coverage = std::min(1.0, mass / norm2);
    if (mass / norm2 >= target) {
      if (margin_added || options.margin <= 0.0) return g;
      scale += options.margin;
      margin_added = true;
      continue;
    }
    scale += 0.5;
  }
}

SiegelMatrix gamma_update(const FlowState& state, const SiegelMatrix& gamma0) {
  const ComplexMatrix g = gamma0.matrix();
  const ComplexMatrix num = state.C.cast<Complex>() + state.D.cast<Complex>() * g;
  const ComplexMatrix den = state.A.cast<Complex>() + state.B.cast<Complex>() * g;
  const ComplexMatrix gt = num * den.inverse();
  try {
    return SiegelMatrix(gt);
  } catch (const Error&) {
    throw Error("gamma_update: evolved width left the Siegel space (symplecticity lost upstream)");
  }
}

}  // namespace hk
