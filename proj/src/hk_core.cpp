#include "hk/hk_core.hpp"

#include <cmath>
#include <numbers>

#include "hk/parallel.hpp"

namespace hk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxRefinement = 12;

using DetFunction = std::function<Complex(const FlowState&)>;

// Picks the root of `det` closest to `previous`.
Complex continue_root(Complex det, Complex previous) {
  Complex r = std::sqrt(det);
  return std::abs(r - previous) <= std::abs(r + previous) ? r : -r;
}

bool turns_too_far(Complex a, Complex b) { return std::abs(rotation_angle(a, b)) >= 0.5 * kPi; }

// Walks from `from` to `to.t` in 2^level substeps, feeding every determinant
// into `prefactor`. Returns false when some substep still turns too far.
bool refine_segment(const HamiltonianModel& model, const FlowState& from, double t_end,
                    const DetFunction& det_fn, HKPrefactor& prefactor) {
  for (int level = 1; level <= kMaxRefinement; ++level) {
    const int pieces = 1 << level;
    const std::vector<FlowState> sub = continue_flow(model, from, t_end, pieces);
    HKPrefactor trial = prefactor;
    bool ok = true;
    for (std::size_t k = 1; k < sub.size(); ++k) {
      const Complex det = det_fn(sub[k]);
      if (turns_too_far(trial.det_arg, det)) {
        ok = false;
        break;
      }
      trial.branch_phase += rotation_angle(trial.det_arg, det);
      trial.value = continue_root(det, trial.value);
      trial.det_arg = det;
      trial.t = sub[k].t;
    }
    if (ok) {
      prefactor = trial;
      return true;
    }
  }
  return false;
}

std::vector<HKPrefactor> track_along(const TrajectoryRecord& traj, const DetFunction& det_fn,
                                     Complex root0, const HamiltonianModel* model) {
  std::vector<HKPrefactor> out;
  out.reserve(traj.samples.size());
  HKPrefactor cur{root0, det_fn(traj.samples.front()), 0.0, traj.samples.front().t};
  out.push_back(cur);
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    const Complex det = det_fn(traj.samples[k]);
    if (turns_too_far(cur.det_arg, det)) {
      if (!model || !refine_segment(*model, traj.samples[k - 1], traj.samples[k].t, det_fn, cur))
        throw BranchError("prefactor branch is ambiguous near t=" + std::to_string(traj.samples[k].t) +
                          ": determinant turns by pi/2 or more within one step");
      // Land exactly on the recorded sample.
      cur.value = continue_root(det, cur.value);
      cur.det_arg = det;
    } else {
      cur.branch_phase += rotation_angle(cur.det_arg, det);
      cur.value = continue_root(det, cur.value);
      cur.det_arg = det;
    }
    cur.t = traj.samples[k].t;
    out.push_back(cur);
  }
  return out;
}

SiegelMatrix theta_for(const HKConfig& cfg, const FlowState& s) {
  switch (cfg.theta_mode) {
    case ThetaMode::frozen_iI: return SiegelMatrix::scaled_identity(cfg.dim());
    case ThetaMode::constant: return *cfg.theta;
    case ThetaMode::thawed: return gamma_update(s, cfg.gamma);
  }
  throw Error("unknown theta mode");
}

}  // namespace

ThetaMode parse_theta_mode(const std::string& name) {
  if (name == "frozen" || name == "frozen_iI") return ThetaMode::frozen_iI;
  if (name == "constant") return ThetaMode::constant;
  if (name == "thawed") return ThetaMode::thawed;
  throw Error("unknown theta mode '" + name + "' (expected frozen, constant or thawed)");
}

std::string to_string(ThetaMode mode) {
  switch (mode) {
    case ThetaMode::frozen_iI: return "frozen";
    case ThetaMode::constant: return "constant";
    case ThetaMode::thawed: return "thawed";
  }
  return "?";
}

SiegelMatrix HKConfig::theta_at_start() const {
  switch (theta_mode) {
    case ThetaMode::frozen_iI: return SiegelMatrix::scaled_identity(dim());
    case ThetaMode::constant:
      if (!theta) throw Error("constant theta mode requires theta");
      return *theta;
    case ThetaMode::thawed: return gamma;
  }
  throw Error("unknown theta mode");
}

Complex resolution_scalar(const SiegelMatrix& theta, const SiegelMatrix& gamma) {
  const int d = gamma.dim();
  const ComplexMatrix m = -kI * (theta.matrix() - gamma.matrix().conjugate());
  return std::pow(2.0, 0.5 * d) * theta.normalization() * gamma.normalization() /
         sqrt_det_right_half_plane(m);
}

void calibrate(HKConfig& cfg) {
  if (cfg.order != 0) throw Error("only the leading-order amplitude (order 0) is implemented");
  const int d = cfg.dim();
  const SiegelMatrix theta0 = cfg.theta_at_start();
  if (theta0.dim() != d) throw Error("theta and gamma dimensions differ");
  const FlowState start = FlowState::initial(PhasePoint{RealVector::Zero(d), RealVector::Zero(d)}, 0.0);
  const Complex det0 = m_matrix(start, theta0, cfg.gamma).determinant();
  cfg.normalization = std::pow(2.0, 0.5 * d) / (resolution_scalar(theta0, cfg.gamma) * std::sqrt(det0));
  cfg.calibrated = true;
}

HKConfig make_hk_config(ThetaMode mode, const SiegelMatrix& gamma, std::optional<SiegelMatrix> theta) {
  HKConfig cfg;
  cfg.theta_mode = mode;
  cfg.gamma = gamma;
  cfg.theta = std::move(theta);
  if (mode == ThetaMode::constant && !cfg.theta) throw Error("constant theta mode requires theta");
  calibrate(cfg);
  return cfg;
}

std::vector<HKPrefactor> hk_prefactor_frozen(const TrajectoryRecord& traj, const HamiltonianModel* model) {
  const int d = traj.initial.dim();
  const DetFunction det_fn = [](const FlowState& s) {
    const ComplexMatrix m = (s.A + s.D).cast<Complex>() + kI * (s.B - s.C).cast<Complex>();
    return m.determinant();
  };
  return track_along(traj, det_fn, Complex(std::pow(2.0, 0.5 * d), 0.0), model);
}

namespace {

ComplexMatrix m_unchecked(const FlowState& state, const ComplexMatrix& theta, const ComplexMatrix& gbar) {
  return state.C.cast<Complex>() + state.D.cast<Complex>() * gbar -
         theta * (state.A.cast<Complex>() + state.B.cast<Complex>() * gbar);
}

void require_regular(const ComplexMatrix& m) {
  if (min_singular_value(m) <= 1e-12) throw Error("M(Theta, Gamma) is numerically singular");
}

// det M, with the singular-value test only when the determinant is small.
Complex checked_det(const ComplexMatrix& m) {
  const Complex det = m.determinant();
  if (std::abs(det) < 1e-8) require_regular(m);
  return det;
}

}  // namespace

ComplexMatrix m_matrix(const FlowState& state, const SiegelMatrix& theta, const SiegelMatrix& gamma) {
  ComplexMatrix m = m_unchecked(state, theta.matrix(), gamma.matrix().conjugate());
  require_regular(m);
  return m;
}

std::vector<HKPrefactor> hk_prefactor_general(const TrajectoryRecord& traj, const HKConfig& cfg,
                                              const HamiltonianModel* model) {
  if (!cfg.calibrated) throw Error("hk_prefactor_general: configuration is not calibrated");
  const Complex n2 = cfg.normalization * cfg.normalization;
  const DetFunction det_fn = [&cfg, n2](const FlowState& s) {
    return n2 * m_matrix(s, theta_for(cfg, s), cfg.gamma).determinant();
  };
  const FlowState& first = traj.samples.front();
  const Complex root0 =
      cfg.normalization * std::sqrt(m_matrix(first, theta_for(cfg, first), cfg.gamma).determinant());
  return track_along(traj, det_fn, root0, model);
}

// HKEnsemble -----------------------------------------------------------------

HKEnsemble::HKEnsemble(const HamiltonianModel& model, const PhaseGrid& nodes, const HKConfig& cfg,
                       double hbar, double t0)
    : model_(&model), nodes_(nodes), cfg_(cfg), hbar_(hbar), t_(t0) {
  if (!cfg_.calibrated) throw Error("HKEnsemble: configuration is not calibrated");
  if (cfg_.order != 0) throw Error("only the leading-order amplitude (order 0) is implemented");
  if (model.dim != cfg_.dim()) throw Error("HKEnsemble: model and configuration dimensions differ");
  if (!(hbar > 0.0)) throw Error("HKEnsemble: hbar must be positive");
  if (cfg_.theta_mode != ThetaMode::thawed) fixed_theta_ = cfg_.theta_at_start();
  gamma_bar_ = cfg_.gamma.matrix().conjugate();
  states_.resize(nodes_.size());
  parallel_for(nodes_.size(), cfg_.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      NodeState& s = states_[k];
      s.flow = FlowState::initial(nodes_.nodes[k], t0);
      const Complex det = det_arg_of(s.flow);
      s.prefactor = HKPrefactor{
          cfg_.normalization * std::sqrt(m_matrix(s.flow, theta_of(s.flow), cfg_.gamma).determinant()), det,
          0.0, t0};
      if (model_->subprincipal) s.subprincipal_last = model_->subprincipal(t0, s.flow.z.packed());
    }
  });
}

SiegelMatrix HKEnsemble::theta_of(const FlowState& s) const {
  return fixed_theta_ ? *fixed_theta_ : theta_for(cfg_, s);
}

Complex HKEnsemble::det_arg_of(const FlowState& s) const {
  const Complex n2 = cfg_.normalization * cfg_.normalization;
  if (fixed_theta_ && cfg_.dim() == 1) {
    const Complex g = gamma_bar_(0, 0);
    const Complex m = s.C(0, 0) + s.D(0, 0) * g - fixed_theta_->matrix()(0, 0) * (s.A(0, 0) + s.B(0, 0) * g);
    if (std::abs(m) <= 1e-12) throw Error("M(Theta, Gamma) is numerically singular");
    return n2 * m;
  }
  if (fixed_theta_) return n2 * checked_det(m_unchecked(s, fixed_theta_->matrix(), gamma_bar_));
  return n2 * checked_det(m_unchecked(s, theta_for(cfg_, s).matrix(), gamma_bar_));
}

void HKEnsemble::advance_node(NodeState& s, double t) const {
  if (t == s.flow.t) return;
  const int steps = default_steps(s.flow.t, t, cfg_.steps_per_unit_time);
  const double t_start = s.flow.t;
  const double h = (t - t_start) / steps;
  FlowStepper stepper(*model_, s.flow);
  const DetFunction det_fn = [this](const FlowState& f) { return det_arg_of(f); };
  for (int k = 0; k < steps; ++k) {
    const FlowState& before = s.flow;
    const double tn = (k + 1 == steps) ? t : t_start + (k + 1) * h;
    stepper.step_to(tn);
    FlowState after = stepper.state();
    const Complex det = det_arg_of(after);
    if (turns_too_far(s.prefactor.det_arg, det)) {
      if (!refine_segment(*model_, before, tn, det_fn, s.prefactor))
        throw BranchError("HK prefactor branch is ambiguous near t=" + std::to_string(tn));
      s.prefactor.value = continue_root(det, s.prefactor.value);
      s.prefactor.det_arg = det;
    } else {
      s.prefactor.branch_phase += rotation_angle(s.prefactor.det_arg, det);
      s.prefactor.value = continue_root(det, s.prefactor.value);
      s.prefactor.det_arg = det;
    }
    s.prefactor.t = tn;
    if (model_->subprincipal) {
      const double h1 = model_->subprincipal(tn, after.z.packed());
      s.subprincipal_integral += 0.5 * (tn - before.t) * (s.subprincipal_last + h1);
      s.subprincipal_last = h1;
    }
    s.flow = std::move(after);
  }
}

void HKEnsemble::advance_to(double t) {
  if (t < t_) throw Error("HKEnsemble: cannot advance backwards in time");
  parallel_for(states_.size(), cfg_.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) advance_node(states_[k], t);
  });
  t_ = t;
}

HKResult HKEnsemble::synthesize(const std::vector<Complex>& coefficients, const GridSpec& grid) const {
  if (coefficients.size() != states_.size()) throw Error("HKEnsemble: coefficient count mismatch");
  const int d = cfg_.dim();
  const double a_theta0 = cfg_.theta_at_start().normalization();
  const double base = std::pow(2.0, -0.5 * d) * a_theta0 * std::pow(kPi * hbar_, -0.25 * d) *
                      std::pow(2.0 * kPi * hbar_, -0.5 * d);
  std::vector<GaussianTerm> terms;
  std::vector<std::size_t> owner;
  terms.reserve(states_.size());
  for (std::size_t k = 0; k < states_.size(); ++k) {
    if (coefficients[k] == Complex{}) continue;
    const NodeState& s = states_[k];
    const PhasePoint& z = nodes_.nodes[k];
    const double delta = s.flow.action + 0.5 * (z.p.dot(z.q) - s.flow.z.p.dot(s.flow.z.q));
    const Complex phase = std::exp(kI * (delta / hbar_ - s.subprincipal_integral));
    const Complex c = nodes_.weights[k] * coefficients[k] * base * s.prefactor.value * phase;
    terms.push_back(GaussianTerm{s.flow.z, theta_of(s.flow).matrix(), c});
    owner.push_back(k);
  }
  std::vector<double> mass;
  HKResult r;
  r.psi = hk::synthesize(grid, hbar_, terms, cfg_.workers, &mass);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    num += std::abs(terms[k].coefficient) * mass[k];
    den += std::abs(terms[k].coefficient);
  }
  r.ensemble_coverage = den > 0.0 ? num / den : 1.0;
  r.nodes = states_.size();
  r.t = t_;
  return r;
}

HKResult hk_propagate(const HamiltonianModel& model, const WaveFunction& psi0, double t, const HKConfig& cfg,
                      const std::optional<PhaseGrid>& nodes, double t0) {
  QuadratureOptions q = cfg.quadrature;
  q.workers = cfg.workers;
  const PhaseGrid grid = nodes ? *nodes : build_quadrature(psi0, cfg.gamma, q);
  HKEnsemble ensemble(model, grid, cfg, psi0.hbar, t0);
  ensemble.advance_to(t);
  return ensemble.synthesize(fb_transform(psi0, cfg.gamma, grid, cfg.workers), psi0.grid);
}

std::vector<HKResult> hk_propagate_series(const HamiltonianModel& model, const WaveFunction& psi0,
                                          const std::vector<double>& times, const HKConfig& cfg, double t0) {
  QuadratureOptions q = cfg.quadrature;
  q.workers = cfg.workers;
  const PhaseGrid grid = build_quadrature(psi0, cfg.gamma, q);
  const std::vector<Complex> coeff = fb_transform(psi0, cfg.gamma, grid, cfg.workers);
  HKEnsemble ensemble(model, grid, cfg, psi0.hbar, t0);
  std::vector<HKResult> out;
  out.reserve(times.size());
  for (double t : times) {
    ensemble.advance_to(t);
    out.push_back(ensemble.synthesize(coeff, psi0.grid));
  }
  return out;
}

Complex calibration_residual(const HKConfig& cfg, const PhasePoint& z, double hbar, const GridSpec& grid) {
  ModelParams params;
  params.dim = cfg.dim();
  const HamiltonianModel idle = make_model(ModelKind::free, params);
  const WaveFunction phi = coherent_state(z, cfg.gamma, hbar, grid);
  const HKResult r = hk_propagate(idle, phi, 0.0, cfg);
  return inner_product(r.psi, phi) - 1.0;
}

// Kernel diagnostics ---------------------------------------------------------

KernelReport fb_kernel_diagnostic(const std::function<WaveFunction(const WaveFunction&)>& apply,
                                  const std::function<PhasePoint(const PhasePoint&)>& flow_map,
                                  const std::vector<PhasePoint>& x_nodes, const std::vector<PhasePoint>& y_nodes,
                                  double hbar, const GridSpec& grid, double bin_width, int workers) {
  if (!(bin_width > 0.0)) throw Error("fb_kernel_diagnostic: bin width must be positive");
  const int d = grid.dim();
  const SiegelMatrix unit = SiegelMatrix::scaled_identity(d);
  const double scale = std::pow(2.0 * kPi * hbar, -d);

  std::vector<WaveFunction> ystates(y_nodes.size());
  parallel_for(y_nodes.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) ystates[j] = coherent_state(y_nodes[j], unit, hbar, grid);
  });

  KernelReport rep;
  rep.ktilde = ComplexMatrix::Zero(static_cast<Eigen::Index>(x_nodes.size()),
                                   static_cast<Eigen::Index>(y_nodes.size()));
  rep.peak_y.assign(x_nodes.size(), 0);
  rep.peak_offset.assign(x_nodes.size(), 0.0);
  std::vector<PhaseVector> images(x_nodes.size());
  for (std::size_t i = 0; i < x_nodes.size(); ++i) {
    images[i] = flow_map(x_nodes[i]).packed();
    const WaveFunction out = apply(coherent_state(x_nodes[i], unit, hbar, grid));
    parallel_for(y_nodes.size(), workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t j = b; j < e; ++j)
        rep.ktilde(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            scale * inner_product(out, ystates[j]);
    });
  }

  const double root = std::sqrt(hbar);
  for (std::size_t i = 0; i < x_nodes.size(); ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < y_nodes.size(); ++j) {
      const double a = std::abs(rep.ktilde(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      const double dist = (images[i] - y_nodes[j].packed()).norm() / root;
      const std::size_t bin = static_cast<std::size_t>(dist / bin_width);
      if (rep.bins.size() <= bin) {
        const std::size_t old = rep.bins.size();
        rep.bins.resize(bin + 1);
        for (std::size_t b = old; b < rep.bins.size(); ++b) {
          rep.bins[b].lower = bin_width * static_cast<double>(b);
          rep.bins[b].upper = bin_width * static_cast<double>(b + 1);
        }
      }
      rep.bins[bin].max_abs_ktilde = std::max(rep.bins[bin].max_abs_ktilde, a);
      ++rep.bins[bin].count;
      if (a > best) {
        best = a;
        rep.peak_y[i] = j;
        rep.peak_offset[i] = dist;
      }
      rep.peak = std::max(rep.peak, a);
    }
  }
  double last = -1.0;
  for (const DecayBin& b : rep.bins) {
    if (b.count == 0) continue;
    if (last >= 0.0 && b.max_abs_ktilde > last + 1e-12 * rep.peak) rep.monotone = false;
    last = b.max_abs_ktilde;
  }
  return rep;
}

SchurBound schur_norm_bound(const RealMatrix& abs_kernel, const PhaseGrid& x_grid, const PhaseGrid& y_grid,
                            double hbar) {
  if (abs_kernel.rows() != static_cast<Eigen::Index>(x_grid.size()) ||
      abs_kernel.cols() != static_cast<Eigen::Index>(y_grid.size()))
    throw Error("schur_norm_bound: kernel shape does not match the grids");
  const int d = static_cast<int>(x_grid.center.size()) / 2;
  SchurBound out;
  if (abs_kernel.size() == 0) return out;
  const Eigen::Map<const RealVector> wx(x_grid.weights.data(), static_cast<Eigen::Index>(x_grid.size()));
  const Eigen::Map<const RealVector> wy(y_grid.weights.data(), static_cast<Eigen::Index>(y_grid.size()));
  const double over_x = (wx.transpose() * abs_kernel).maxCoeff();
  const double over_y = (abs_kernel * wy).maxCoeff();
  out.bound = std::pow(2.0 * kPi * hbar, -d) * std::max(over_x, over_y);

  auto on_boundary = [](const PhaseGrid& g, std::size_t k) {
    const PhaseVector x = g.nodes[k].packed();
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      const double h = 2.0 * g.half_width(a) / (g.counts[static_cast<std::size_t>(a)] - 1);
      if (std::abs(std::abs(x(a) - g.center(a)) - g.half_width(a)) < 0.5 * h) return true;
    }
    return false;
  };
  const double peak = abs_kernel.maxCoeff();
  for (Eigen::Index i = 0; i < abs_kernel.rows() && !out.boundary_warning; ++i)
    for (Eigen::Index j = 0; j < abs_kernel.cols(); ++j) {
      if (abs_kernel(i, j) <= 1e-3 * peak) continue;
      if (on_boundary(x_grid, static_cast<std::size_t>(i)) || on_boundary(y_grid, static_cast<std::size_t>(j))) {
        out.boundary_warning = true;
        break;
      }
    }
  return out;
}

}  // namespace hk
