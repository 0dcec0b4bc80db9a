#include <doctest.h>

#include <cmath>

#include "hk/hk_core.hpp"
#include "support.hpp"

using namespace hk;
using hktest::iI;
using hktest::line;
using hktest::pp;

namespace {

HamiltonianModel model(ModelKind k) {
  ModelParams p;
  return make_model(k, p);
}

FlowState blocks(double a, double b, double c, double d) {
  FlowState s = FlowState::initial(pp(0, 0), 0.0);
  s.A(0, 0) = a;
  s.B(0, 0) = b;
  s.C(0, 0) = c;
  s.D(0, 0) = d;
  return s;
}

WaveFunction ground(double hbar) { return coherent_state(pp(0, 0), iI(), hbar, line(0.0, 8.0, 1024)); }

}  // namespace

TEST_CASE("theta mode names") {
  CHECK(parse_theta_mode("frozen") == ThetaMode::frozen_iI);
  CHECK(parse_theta_mode("thawed") == ThetaMode::thawed);
  CHECK(to_string(ThetaMode::constant) == "constant");
  CHECK_THROWS_AS(parse_theta_mode("melted"), Error);
  CHECK_THROWS_AS(make_hk_config(ThetaMode::constant, iI()), Error);
}

TEST_CASE("frozen prefactor starts at the square root of two") {
  const auto traj = integrate_flow(model(ModelKind::pendulum), pp(0.3, 0.8), 0.0, 0.5, 10);
  const auto pf = hk_prefactor_frozen(traj);
  CHECK(std::abs(pf.front().value - std::sqrt(2.0)) <= 1e-15);
  CHECK(std::abs(pf.front().det_arg - 2.0) <= 1e-15);
}

TEST_CASE("frozen prefactor on the harmonic oscillator") {
  const double T = 2 * M_PI;
  const auto traj = integrate_flow(model(ModelKind::harmonic), pp(0.5, -0.2), 0.0, T, 4000);
  const auto pf = hk_prefactor_frozen(traj);
  double worst = 0.0;
  for (const auto& p : pf) {
    worst = std::max(worst, std::abs(p.det_arg - 2.0 * std::exp(kI * p.t)));
    worst = std::max(worst, std::abs(p.value - std::sqrt(2.0) * std::exp(0.5 * kI * p.t)));
  }
  CHECK(worst <= 1e-10);
  CHECK(std::abs(pf[2000].value - std::sqrt(2.0) * kI) <= 1e-10);
  CHECK(std::abs(pf.back().value + std::sqrt(2.0)) <= 1e-10);
  CHECK(pf.back().branch_phase == doctest::Approx(T).epsilon(1e-10));
}

TEST_CASE("frozen prefactor on the free particle") {
  const auto traj = integrate_flow(model(ModelKind::free), pp(0, 1), 0.0, 3.0, 300);
  for (const auto& p : hk_prefactor_frozen(traj)) {
    CHECK(std::abs(p.det_arg - Complex(2.0, p.t)) <= 1e-12);
    CHECK(std::abs(p.value - std::sqrt(Complex(2.0, p.t))) <= 1e-12);
  }
}

TEST_CASE("coarse steps need refinement") {
  const auto coarse = integrate_flow(model(ModelKind::harmonic), pp(0, 0), 0.0, 2 * M_PI, 3);
  CHECK_THROWS_AS(hk_prefactor_frozen(coarse), BranchError);
  const auto hm = model(ModelKind::harmonic);
  const auto pf = hk_prefactor_frozen(coarse, &hm);
  // The coarse samples are inaccurate, but the branch must follow the refined path.
  CHECK(pf.back().value.real() < 0.0);
  CHECK(std::abs(pf.back().value * pf.back().value - pf.back().det_arg) <= 1e-12 * std::abs(pf.back().det_arg));
  CHECK(pf.back().branch_phase == doctest::Approx(2 * M_PI).epsilon(0.1));
}

TEST_CASE("M matrix examples") {
  const auto id = FlowState::initial(pp(0, 0), 0.0);
  CHECK(std::abs(m_matrix(id, iI(), iI())(0, 0) - Complex(0, -2)) <= 1e-15);
  CHECK(std::abs(m_matrix(id, iI(2.0), iI())(0, 0) - Complex(0, -3)) <= 1e-15);
  for (double t : {0.1, 1.0, 2.0, 4.0}) {
    const auto s = blocks(std::cos(t), std::sin(t), -std::sin(t), std::cos(t));
    const Complex m = m_matrix(s, iI(), iI())(0, 0);
    CHECK(std::abs(m - Complex(-2 * std::sin(t), -2 * std::cos(t))) <= 1e-14);
    CHECK(std::abs(m) == doctest::Approx(2.0));
  }
}

TEST_CASE("resolution scalar and calibration") {
  CHECK(std::abs(resolution_scalar(iI(), iI()) - 1.0) <= 1e-15);
  for (auto mode : {ThetaMode::frozen_iI, ThetaMode::thawed, ThetaMode::constant}) {
    ComplexMatrix g(1, 1);
    g(0, 0) = Complex(0.4, 1.6);
    const auto cfg = make_hk_config(mode, SiegelMatrix(g), iI(2.0));
    CHECK(cfg.calibrated);
    const Complex r = calibration_residual(cfg, pp(0.2, -0.5), 0.1, line(0.0, 6.0, 1024));
    CHECK(std::abs(r) <= 1e-6);
  }
}

TEST_CASE("general prefactor is the conjugate of the frozen one for theta = gamma = i") {
  const auto traj = integrate_flow(model(ModelKind::pendulum), pp(0.1, 1.2), 0.0, 4.0, 4000);
  const auto frozen = hk_prefactor_frozen(traj);
  const auto general = hk_prefactor_general(traj, make_hk_config(ThetaMode::frozen_iI, iI()));
  double worst = 0.0;
  for (std::size_t k = 0; k < frozen.size(); ++k)
    worst = std::max(worst, std::abs(general[k].value - std::conj(frozen[k].value)));
  CHECK(worst <= 1e-10);

  const auto harm = integrate_flow(model(ModelKind::harmonic), pp(0, 0), 0.0, M_PI / 2, 1000);
  const auto g = hk_prefactor_general(harm, make_hk_config(ThetaMode::frozen_iI, iI()));
  CHECK(std::abs(g.back().value - std::sqrt(2.0) * std::exp(-0.25 * kI * M_PI)) <= 1e-10);
}

TEST_CASE("thawed and frozen agree on the harmonic oscillator") {
  const auto traj = integrate_flow(model(ModelKind::harmonic), pp(0.7, 0.2), 0.0, 5.0, 5000);
  const auto a = hk_prefactor_general(traj, make_hk_config(ThetaMode::frozen_iI, iI()));
  const auto b = hk_prefactor_general(traj, make_hk_config(ThetaMode::thawed, iI()));
  for (std::size_t k = 0; k < a.size(); k += 100) CHECK(std::abs(a[k].value - b[k].value) <= 1e-10);
}

TEST_CASE("identity at the initial time") {
  hktest::Gen gen(21);
  const double hbar = 0.1;
  const GridSpec grid = line(0.0, 8.0, 1024);
  const auto cfg = make_hk_config(ThetaMode::frozen_iI, iI());
  for (int k = 0; k < 3; ++k) {
    const auto psi = coherent_state(gen.point(1.5), iI(), hbar, grid);
    const auto r = hk_propagate(model(ModelKind::pendulum), psi, 0.0, cfg);
    CHECK(l2_distance(r.psi, psi) <= 1e-6);
  }
}

TEST_CASE("harmonic ground state picks up the zero-point phase") {
  const double hbar = 0.1;
  const auto psi = ground(hbar);
  for (auto mode : {ThetaMode::frozen_iI, ThetaMode::thawed}) {
    const auto cfg = make_hk_config(mode, iI());
    const double t = M_PI / 2;
    const auto r = hk_propagate(model(ModelKind::harmonic), psi, t, cfg);
    WaveFunction expected = psi;
    for (auto& v : expected.values) v *= std::exp(-0.5 * kI * t);
    CHECK(l2_distance(r.psi, expected) <= 1e-6);
    CHECK(r.ensemble_coverage >= 1.0 - 1e-8);
  }
}

TEST_CASE("ensemble series matches one-shot propagation") {
  const double hbar = 0.1;
  const auto psi = coherent_state(pp(0, 1), iI(), hbar, line(0.0, 8.0, 1024));
  const auto cfg = make_hk_config(ThetaMode::frozen_iI, iI());
  const auto series = hk_propagate_series(model(ModelKind::pendulum), psi, {0.5, 1.0}, cfg);
  const auto one = hk_propagate(model(ModelKind::pendulum), psi, 1.0, cfg);
  CHECK(l2_distance(series[1].psi, one.psi) <= 1e-12);
  HKEnsemble ens(model(ModelKind::pendulum), build_quadrature(psi, iI()), cfg, hbar);
  ens.advance_to(0.5);
  CHECK_THROWS_AS(ens.advance_to(0.25), Error);
}

TEST_CASE("only the leading order is available") {
  auto cfg = make_hk_config(ThetaMode::frozen_iI, iI());
  cfg.order = 1;
  CHECK_THROWS_AS(calibrate(cfg), Error);
}

TEST_CASE("identity operator kernel") {
  const double hbar = 0.1;
  const GridSpec grid = line(0.0, 6.0, 1024);
  std::vector<PhasePoint> xs{pp(0, 0), pp(0.5, -0.3)};
  std::vector<PhasePoint> ys;
  for (int i = -6; i <= 6; ++i)
    for (int j = -6; j <= 6; ++j) ys.push_back(pp(0.2 * i, 0.2 * j));
  const auto id_op = [](const WaveFunction& w) { return w; };
  const auto id_map = [](const PhasePoint& z) { return z; };
  const auto rep = fb_kernel_diagnostic(id_op, id_map, xs, ys, hbar, grid);
  const double scale = 1.0 / (2 * M_PI * hbar);
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double r2 = (xs[i].packed() - ys[j].packed()).squaredNorm();
      worst = std::max(worst, std::abs(std::abs(rep.ktilde(i, j)) - scale * std::exp(-r2 / (4 * hbar))));
    }
    CHECK(rep.peak_offset[i] <= 0.2 / std::sqrt(hbar));
  }
  CHECK(worst <= 1e-8);
  CHECK(rep.monotone);
  CHECK(rep.peak_offset[0] == 0.0);

  const auto zero_op = [](const WaveFunction& w) { return WaveFunction::zeros(w.grid, w.hbar); };
  const auto zero = fb_kernel_diagnostic(zero_op, id_map, xs, ys, hbar, grid);
  CHECK(zero.peak == 0.0);
  for (const auto& b : zero.bins) CHECK(b.max_abs_ktilde == 0.0);
}

TEST_CASE("Schur bound of Gaussian kernels") {
  const double hbar = 0.05;
  const double r = 8 * std::sqrt(hbar);
  const int n = 41;
  const PhaseGrid big = make_phase_grid(RealVector::Zero(2), RealVector::Constant(2, 2 * r), {2 * n - 1, 2 * n - 1});
  const PhaseGrid small = make_phase_grid(RealVector::Zero(2), RealVector::Constant(2, 0.25 * r), {7, 7});
  RealMatrix k(small.size(), big.size());
  for (std::size_t i = 0; i < small.size(); ++i)
    for (std::size_t j = 0; j < big.size(); ++j)
      k(i, j) = std::exp(-(small.nodes[i].packed() - big.nodes[j].packed()).squaredNorm() / (4 * hbar));
  const auto plain = schur_norm_bound(k, small, big, hbar);
  CHECK(plain.bound == doctest::Approx(2.0).epsilon(1e-6));

  const auto id = schur_norm_bound(k / (2 * M_PI * hbar), small, big, hbar);
  CHECK(id.bound * (2 * M_PI * hbar) == doctest::Approx(2.0).epsilon(1e-6));

  const auto zero = schur_norm_bound(RealMatrix::Zero(small.size(), big.size()), small, big, hbar);
  CHECK(zero.bound == 0.0);

  const PhaseGrid mid = make_phase_grid(RealVector::Zero(2), RealVector::Constant(2, 2 * r), {31, 31});
  RealMatrix inner(mid.size(), mid.size());
  for (std::size_t i = 0; i < mid.size(); ++i)
    for (std::size_t j = 0; j < mid.size(); ++j) {
      const PhaseVector x = mid.nodes[i].packed(), y = mid.nodes[j].packed();
      const bool inside = x.cwiseAbs().maxCoeff() <= r && y.cwiseAbs().maxCoeff() <= r;
      inner(i, j) = inside ? std::exp(-(x - y).squaredNorm() / (4 * hbar)) : 0.0;
    }
  CHECK_FALSE(schur_norm_bound(inner, mid, mid, hbar).boundary_warning);
  CHECK(plain.boundary_warning);
  CHECK_THROWS_AS(schur_norm_bound(k, big, small, hbar), Error);
}
