#include <doctest.h>

#include <cmath>

#include "hk/hk_core.hpp"
#include "hk/reference.hpp"
#include "support.hpp"

using namespace hk;
using hktest::Gen;
using hktest::iI;
using hktest::line;
using hktest::pp;

namespace {

HamiltonianModel model(ModelKind k, double strength = 1.0) {
  ModelParams p;
  p.strength = strength;
  return make_model(k, p);
}

SiegelMatrix random_width(Gen& g) {
  ComplexMatrix m(1, 1);
  m(0, 0) = Complex(g.uniform(-0.5, 0.5), g.uniform(0.5, 2.0));
  return SiegelMatrix(m);
}

double rel_gap(Complex a, Complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("branch consistency along random trajectories") {
  Gen g(101);
  for (int s = 0; s < 12; ++s) {
    const auto m = model(s % 2 ? ModelKind::pendulum : ModelKind::relativistic, g.uniform(0.5, 1.5));
    const auto traj = integrate_flow(m, g.point(2.0), 0.0, 6.0, 6000);
    const auto frozen = hk_prefactor_frozen(traj, &m);
    for (const auto& p : frozen) {
      CHECK(rel_gap(p.value * p.value, p.det_arg) <= 1e-10);
      CHECK(std::abs(p.value) >= std::pow(2.0, 0.5) * (1 - 1e-6));
    }
    const auto w = random_width(g);
    for (auto mode : {ThetaMode::frozen_iI, ThetaMode::constant, ThetaMode::thawed}) {
      const auto cfg = make_hk_config(mode, w, iI(g.uniform(0.5, 2.0)));
      for (const auto& p : hk_prefactor_general(traj, cfg, &m)) CHECK(rel_gap(p.value * p.value, p.det_arg) <= 1e-10);
    }
  }
}

TEST_CASE("prefactor paths are step robust") {
  Gen g(202);
  for (int s = 0; s < 6; ++s) {
    const auto m = model(ModelKind::pendulum);
    const auto z = g.point(2.0);
    const auto coarse = hk_prefactor_frozen(integrate_flow(m, z, 0.0, 8.0, 8000), &m);
    const auto fine = hk_prefactor_frozen(integrate_flow(m, z, 0.0, 8.0, 16000), &m);
    double worst = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k)
      worst = std::max(worst, std::abs(coarse[k].value - fine[2 * k].value));
    CHECK(worst < 1e-6);
    CHECK(coarse.back().branch_phase == doctest::Approx(fine.back().branch_phase).epsilon(1e-8));
  }
}

TEST_CASE("HK propagation is linear") {
  Gen g(303);
  const double hbar = 0.1;
  const GridSpec grid = line(0.0, 8.0, 1024);
  const auto m = model(ModelKind::pendulum);
  const auto cfg = make_hk_config(ThetaMode::frozen_iI, iI());
  for (int s = 0; s < 3; ++s) {
    const auto a = coherent_state(g.point(1.0), iI(), hbar, grid);
    const auto b = coherent_state(g.point(1.0), random_width(g), hbar, grid);
    const Complex alpha(g.uniform(-1, 1), g.uniform(-1, 1)), beta(g.uniform(-1, 1), g.uniform(-1, 1));
    WaveFunction mix = a;
    for (std::size_t k = 0; k < mix.values.size(); ++k) mix.values[k] = alpha * a.values[k] + beta * b.values[k];
    const PhaseGrid nodes = build_quadrature(mix, iI());
    const double t = g.uniform(0.5, 1.5);
    const auto ra = hk_propagate(m, a, t, cfg, nodes);
    const auto rb = hk_propagate(m, b, t, cfg, nodes);
    const auto rm = hk_propagate(m, mix, t, cfg, nodes);
    WaveFunction combo = ra.psi;
    for (std::size_t k = 0; k < combo.values.size(); ++k)
      combo.values[k] = alpha * ra.psi.values[k] + beta * rb.psi.values[k];
    CHECK(l2_distance(rm.psi, combo) <= 1e-10);
  }
}

TEST_CASE("HK is exact for general quadratic Hamiltonians") {
  ModelParams p;
  p.G = (RealMatrix(1, 1) << 0.8).finished();
  p.L = (RealMatrix(1, 1) << 0.3).finished();
  p.K = (RealMatrix(1, 1) << 1.2).finished();
  const auto m = make_model(ModelKind::quadratic_general, p);
  Gen g(404);
  const double hbar = 0.1;
  const GridSpec grid = line(0.0, 8.0, 1024);
  for (int s = 0; s < 3; ++s) {
    const auto psi0 = coherent_state(g.point(1.0), iI(), hbar, grid);
    const double t = g.uniform(0.3, 3.0);
    for (auto mode : {ThetaMode::frozen_iI, ThetaMode::thawed}) {
      const auto hk = hk_propagate(m, psi0, t, make_hk_config(mode, iI()));
      CHECK(l2_distance(hk.psi, exact_quadratic_apply(m, psi0, t, iI())) <= 1e-6);
    }
  }
}

TEST_CASE("HK norm is conserved up to O(hbar)") {
  const auto m = model(ModelKind::pendulum);
  const auto cfg = make_hk_config(ThetaMode::frozen_iI, iI());
  double previous = 1.0;
  for (double hbar : {0.1, 0.05, 0.025}) {
    const GridSpec grid = line(0.0, 8.0, 2048);
    const auto psi0 = coherent_state(pp(0, 1), iI(), hbar, grid);
    const double gap = std::abs(l2_norm(hk_propagate(m, psi0, 1.0, cfg).psi) - 1.0);
    CHECK(gap <= 0.2 * hbar);
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("Fourier-Bargmann isometry for random states") {
  Gen g(505);
  const double hbar = 0.05;
  const GridSpec grid = line(0.0, 6.0, 2048);
  for (int s = 0; s < 5; ++s) {
    WaveFunction psi = coherent_state(g.point(1.5), random_width(g), hbar, grid);
    const auto extra = coherent_state(g.point(1.5), random_width(g), hbar, grid);
    const Complex c(g.uniform(-1, 1), g.uniform(-1, 1));
    for (std::size_t k = 0; k < psi.values.size(); ++k) psi.values[k] += c * extra.values[k];
    const double n2 = std::pow(l2_norm(psi), 2);
    const auto gamma = random_width(g);
    const PhaseGrid q = build_quadrature(psi, gamma);
    const auto fb = fb_transform(psi, gamma, q);
    double mass = 0.0;
    for (std::size_t k = 0; k < fb.size(); ++k) mass += q.weights[k] * std::norm(fb[k]);
    CHECK(std::abs(mass - n2) <= 1e-6 * n2);
    CHECK(l2_distance(fb_inverse(fb, q, gamma, grid, hbar).psi, psi) <= 1e-6 * std::sqrt(n2));
  }
}

TEST_CASE("quadrature jitter is reproducible from the seed") {
  const double hbar = 0.1;
  const auto psi = coherent_state(pp(0.2, 0.4), iI(), hbar, line(0.0, 8.0, 1024));
  QuadratureOptions o;
  o.jitter = 0.5;
  o.seed = 17;
  const auto a = build_quadrature(psi, iI(), o);
  const auto b = build_quadrature(psi, iI(), o);
  o.seed = 18;
  const auto c = build_quadrature(psi, iI(), o);
  CHECK((a.nodes[5].packed() - b.nodes[5].packed()).norm() == 0.0);
  CHECK((a.nodes[5].packed() - c.nodes[5].packed()).norm() > 0.0);
  const auto fb = fb_transform(psi, iI(), a);
  CHECK(l2_distance(fb_inverse(fb, a, iI(), psi.grid, hbar).psi, psi) <= 1e-6);
}

TEST_CASE("ensemble results do not depend on the worker count") {
  const double hbar = 0.1;
  const auto psi0 = coherent_state(pp(0, 1), iI(), hbar, line(0.0, 8.0, 1024));
  auto one = make_hk_config(ThetaMode::frozen_iI, iI());
  auto many = one;
  many.workers = 4;
  const auto a = hk_propagate(model(ModelKind::pendulum), psi0, 1.0, one);
  const auto b = hk_propagate(model(ModelKind::pendulum), psi0, 1.0, many);
  CHECK(a.psi.values == b.psi.values);
}
