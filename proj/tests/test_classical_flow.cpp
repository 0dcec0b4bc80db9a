#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hk/classical_flow.hpp"
#include "support.hpp"

using namespace hk;
using hktest::pp;

namespace {

HamiltonianModel model(ModelKind k) {
  ModelParams p;
  return make_model(k, p);
}

FlowState with_blocks(double a, double b, double c, double d) {
  FlowState s = FlowState::initial(pp(0, 0), 0.0);
  s.A(0, 0) = a;
  s.B(0, 0) = b;
  s.C(0, 0) = c;
  s.D(0, 0) = d;
  return s;
}

}  // namespace

TEST_CASE("harmonic quarter period") {
  const auto traj = integrate_flow(model(ModelKind::harmonic), pp(1, 0), 0.0, M_PI / 2, 1000);
  const auto& f = traj.final();
  CHECK(std::abs(f.z.q(0)) <= 1e-8);
  CHECK(std::abs(f.z.p(0) + 1.0) <= 1e-8);
  CHECK(std::abs(f.action) <= 1e-8);
  CHECK(traj.samples.size() == 1001);
  for (std::size_t k = 1; k < traj.samples.size(); ++k) CHECK(traj.samples[k].t > traj.samples[k - 1].t);
}

TEST_CASE("free flow for unit time") {
  const auto f = integrate_flow(model(ModelKind::free), pp(0, 1), 0.0, 1.0, 1000).final();
  CHECK(f.z.q(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.z.p(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.A(0, 0) == doctest::Approx(1.0));
  CHECK(f.B(0, 0) == doctest::Approx(1.0));
  CHECK(f.C(0, 0) == doctest::Approx(0.0));
  CHECK(f.D(0, 0) == doctest::Approx(1.0));
  CHECK(f.action == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("empty evolution returns the initial state") {
  const auto st = FlowState::initial(pp(0.3, -0.2), 2.0);
  auto states = continue_flow(model(ModelKind::pendulum), st, 2.0, 1);
  const auto& f = states.back();
  CHECK(f.z.q(0) == 0.3);
  CHECK(f.z.p(0) == -0.2);
  CHECK(f.action == 0.0);
  CHECK(f.stability().isIdentity());
}

TEST_CASE("symplectic defect examples") {
  CHECK(symplectic_defect(with_blocks(1, 0, 0, 1)) == 0.0);
  CHECK(symplectic_defect(with_blocks(1, 1, 0, 1)) == doctest::Approx(0.0));
  CHECK(symplectic_defect(with_blocks(2, 0, 0, 1)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("jacobian check against finite differences") {
  CHECK(jacobian_check(model(ModelKind::harmonic), pp(0.4, -0.3), 1.0, 1e-5) <= 1e-6);
  CHECK(jacobian_check(model(ModelKind::free), pp(0.4, -0.3), 2.5, 1e-3) <= 1e-9);
  CHECK(jacobian_check(model(ModelKind::pendulum), pp(0.0, 1.0), 1.0, 1e-5) <= 1e-5);
}

TEST_CASE("invalid step counts are rejected") {
  CHECK_THROWS_AS(integrate_flow(model(ModelKind::free), pp(0, 0), 0.0, 1.0, 0), Error);
}

TEST_CASE("symplecticity and energy along long trajectories") {
  hktest::Gen g(3);
  for (auto kind : {ModelKind::harmonic, ModelKind::pendulum, ModelKind::relativistic}) {
    const auto m = model(kind);
    for (int s = 0; s < 5; ++s) {
      const auto z0 = g.point(2.0);
      const auto traj = integrate_flow(m, z0, 0.0, 10.0, 10000);
      const double e0 = m.value(0.0, z0.packed());
      double worst_defect = 0.0, worst_energy = 0.0;
      for (const auto& st : traj.samples) {
        worst_defect = std::max(worst_defect, symplectic_defect(st));
        worst_energy = std::max(worst_energy, std::abs(m.value(st.t, st.z.packed()) - e0));
      }
      CHECK(worst_defect <= 1e-8);
      CHECK(worst_energy <= 1e-8);
    }
  }
}

TEST_CASE("quadratic model blocks match the matrix exponential") {
  ModelParams p;
  p.dim = 2;
  p.G = (RealMatrix(2, 2) << 1.5, 0.2, 0.2, 0.8).finished();
  p.L = (RealMatrix(2, 2) << 0.0, 0.3, -0.1, 0.2).finished();
  p.K = (RealMatrix(2, 2) << 1.0, -0.1, -0.1, 0.6).finished();
  const auto m = make_model(ModelKind::quadratic_general, p);
  const double t = 1.7;
  PhasePoint z0;
  z0.q = RealVector::Zero(2);
  z0.p = RealVector::Zero(2);
  const auto f = integrate_flow(m, z0, 0.0, t, 1700).final();
  const RealMatrix gen = symplectic_j(2) * m.hessian(0.0, z0.packed());
  // Taylor series of exp(t gen); the generator norm is small enough to converge quickly.
  RealMatrix term = RealMatrix::Identity(4, 4), expm = RealMatrix::Identity(4, 4);
  for (int k = 1; k < 60; ++k) {
    term = term * gen * (t / k);
    expm += term;
  }
  CHECK((f.stability() - expm).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("restarting at an intermediate time composes stability matrices") {
  const auto m = model(ModelKind::pendulum);
  const auto direct = integrate_flow(m, pp(0.2, 1.1), 0.0, 2.0, 2000).final();
  const auto half = integrate_flow(m, pp(0.2, 1.1), 0.0, 1.0, 1000).final();
  const auto second = integrate_flow(m, half.z, 1.0, 2.0, 1000).final();
  CHECK((second.stability() * half.stability() - direct.stability()).cwiseAbs().maxCoeff() <= 1e-6);
  const auto cont = continue_flow(m, half, 2.0, 1000).back();
  CHECK((cont.stability() - direct.stability()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(cont.action == doctest::Approx(direct.action).epsilon(1e-10));
}

TEST_CASE("trajectory CSV header") {
  const auto traj = integrate_flow(model(ModelKind::free), pp(0, 1), 0.0, 1.0, 4);
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,q0,p0,S,A00,B00,C00,D00");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 5);
}
