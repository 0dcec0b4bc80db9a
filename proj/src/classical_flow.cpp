#include "hk/classical_flow.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace hk {

PhaseVector PhasePoint::packed() const {
  PhaseVector x(2 * q.size());
  x << q, p;
  return x;
}

PhasePoint PhasePoint::unpack(const PhaseVector& x) {
  const Eigen::Index d = x.size() / 2;
  return PhasePoint{x.head(d), x.tail(d)};
}

RealMatrix FlowState::stability() const {
  const Eigen::Index d = A.rows();
  RealMatrix f(2 * d, 2 * d);
  f << A, B, C, D;
  return f;
}

FlowState FlowState::initial(const PhasePoint& z0, double t0) {
  const int d = z0.dim();
  FlowState s;
  s.t = t0;
  s.z = z0;
  s.action = 0.0;
  s.A = RealMatrix::Identity(d, d);
  s.B = RealMatrix::Zero(d, d);
  s.C = RealMatrix::Zero(d, d);
  s.D = RealMatrix::Identity(d, d);
  return s;
}

namespace {

// Packed ODE state: [z (2d), S (1), F column-major (4d^2)].
struct OdeLayout {
  int d;
  int n2() const { return 2 * d; }
  int size() const { return n2() + 1 + n2() * n2(); }
};

RealVector pack(const FlowState& s, const OdeLayout& lay) {
  RealVector y(lay.size());
  y.head(lay.n2()) = s.z.packed();
  y(lay.n2()) = s.action;
  RealMatrix f = s.stability();
  y.tail(lay.n2() * lay.n2()) = Eigen::Map<const RealVector>(f.data(), f.size());
  return y;
}

FlowState unpack(const RealVector& y, double t, const OdeLayout& lay) {
  FlowState s;
  s.t = t;
  s.z = PhasePoint::unpack(y.head(lay.n2()));
  s.action = y(lay.n2());
  Eigen::Map<const RealMatrix> f(y.data() + lay.n2() + 1, lay.n2(), lay.n2());
  const int d = lay.d;
  s.A = f.topLeftCorner(d, d);
  s.B = f.topRightCorner(d, d);
  s.C = f.bottomLeftCorner(d, d);
  s.D = f.bottomRightCorner(d, d);
  return s;
}

// Writes the right-hand side into dy (preallocated, size lay.size()).
// J is applied by swapping blocks: J (a, b) = (b, -a).
void rhs(const HamiltonianModel& model, double t, const RealVector& y, const OdeLayout& lay, RealVector& dy,
         RealMatrix& jh) {
  const int n2 = lay.n2();
  const int d = lay.d;
  const PhaseVector x = y.head(n2);
  const RealVector grad = model.gradient(t, x);
  const RealMatrix hess = model.hessian(t, x);
  dy.head(d) = grad.tail(d);
  dy.segment(d, d) = -grad.head(d);
  dy(n2) = x.tail(d).dot(dy.head(d)) - model.value(t, x);
  jh.topRows(d) = hess.bottomRows(d);
  jh.bottomRows(d) = -hess.topRows(d);
  Eigen::Map<const RealMatrix> f(y.data() + n2 + 1, n2, n2);
  Eigen::Map<RealMatrix> df(dy.data() + n2 + 1, n2, n2);
  df.noalias() = jh.lazyProduct(f);
}

bool all_finite(const RealVector& y) { return y.allFinite(); }

}  // namespace

int default_steps(double t0, double t1, int per_unit_time) {
  const double span = std::abs(t1 - t0);
  return std::max(1, static_cast<int>(std::ceil(span * per_unit_time - 1e-9)));
}

FlowStepper::FlowStepper(const HamiltonianModel& model, const FlowState& start)
    : model_(&model), j_(symplectic_j(model.dim)), d_(model.dim), t_(start.t) {
  if (start.z.dim() != model.dim) throw Error("integrate_flow: initial point dimension mismatch");
  y_ = pack(start, OdeLayout{d_});
}

void FlowStepper::step_to(double t_next) {
  const OdeLayout lay{d_};
  const double h = t_next - t_;
  const Eigen::Index n = y_.size();
  if (k1_.size() != n) {
    k1_.resize(n);
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    tmp_.resize(n);
  }
  rhs(*model_, t_, y_, lay, k1_, j_);
  tmp_ = y_ + 0.5 * h * k1_;
  rhs(*model_, t_ + 0.5 * h, tmp_, lay, k2_, j_);
  tmp_ = y_ + 0.5 * h * k2_;
  rhs(*model_, t_ + 0.5 * h, tmp_, lay, k3_, j_);
  tmp_ = y_ + h * k3_;
  rhs(*model_, t_next, tmp_, lay, k4_, j_);
  y_ += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  t_ = t_next;
  if (!all_finite(y_))
    throw FlowError("integrate_flow: non-finite state at t=" + std::to_string(t_), t_);
}

FlowState FlowStepper::state() const { return unpack(y_, t_, OdeLayout{d_}); }

std::vector<FlowState> continue_flow(const HamiltonianModel& model, const FlowState& start,
                                     double t1, int steps) {
  if (steps < 1) throw Error("integrate_flow: steps must be >= 1");
  FlowStepper stepper(model, start);
  const double t0 = start.t;
  const double h = (t1 - t0) / steps;
  std::vector<FlowState> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(start);
  for (int k = 0; k < steps; ++k) {
    stepper.step_to(k + 1 == steps ? t1 : t0 + (k + 1) * h);
    out.push_back(stepper.state());
  }
  return out;
}

TrajectoryRecord integrate_flow(const HamiltonianModel& model, const PhasePoint& z0, double t0,
                                double t1, int steps) {
  TrajectoryRecord rec;
  rec.initial = z0;
  rec.t0 = t0;
  rec.step = (t1 - t0) / steps;
  if (t1 == t0) {
    if (steps < 1) throw Error("integrate_flow: steps must be >= 1");
    rec.samples.push_back(FlowState::initial(z0, t0));
    return rec;
  }
  rec.samples = continue_flow(model, FlowState::initial(z0, t0), t1, steps);
  return rec;
}

double symplectic_defect(const FlowState& state) {
  const int d = static_cast<int>(state.A.rows());
  const RealMatrix j = symplectic_j(d);
  const RealMatrix f = state.stability();
  return (f.transpose() * j * f - j).norm();
}

double jacobian_check(const HamiltonianModel& model, const PhasePoint& z0, double t, double h,
                      int steps_per_unit_time) {
  if (!(h > 0.0)) throw Error("jacobian_check: step must be positive");
  const int steps = default_steps(0.0, t, steps_per_unit_time);
  const FlowState base = integrate_flow(model, z0, 0.0, t, steps).final();
  const RealMatrix f = base.stability();
  const int n2 = 2 * model.dim;
  const PhaseVector x0 = z0.packed();
  double worst = 0.0;
  for (int c = 0; c < n2; ++c) {
    PhaseVector xp = x0, xm = x0;
    xp(c) += h;
    xm(c) -= h;
    const PhaseVector zp = integrate_flow(model, PhasePoint::unpack(xp), 0.0, t, steps).final().z.packed();
    const PhaseVector zm = integrate_flow(model, PhasePoint::unpack(xm), 0.0, t, steps).final().z.packed();
    const RealVector column = (zp - zm) / (2.0 * h);
    worst = std::max(worst, (column - f.col(c)).cwiseAbs().maxCoeff());
  }
  return worst;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj) {
  const int d = traj.initial.dim();
  out << "t";
  for (int i = 0; i < d; ++i) out << ",q" << i;
  for (int i = 0; i < d; ++i) out << ",p" << i;
  out << ",S";
  for (const char* block : {"A", "B", "C", "D"})
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) out << "," << block << r << c;
  out << "\n";
  out << std::setprecision(17);
  for (const auto& s : traj.samples) {
    out << s.t;
    for (int i = 0; i < d; ++i) out << "," << s.z.q(i);
    for (int i = 0; i < d; ++i) out << "," << s.z.p(i);
    out << "," << s.action;
    for (const RealMatrix* m : {&s.A, &s.B, &s.C, &s.D})
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out << "," << (*m)(r, c);
    out << "\n";
  }
}

}  // namespace hk
