#pragma once

#include <iosfwd>
#include <vector>

#include "hk/hamiltonians.hpp"

namespace hk {

struct PhasePoint {
  RealVector q;
  RealVector p;

  int dim() const { return static_cast<int>(q.size()); }
  PhaseVector packed() const;
  static PhasePoint unpack(const PhaseVector& x);
};

/// Point on a trajectory together with the action and the stability matrix
/// F = [[A, B], [C, D]] of the flow map z -> z_t.
struct FlowState {
  double t = 0.0;
  PhasePoint z;
  double action = 0.0;
  RealMatrix A, B, C, D;

  RealMatrix stability() const;
  static FlowState initial(const PhasePoint& z0, double t0);
};

struct TrajectoryRecord {
  PhasePoint initial;
  double t0 = 0.0;
  double step = 0.0;
  std::vector<FlowState> samples;

  const FlowState& final() const { return samples.back(); }
};

/// Raised when the integrated state stops being finite.
class FlowError : public Error {
public:
  FlowError(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

/// Integrates z' = J grad H, S' = p.q' - H, F' = J hess(H) F with fixed-step
/// RK4 from t0 to t1 in `steps` steps. Every step is kept in the record.
TrajectoryRecord integrate_flow(const HamiltonianModel& model, const PhasePoint& z0, double t0,
                                double t1, int steps);

/// Single-step RK4 driver over the joint (z, S, F) system. Used where only a
/// few states along a long trajectory are needed.
class FlowStepper {
public:
  FlowStepper(const HamiltonianModel& model, const FlowState& start);

  /// One RK4 step from the current time to t_next.
  void step_to(double t_next);
  double time() const { return t_; }
  FlowState state() const;

private:
  const HamiltonianModel* model_;
  RealMatrix j_;  // scratch for J * hessian
  int d_;
  double t_;
  RealVector y_;
  RealVector k1_, k2_, k3_, k4_, tmp_;
};

/// Continues integration from an arbitrary state (F and S keep accumulating).
std::vector<FlowState> continue_flow(const HamiltonianModel& model, const FlowState& start,
                                     double t1, int steps);

/// Steps per unit time used when callers do not choose.
inline constexpr int kDefaultStepsPerUnitTime = 1000;
int default_steps(double t0, double t1, int per_unit_time = kDefaultStepsPerUnitTime);

/// Frobenius norm of F^T J F - J.
double symplectic_defect(const FlowState& state);

/// Max-norm gap between the integrated F(t) and centred finite differences of
/// z0 -> z_t with step h.
double jacobian_check(const HamiltonianModel& model, const PhasePoint& z0, double t, double h,
                      int steps_per_unit_time = kDefaultStepsPerUnitTime);

/// CSV: t,q...,p...,S,A...,B...,C...,D... with row-major block entries.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj);

}  // namespace hk
