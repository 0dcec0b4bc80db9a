#include "hk/hamiltonians.hpp"

#include <cmath>

namespace hk {

namespace {

void require_symmetric(const RealMatrix& m, int d, const char* label) {
  if (m.rows() != d || m.cols() != d)
    throw Error(std::string("quadratic_general: ") + label + " must be " + std::to_string(d) + "x" +
                std::to_string(d));
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw Error(std::string("quadratic_general: ") + label + " is not symmetric");
}

HamiltonianModel quadratic_model(std::string name, const RealMatrix& g, const RealMatrix& l,
                                 const RealMatrix& k) {
  const int d = static_cast<int>(g.rows());
  RealMatrix hess(2 * d, 2 * d);
  hess << g, l.transpose(), l, k;
  HamiltonianModel m;
  m.dim = d;
  m.name = std::move(name);
  m.value = [hess](double, const PhaseVector& x) { return 0.5 * x.dot(hess * x); };
  m.gradient = [hess](double, const PhaseVector& x) -> RealVector { return hess * x; };
  m.hessian = [hess](double, const PhaseVector&) -> RealMatrix { return hess; };
  return m;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "harmonic") return ModelKind::harmonic;
  if (name == "free") return ModelKind::free;
  if (name == "quadratic_general") return ModelKind::quadratic_general;
  if (name == "pendulum") return ModelKind::pendulum;
  if (name == "relativistic") return ModelKind::relativistic;
  throw Error("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::harmonic: return "harmonic";
    case ModelKind::free: return "free";
    case ModelKind::quadratic_general: return "quadratic_general";
    case ModelKind::pendulum: return "pendulum";
    case ModelKind::relativistic: return "relativistic";
  }
  return "?";
}

HamiltonianModel make_model(ModelKind kind, const ModelParams& params) {
  const int d = params.dim;
  if (d <= 0) throw Error("model dimension must be positive, got " + std::to_string(d));
  const RealMatrix id = RealMatrix::Identity(d, d);
  const RealMatrix zero = RealMatrix::Zero(d, d);

  switch (kind) {
    case ModelKind::harmonic: {
      const double w2 = params.omega * params.omega;
      HamiltonianModel m = quadratic_model("harmonic", w2 * id, zero, id);
      m.split_form = SplitForm{[](const RealVector& xi) { return 0.5 * xi.squaredNorm(); },
                               [w2](const RealVector& x) { return 0.5 * w2 * x.squaredNorm(); }};
      return m;
    }
    case ModelKind::free: {
      HamiltonianModel m = quadratic_model("free", zero, zero, id);
      m.split_form = SplitForm{[](const RealVector& xi) { return 0.5 * xi.squaredNorm(); },
                               [](const RealVector&) { return 0.0; }};
      return m;
    }
    case ModelKind::quadratic_general: {
      require_symmetric(params.G, d, "G");
      require_symmetric(params.K, d, "K");
      if (params.L.rows() != d || params.L.cols() != d)
        throw Error("quadratic_general: L must be " + std::to_string(d) + "x" + std::to_string(d));
      return quadratic_model("quadratic_general", params.G, params.L, params.K);
    }
    case ModelKind::pendulum: {
      const double g = params.strength;
      HamiltonianModel m;
      m.dim = d;
      m.name = "pendulum";
      m.value = [d, g](double, const PhaseVector& x) {
        double h = 0.5 * x.tail(d).squaredNorm();
        for (int i = 0; i < d; ++i) h -= g * std::cos(x(i));
        return h;
      };
      m.gradient = [d, g](double, const PhaseVector& x) -> RealVector {
        RealVector grad(2 * d);
        for (int i = 0; i < d; ++i) grad(i) = g * std::sin(x(i));
        grad.tail(d) = x.tail(d);
        return grad;
      };
      m.hessian = [d, g](double, const PhaseVector& x) -> RealMatrix {
        RealMatrix h = RealMatrix::Zero(2 * d, 2 * d);
        for (int i = 0; i < d; ++i) h(i, i) = g * std::cos(x(i));
        h.bottomRightCorner(d, d).setIdentity();
        return h;
      };
      m.split_form = SplitForm{[](const RealVector& xi) { return 0.5 * xi.squaredNorm(); },
                               [g](const RealVector& x) {
                                 double v = 0.0;
                                 for (Eigen::Index i = 0; i < x.size(); ++i) v -= g * std::cos(x(i));
                                 return v;
                               }};
      return m;
    }
    case ModelKind::relativistic: {
      const double k = params.strength;
      HamiltonianModel m;
      m.dim = d;
      m.name = "relativistic";
      m.value = [d, k](double, const PhaseVector& x) {
        return std::sqrt(1.0 + x.tail(d).squaredNorm()) + 0.5 * k * x.head(d).squaredNorm();
      };
      m.gradient = [d, k](double, const PhaseVector& x) -> RealVector {
        RealVector grad(2 * d);
        const double e = std::sqrt(1.0 + x.tail(d).squaredNorm());
        grad.head(d) = k * x.head(d);
        grad.tail(d) = x.tail(d) / e;
        return grad;
      };
      m.hessian = [d, k](double, const PhaseVector& x) -> RealMatrix {
        RealMatrix h = RealMatrix::Zero(2 * d, 2 * d);
        const RealVector xi = x.tail(d);
        const double e2 = 1.0 + xi.squaredNorm();
        const double e = std::sqrt(e2);
        h.topLeftCorner(d, d) = k * RealMatrix::Identity(d, d);
        h.bottomRightCorner(d, d) = (e2 * RealMatrix::Identity(d, d) - xi * xi.transpose()) / (e2 * e);
        return h;
      };
      m.split_form = SplitForm{[](const RealVector& xi) { return std::sqrt(1.0 + xi.squaredNorm()); },
                               [k](const RealVector& x) { return 0.5 * k * x.squaredNorm(); }};
      return m;
    }
  }
  throw Error("unhandled model kind");
}

StabilityBound estimate_delta(const HamiltonianModel& model, const PhaseBox& box, int n, double t) {
  const int dim2 = 2 * model.dim;
  if (n < 2) throw Error("estimate_delta: need at least 2 samples per axis");
  if (box.lower.size() != dim2 || box.upper.size() != dim2)
    throw Error("estimate_delta: box dimension does not match 2d");
  for (int a = 0; a < dim2; ++a)
    if (!(box.upper(a) >= box.lower(a))) throw Error("estimate_delta: empty box");

  const RealMatrix j = symplectic_j(model.dim);
  StabilityBound out;
  out.sample_box = box;
  std::vector<int> index(dim2, 0);
  PhaseVector x(dim2);
  long count = 0;
  while (true) {
    for (int a = 0; a < dim2; ++a)
      x(a) = box.lower(a) + (box.upper(a) - box.lower(a)) * index[a] / (n - 1);
    out.delta = std::max(out.delta, spectral_norm(j * model.hessian(t, x)));
    ++count;
    int a = 0;
    while (a < dim2 && ++index[a] == n) index[a++] = 0;
    if (a == dim2) break;
  }
  out.sample_count = count;
  return out;
}

}  // namespace hk
