#include "interp/constraints.hpp"

#include "interp/extension.hpp"

#include <cmath>

namespace interp {

double Residual::min() const {
  double m = v[0];
  for (int k = 1; k < n; ++k) m = std::min(m, v[k]);
  return m;
}

int Residual::argmin() const {
  int a = 0;
  for (int k = 1; k < n; ++k)
    if (v[k] < v[a]) a = k;
  return a;
}

int residual_length(const Family& fam) {
  switch (fam.kind) {
    case Kind::SmoothConvexWeak:
    case Kind::WeaklyConvexBounded:
    case Kind::LipschitzHessian: return 2;
    case Kind::WeaklyConvexBoundedTight: return 3;
    case Kind::SmoothPL: return 4;
    default: return 1;
  }
}

namespace {

Residual make(std::initializer_list<double> vals) {
  Residual r;
  for (double v : vals) r.v[r.n++] = v;
  return r;
}

}  // namespace

PairEvaluator::PairEvaluator(const Family& fam) : kind_(fam.kind) {
  auto get = [&](const char* k) {
    auto it = fam.params.find(k);
    return it == fam.params.end() ? 0.0 : it->second;
  };
  mu_ = get("mu");
  L_ = get("L");
  B_ = get("B");
  M_ = get("M");
  alpha_ = get("alpha");
  beta_ = get("beta");
  gamma_ = get("gamma");
  p_ = get("p");
  fstar_ = get("fstar");
  if (kind_ == Kind::HolderSmooth && !fam.has("p")) p_ = alpha_ + 1;
  if (kind_ == Kind::GramLinearGeneral) {
    const char* names[10] = {"B", "C", "D", "E", "F", "G", "H", "I", "J", "K"};
    for (int k = 0; k < 10; ++k) gl_[k] = get(names[k]);
  }
}

namespace {

using Vec1 = Eigen::Matrix<double, 1, 1>;

template <class V>
V project(const V& y, const V& c, double r) {
  V diff = y - c;
  double n = diff.norm();
  if (n <= r) return y;
  if (n == 0.0) return c;
  return c + (r / n) * diff;
}

}  // namespace

template <class V>
Residual PairEvaluator::eval(const V& xi, double fi, const V& gi, const std::optional<double>& hi, const V& xj,
                             double fj, const V& gj, const std::optional<double>& hj, int d) const {
  switch (kind_) {
    case Kind::Convex:
      return make({fj - fi - gi.dot(xj - xi)});

    case Kind::SmoothConvexWeak:
      return make({fj - fi - gi.dot(xj - xi), L_ * (xj - xi).norm() - (gi - gj).norm()});

    case Kind::SmoothConvexTight:
      return make({fj - fi - gi.dot(xj - xi) - (gi - gj).squaredNorm() / (2 * L_)});

    case Kind::SmoothStronglyConvex: {
      double mu = mu_, L = L_, c = 1.0 / (L - mu);
      V dx = xi - xj;
      return make({fi - fj - c * (L * gj - mu * gi).dot(dx) - c * 0.5 * (gi - gj).squaredNorm() -
                   c * 0.5 * mu * L * dx.squaredNorm()});
    }

    case Kind::QuadraticClass: {
      V dx = xi - xj;
      return make({fi - fj - 0.5 * (gi + gj).dot(dx) - M_ * (gi - gj - mu_ * dx).squaredNorm()});
    }

    case Kind::WeaklyConvexBounded: {
      V dx = xj - xi;
      return make({fj - fi - gi.dot(dx) + 0.5 * mu_ * dx.squaredNorm(), B_ - gi.norm()});
    }

    case Kind::WeaklyConvexBoundedTight: {
      double mu = mu_, B = B_;
      V dx = xj - xi;
      V C = xj;
      if (mu > 0) C = project<V>(xj, xi + gi / mu, B / mu);
      return make({fj - fi - gi.dot(dx) + 0.5 * mu * dx.squaredNorm() - 0.5 * mu * (xj - C).squaredNorm(),
                   B - (gi + mu * (xi - C)).norm(), B - gi.norm()});
    }

    case Kind::GramLinearGeneral: {
      const double* c = gl_.data();
      double r = c[0] * gi.squaredNorm() + c[1] * gj.squaredNorm() + c[2] * gj.dot(gi) + c[3] * xi.squaredNorm() +
                 c[4] * xj.squaredNorm() + c[5] * xi.dot(xj) + c[6] * gi.dot(xi) + c[7] * gi.dot(xj) +
                 c[8] * gj.dot(xi) + c[9] * gj.dot(xj);
      return make({fi - fj - r});
    }

    case Kind::ConsistForm: {
      V dx = xi - xj;
      return make({fi - fj - (gamma_ * gi + (1 - gamma_) * gj).dot(dx) - alpha_ * (gi - gj).squaredNorm() -
                   beta_ * dx.squaredNorm()});
    }

    case Kind::UniformlyConvex: {
      V dx = xj - xi;
      return make({fj - fi - gi.dot(dx) - mu_ / p_ * std::pow(dx.norm(), p_)});
    }

    case Kind::HolderSmooth: {
      V dx = xj - xi;
      return make({fi + gi.dot(dx) + L_ / (alpha_ + 1) * std::pow(dx.norm(), p_) - fj});
    }

    case Kind::SmoothPL: {
      V dx = xj - xi;
      return make({fi + gi.dot(dx) + 0.5 * L_ * dx.squaredNorm() - fj, gi.squaredNorm() - 2 * mu_ * (fi - fstar_),
                   fi - fstar_, fj - fstar_});
    }

    case Kind::LipschitzHessian: {
      if (d != 1) throw Error(ErrorCode::UnsupportedDimension, "LipschitzHessian needs d = 1");
      if (!hi || !hj) throw Error(ErrorCode::MissingHessian, "LipschitzHessian needs hess on every point");
      double dx = xj[0] - xi[0];
      double r = fj - fi - gi[0] * dx - 0.5 * (*hi) * dx * dx;
      double c = M_ / 6 * std::abs(dx) * dx * dx;
      return make({c - r, c + r});
    }
  }
  throw Error(ErrorCode::UnknownKind, "unhandled family");
}

Residual PairEvaluator::operator()(const DataTriple& i, const DataTriple& j) const {
  const int d = i.dim();
  if (j.dim() != d || i.g.size() != d || j.g.size() != d)
    throw Error(ErrorCode::DimensionMismatch, "pair of triples with different dimensions");
  if (d == 1)
    return eval<Vec1>(Vec1(i.x[0]), i.f, Vec1(i.g[0]), i.hess, Vec1(j.x[0]), j.f, Vec1(j.g[0]), j.hess, 1);
  return eval<Vec>(i.x, i.f, i.g, i.hess, j.x, j.f, j.g, j.hess, d);
}

Residual eval_pairwise(const Family& fam, const DataTriple& i, const DataTriple& j) {
  return PairEvaluator(fam)(i, j);
}

Satisfaction satisfies(const Family& fam, const Dataset& S, double tol) {
  PairEvaluator ev(fam);
  Satisfaction out;
  bool first = true;
  for (std::size_t a = 0; a < S.size(); ++a)
    for (std::size_t b = 0; b < S.size(); ++b) {
      Residual r = ev(S[a], S[b]);
      int k = r.argmin();
      if (first || r[k] < out.worst.value) {
        out.worst = {a, b, k, r[k]};
        first = false;
      }
    }
  out.ok = out.worst.value >= -tol;
  return out;
}

double probe_min_residual(const Family& fam, const Dataset& S, const DataTriple& probe) {
  PairEvaluator ev(fam);
  double m = ev(probe, probe).min();
  for (const auto& t : S.triples) {
    m = std::min(m, ev(probe, t).min());
    m = std::min(m, ev(t, probe).min());
  }
  return m;
}

}  // namespace interp
