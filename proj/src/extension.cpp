#include "interp/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace interp {

Vec project_ball(const Vec& y, const BallSpec& ball) {
  Vec diff = y - ball.center;
  double n = diff.norm();
  if (n <= ball.radius) return y;
  if (n == 0.0) return ball.center;
  return ball.center + (ball.radius / n) * diff;
}

const char* method_name(GapMethod m) {
  switch (m) {
    case GapMethod::ClosedForm: return "ClosedForm";
    case GapMethod::ConicSolve: return "ConicSolve";
    case GapMethod::GridOracle: return "GridOracle";
  }
  return "?";
}

namespace {

void require_feasible(const Family& fam, const Dataset& S, double tol) {
  Satisfaction s = satisfies(fam, S, tol);
  if (!s.ok)
    throw Error(ErrorCode::InputNotFeasible, "dataset violates " + std::string(kind_name(fam.kind)) + " at pair (" +
                                                 std::to_string(s.worst.i) + "," + std::to_string(s.worst.j) +
                                                 "), residual " + std::to_string(s.worst.value));
}

void require_dim(const Dataset& S, const Vec& x) {
  if (x.size() != S.dim) throw Error(ErrorCode::DimensionMismatch, "probe point dimension differs from dataset");
}

}  // namespace

Extension extend_convex(const Dataset& S, const Vec& x, double tol) {
  require_dim(S, x);
  require_feasible(make_family(Kind::Convex, {}), S, tol);
  std::size_t best = 0;
  double bv = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < S.size(); ++i) {
    double v = S[i].f + S[i].g.dot(x - S[i].x);
    if (v > bv) {
      bv = v;
      best = i;
    }
  }
  return {bv, S[best].g};
}

Extension extend_wc_tight(const Dataset& S, const Vec& x, double mu, double B, double tol) {
  require_dim(S, x);
  if (!(mu > 0)) throw Error(ErrorCode::ParameterOutOfDomain, "extend_wc_tight needs mu > 0");
  require_feasible(make_family(Kind::WeaklyConvexBoundedTight, {{"mu", mu}, {"B", B}}), S, tol);
  std::size_t best = 0;
  double bv = -std::numeric_limits<double>::infinity();
  Vec bestC;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const auto& t = S[i];
    Vec C = project_ball(x, BallSpec{t.x + t.g / mu, B / mu});
    double v = t.f + t.g.dot(x - t.x) - 0.5 * mu * (x - t.x).squaredNorm() + 0.5 * mu * (x - C).squaredNorm();
    if (v > bv) {
      bv = v;
      best = i;
      bestC = C;
    }
  }
  return {bv, S[best].g + mu * (S[best].x - bestC)};
}

Extension extend_quadratic(const Dataset& S, const Vec& x, double mu, double M, std::size_t anchor, double tol) {
  require_dim(S, x);
  require_feasible(make_family(Kind::QuadraticClass, {{"mu", mu}, {"M", M}}), S, tol);
  if (anchor >= S.size()) throw Error(ErrorCode::DimensionMismatch, "anchor index out of range");
  const auto& t = S[anchor];
  Vec g = t.g + mu * (x - t.x);
  return {t.f + 0.5 * (g + t.g).dot(x - t.x), g};
}

bool concave_in_probe(const Family& fam) {
  switch (fam.kind) {
    case Kind::SmoothPL:
    case Kind::WeaklyConvexBoundedTight: return false;
    case Kind::GramLinearGeneral: return fam["B"] >= 0 && fam["C"] >= 0;
    case Kind::ConsistForm: return fam["alpha"] >= 0;
    default: return true;
  }
}

bool has_extender(const Family& fam) {
  switch (fam.kind) {
    case Kind::Convex:
    case Kind::QuadraticClass: return true;
    case Kind::WeaklyConvexBoundedTight: return fam["mu"] > 0;
    default: return false;
  }
}

void probe_components(const PairEvaluator& ev, const Dataset& S, const DataTriple& probe, std::vector<double>& out) {
  out.clear();
  auto push = [&](const Residual& r) {
    for (int k = 0; k < r.size(); ++k) out.push_back(r[k]);
  };
  push(ev(probe, probe));
  for (const auto& t : S.triples) {
    push(ev(probe, t));
    push(ev(t, probe));
  }
}

void probe_components(const Family& fam, const Dataset& S, const DataTriple& probe, std::vector<double>& out) {
  probe_components(PairEvaluator(fam), S, probe, out);
}

namespace {

struct Box {
  double flo, fhi, gmax, hmax;
};

Box default_box(const Dataset& S, const Vec& x, const SearchBox& over) {
  double fmin = S[0].f, fmax = S[0].f, gn = 0, dist = 0, hmax = 0;
  for (const auto& t : S.triples) {
    fmin = std::min(fmin, t.f);
    fmax = std::max(fmax, t.f);
    gn = std::max(gn, t.g.norm());
    dist = std::max(dist, (x - t.x).norm());
    if (t.hess) hmax = std::max(hmax, std::abs(*t.hess));
  }
  double span = std::max({1.0, fmax - fmin, gn * dist, dist * dist});
  Box b{fmin - 10 * span, fmax + 10 * span, 10 * std::max(1.0, gn), 10 * std::max(1.0, hmax)};
  if (over.f) {
    b.flo = over.f->first;
    b.fhi = over.f->second;
  }
  if (over.g_max) b.gmax = *over.g_max;
  if (over.h_max) b.hmax = *over.h_max;
  return b;
}

DataTriple make_probe(const Dataset& S, const Vec& x, bool lh) {
  DataTriple p;
  p.x = x;
  p.g = Vec::Zero(S.dim);
  if (lh) p.hess = 0.0;
  return p;
}

// phi(z) = largest violation when the probe carries z = (f, g[, hess])
class MinimaxObjective {
 public:
  MinimaxObjective(const Family& fam, const Dataset& S, const Vec& x)
      : ev_(fam), S_(S), lh_(fam.kind == Kind::LipschitzHessian), d_(S.dim), probe_(make_probe(S, x, lh_)) {}

  int dim() const { return d_ + 1 + (lh_ ? 1 : 0); }

  double value(const Vec& z, int* active) {
    load(z);
    probe_components(ev_, S_, probe_, buf_);
    int k = static_cast<int>(std::min_element(buf_.begin(), buf_.end()) - buf_.begin());
    if (active) *active = k;
    return -buf_[k];
  }

  Vec subgradient(const Vec& z, int active) {
    Vec s(z.size());
    Vec zz = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double h = 1e-6 * std::max(1.0, std::abs(z[i]));
      zz[i] = z[i] + h;
      double up = component(zz, active);
      zz[i] = z[i] - h;
      double dn = component(zz, active);
      zz[i] = z[i];
      s[i] = -(up - dn) / (2 * h);
    }
    return s;
  }

 private:
  void load(const Vec& z) {
    probe_.f = z[0];
    probe_.g = z.segment(1, d_);
    if (lh_) probe_.hess = z[d_ + 1];
  }
  double component(const Vec& z, int k) {
    load(z);
    probe_components(ev_, S_, probe_, buf_);
    return buf_[k];
  }

  PairEvaluator ev_;
  const Dataset& S_;
  bool lh_;
  int d_;
  DataTriple probe_;
  std::vector<double> buf_;
};

struct EllipsoidResult {
  Vec z;
  double value;
};

EllipsoidResult ellipsoid_minimize(MinimaxObjective& obj, const Vec& lo, const Vec& hi, int max_iter) {
  const int n = obj.dim();
  Vec c = 0.5 * (lo + hi);
  Vec w = 0.5 * (hi - lo);
  Mat P = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) P(i, i) = n * w[i] * w[i];

  EllipsoidResult best{c, std::numeric_limits<double>::infinity()};
  double lower = -std::numeric_limits<double>::infinity();
  const double nn = n;
  for (int it = 0; it < max_iter; ++it) {
    Vec s = Vec::Zero(n);
    bool inside = true;
    double worst_out = 0;
    for (int i = 0; i < n; ++i) {
      double out = std::max(c[i] - hi[i], lo[i] - c[i]);
      if (out > worst_out) {
        worst_out = out;
        inside = false;
        s.setZero();
        s[i] = c[i] > hi[i] ? 1.0 : -1.0;
      }
    }
    double v = 0;
    if (inside) {
      int active = 0;
      v = obj.value(c, &active);
      if (v < best.value) best = {c, v};
      s = obj.subgradient(c, active);
      if (s.norm() == 0.0) break;
    }
    Vec Ps = P * s;
    double gam = std::sqrt(std::max(0.0, s.dot(Ps)));
    if (!(gam > 1e-300)) break;
    if (inside) {
      lower = std::max(lower, v - gam);
      if (best.value - lower <= 1e-11 * (1 + std::abs(best.value))) break;
    }
    Vec gt = Ps / gam;
    c -= gt / (nn + 1);
    P = (nn * nn / (nn * nn - 1)) * (P - (2 / (nn + 1)) * gt * gt.transpose());
    P = 0.5 * (P + P.transpose()).eval();
  }
  return best;
}

bool near_edge(const Vec& z, const Vec& lo, const Vec& hi, double rel) {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double w = hi[i] - lo[i];
    if (z[i] - lo[i] <= rel * w || hi[i] - z[i] <= rel * w) return true;
  }
  return false;
}

}  // namespace

ExtensionGap conic_gap(const Dataset& S, const Vec& x, const Family& fam, const GapOptions& opt) {
  require_dim(S, x);
  if (!concave_in_probe(fam))
    throw Error(ErrorCode::SolverFailure, std::string(kind_name(fam.kind)) + " is not concave in the probe data");
  MinimaxObjective obj(fam, S, x);
  const int n = obj.dim(), d = S.dim;
  Box b = default_box(S, x, opt.grid.box);
  Vec lo(n), hi(n);
  lo[0] = b.flo;
  hi[0] = b.fhi;
  for (int i = 0; i < d; ++i) {
    lo[1 + i] = -b.gmax;
    hi[1 + i] = b.gmax;
  }
  if (n > d + 1) {
    lo[n - 1] = -b.hmax;
    hi[n - 1] = b.hmax;
  }

  EllipsoidResult r{};
  double prev = std::numeric_limits<double>::infinity();
  for (int expand = 0;; ++expand) {
    r = ellipsoid_minimize(obj, lo, hi, opt.conic_iterations);
    bool edge = near_edge(r.z, lo, hi, 1e-4);
    if (!edge || r.value <= opt.tol) break;
    if (expand > 0 && r.value >= prev - 1e-9 * (1 + std::abs(prev))) break;
    if (expand == 4)
      throw Error(ErrorCode::UnboundedWitness, "minimax witness keeps drifting to the search box boundary");
    prev = r.value;
    Vec mid = 0.5 * (lo + hi), half = hi - lo;
    lo = mid - half;
    hi = mid + half;
  }

  ExtensionGap out;
  out.tau_star = r.value;
  out.witness_f = r.z[0];
  out.witness_g = r.z.segment(1, d);
  if (n > d + 1) out.witness_hess = r.z[n - 1];
  out.method = GapMethod::ConicSolve;
  return out;
}

namespace {

// min over t in [lo, hi] of max_k (a_k + b_k t), exactly: in one dimension the
// minimum of an upper envelope is the best crossing of a rising and a falling line
std::pair<double, double> envelope_min(const std::vector<double>& a, const std::vector<double>& b, double lo,
                                       double hi) {
  bool up = false, down = false;
  double pair_val = -std::numeric_limits<double>::infinity(), t = lo;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (b[k] > 0) up = true;
    if (b[k] < 0) down = true;
    if (!(b[k] > 0)) continue;
    for (std::size_t l = 0; l < a.size(); ++l) {
      if (!(b[l] < 0)) continue;
      double c = (a[l] - a[k]) / (b[k] - b[l]);
      double v = a[k] + b[k] * c;
      if (v > pair_val) {
        pair_val = v;
        t = c;
      }
    }
  }
  if (!up || !down) t = up ? lo : hi;
  t = std::clamp(t, lo, hi);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, a[k] + b[k] * t);
  return {m, t};
}

// Every residual is affine in the probe's f, so for fixed (g, hess) the
// inner minimum over f is an exact envelope minimum; only g (and hess) are gridded.
struct GridEval {
  PairEvaluator pairs;
  const Dataset& S;
  double x;
  bool lh;

  struct Point {
    double value, f;
    bool f_clamped;
  };

  Point operator()(DataTriple& probe, std::vector<double>& buf, std::vector<double>& a, std::vector<double>& b,
                   double flo, double fhi, double g, double h) const {
    const double f0 = 0.5 * (flo + fhi);
    probe.g[0] = g;
    if (lh) probe.hess = h;
    probe.f = f0;
    probe_components(pairs, S, probe, buf);
    a.resize(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) a[k] = -buf[k];
    probe.f = f0 + 1;
    probe_components(pairs, S, probe, buf);
    b.resize(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) b[k] = -buf[k] - a[k];
    auto [v, t] = envelope_min(a, b, flo - f0, fhi - f0);
    return {v, f0 + t, t <= flo - f0 || t >= fhi - f0};
  }
};

struct ScanResult {
  double value;
  int gi, hi;
  double f, g, h;
  bool f_clamped;
};

bool better(const ScanResult& p, const ScanResult& r) {
  return p.value < r.value || (p.value == r.value && (p.gi < r.gi || (p.gi == r.gi && p.hi < r.hi)));
}

struct Window {
  double flo, fhi, glo, ghi, hlo, hhi;
  int ng, nh;
};

ScanResult scan(const GridEval& ev, const Window& w, int threads) {
  const double sg = (w.ghi - w.glo) / (w.ng - 1);
  const double sh = w.nh > 1 ? (w.hhi - w.hlo) / (w.nh - 1) : 0.0;
  int T = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  T = std::min(T, w.ng);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ScanResult> part(T, ScanResult{inf, 0, 0, 0, 0, 0, false});
  auto work = [&](int t) {
    DataTriple probe;
    probe.x = Vec::Constant(1, ev.x);
    probe.g = Vec::Zero(1);
    if (ev.lh) probe.hess = 0.0;
    std::vector<double> buf, a, b;
    ScanResult& best = part[t];
    for (int i = t; i < w.ng; i += T) {
      double g = w.glo + i * sg;
      for (int j = 0; j < w.nh; ++j) {
        double h = w.nh > 1 ? w.hlo + j * sh : 0.0;
        GridEval::Point p = ev(probe, buf, a, b, w.flo, w.fhi, g, h);
        ScanResult cand{p.value, i, j, p.f, g, h, p.f_clamped};
        if (better(cand, best)) best = cand;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < T; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  ScanResult r = part[0];
  for (int t = 1; t < T; ++t)
    if (better(part[t], r)) r = part[t];
  return r;
}

bool on_edge(const ScanResult& r, const Window& w) {
  return r.f_clamped || r.gi == 0 || r.gi == w.ng - 1 || (w.nh > 1 && (r.hi == 0 || r.hi == w.nh - 1));
}

}  // namespace

ExtensionGap grid_oracle_gap(const Dataset& S, double x, const Family& fam, const GridOptions& opt, double tol) {
  if (S.dim != 1) throw Error(ErrorCode::UnsupportedDimension, "grid oracle needs d = 1");
  const int n = std::max(opt.resolution, 11);
  const bool lh = fam.kind == Kind::LipschitzHessian;
  Box b = default_box(S, Vec::Constant(1, x), opt.box);
  GridEval ev{PairEvaluator(fam), S, x, lh};

  // g alone gets the points a 2-D grid would have had along one axis times 20
  Window w{b.flo, b.fhi, -b.gmax, b.gmax, -b.hmax, b.hmax, lh ? n : 20 * (n - 1) + 1, lh ? n : 1};
  ScanResult best{};
  double prev = std::numeric_limits<double>::infinity();
  for (int expand = 0;; ++expand) {
    best = scan(ev, w, opt.threads);
    if (!on_edge(best, w) || best.value <= tol) break;
    if (expand > 0 && best.value >= prev - 1e-9 * (1 + std::abs(prev))) break;
    if (expand == 4) throw Error(ErrorCode::UnboundedWitness, "grid incumbent stays on the outer boundary");
    prev = best.value;
    auto grow = [](double& lo, double& hi) {
      double m = 0.5 * (lo + hi), h = hi - lo;
      lo = m - h;
      hi = m + h;
    };
    grow(w.flo, w.fhi);
    grow(w.glo, w.ghi);
    grow(w.hlo, w.hhi);
  }

  double sg = (w.ghi - w.glo) / (w.ng - 1), sh = lh ? (w.hhi - w.hlo) / (w.nh - 1) : 0.0;
  // past the requested step, keep zooming while a positive value is still
  // shrinking: discretisation error alone can sit just above small thresholds
  double before = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 12; ++level) {
    double step = std::max(sg, sh);
    bool required = level < opt.refinements || step > opt.final_step;
    bool shrinking = best.value > tol && best.value < 0.99 * before && step > 1e-12;
    if (!required && !shrinking) break;
    before = best.value;
    double hg = 10 * sg, hh = 10 * sh;
    double cg = best.g, ch = best.h;
    Window r_w{};
    for (int recentre = 0; recentre < 20; ++recentre) {
      r_w = Window{w.flo, w.fhi, cg - hg, cg + hg, ch - hh, ch + hh, n, lh ? n : 1};
      ScanResult r = scan(ev, r_w, opt.threads);
      bool improved = r.value < best.value;
      if (improved) best = r;
      // a flat plateau keeps its lowest-index point on the edge; only chase strict improvement
      bool edge = r.gi == 0 || r.gi == r_w.ng - 1 || (lh && (r.hi == 0 || r.hi == r_w.nh - 1));
      if (!edge || !improved) break;
      cg = r.g;
      ch = r.h;
    }
    sg = 2 * hg / (n - 1);
    sh = 2 * hh / (n - 1);
  }

  ExtensionGap out;
  out.tau_star = best.value;
  out.witness_f = best.f;
  out.witness_g = Vec::Constant(1, best.g);
  if (lh) out.witness_hess = best.h;
  out.method = GapMethod::GridOracle;
  return out;
}

ExtensionGap extension_gap(const Dataset& S, const Vec& x, const Family& fam, const GapOptions& opt) {
  require_dim(S, x);
  bool feasible = true;
  if (opt.check_feasibility)
    require_feasible(fam, S, opt.tol);
  else
    feasible = satisfies(fam, S, opt.tol).ok;

  if (has_extender(fam) && feasible) {
    Extension e;
    switch (fam.kind) {
      case Kind::Convex: e = extend_convex(S, x, opt.tol); break;
      case Kind::QuadraticClass: e = extend_quadratic(S, x, fam["mu"], fam["M"], 0, opt.tol); break;
      default: e = extend_wc_tight(S, x, fam["mu"], fam["B"], opt.tol); break;
    }
    DataTriple probe;
    probe.x = x;
    probe.f = e.f;
    probe.g = e.g;
    ExtensionGap out;
    out.tau_star = -probe_min_residual(fam, S, probe);
    out.witness_f = e.f;
    out.witness_g = e.g;
    out.method = GapMethod::ClosedForm;
    // S feasible only up to tol can leave the witness slightly short; the
    // convex solve then gives the actual minimum
    if (out.tau_star > opt.tol && concave_in_probe(fam)) {
      ExtensionGap c = conic_gap(S, x, fam, opt);
      if (c.tau_star < out.tau_star) return c;
    }
    return out;
  }
  if (concave_in_probe(fam)) return conic_gap(S, x, fam, opt);
  if (S.dim == 1) return grid_oracle_gap(S, x[0], fam, opt.grid, opt.tol);
  throw Error(ErrorCode::SolverFailure,
              std::string(kind_name(fam.kind)) + ": no closed form or convex reformulation and d > 1");
}

}  // namespace interp
