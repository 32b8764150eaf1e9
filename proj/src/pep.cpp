#include "interp/pep.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace interp {

void validate(const PepSpec& s) {
  if (s.N < 1) throw Error(ErrorCode::ParameterOutOfDomain, "N >= 1 required");
  if (!(s.h > 0 && s.mu > 0 && s.B > 0 && s.rho > 0 && s.R2 > 0))
    throw Error(ErrorCode::ParameterOutOfDomain, "h, mu, B, rho, R2 must be positive");
  if (s.pin_c_selectors && s.variant != PepVariant::Classical_p)
    throw Error(ErrorCode::ParameterOutOfDomain, "pinned C-selectors only apply to the classical variant");
  if (s.anchor_radius2 && !(*s.anchor_radius2 > 0))
    throw Error(ErrorCode::ParameterOutOfDomain, "anchor radius must be positive");
}

std::string WcLayout::label_name(int a) const {
  if (a <= N) return "x" + std::to_string(a);
  if (a <= 2 * N + 1) return "y" + std::to_string(a - N - 1);
  return "x*";
}

WcLayout wc_layout(const PepSpec& spec) {
  WcLayout L;
  L.N = spec.N;
  int col = 1 + 2 * (spec.N + 1);
  if (spec.variant == PepVariant::Tight_p)
    for (int a = 0; a < L.labels(); ++a)
      for (int b = 0; b < L.labels(); ++b)
        if (a != b) L.c_index[{a, b}] = col++;
  L.gram_dim = col;
  return L;
}

namespace {

struct Point {
  Vec x, g;
  int f = -1;  // index into F, -1 for the optimum (f* = 0)
};

std::vector<Point> wc_points(const PepSpec& s, int n) {
  const int N = s.N;
  auto e = [&](int k) {
    Vec v = Vec::Zero(n);
    v[k] = 1;
    return v;
  };
  std::vector<Point> pts(2 * N + 3);
  Vec x = e(0);
  for (int i = 0; i <= N; ++i) {
    pts[i] = {x, e(1 + i), i};
    x -= s.h * e(1 + i);
  }
  for (int i = 0; i <= N; ++i) {
    Vec v = e(2 + N + i);
    pts[N + 1 + i] = {pts[i].x - v / s.rho, v, N + 1 + i};
  }
  pts[2 * N + 2] = {Vec::Zero(n), Vec::Zero(n), -1};
  return pts;
}

Vec fcoef(int nf, std::initializer_list<std::pair<int, double>> terms) {
  Vec F = Vec::Zero(nf);
  for (auto [i, c] : terms)
    if (i >= 0) F[i] += c;
  return F;
}

}  // namespace

SdpInstance build_wc_pep(const PepSpec& s) {
  validate(s);
  const WcLayout lay = wc_layout(s);
  const int n = lay.gram_dim, N = s.N, nf = 2 * (N + 1);
  const auto pts = wc_points(s, n);
  const bool tight = s.variant == PepVariant::Tight_p;

  SdpInstance inst;
  inst.gram_dim = n;
  inst.n_fvals = nf;

  for (int a = 0; a < lay.labels() - 1; ++a)
    inst.constraints.push_back(
        {SymBuilder(n).outer(1, pts[a].g).build(), Vec::Zero(nf), s.B * s.B, Sense::LE, "H:" + lay.label_name(a)});

  for (int a = 0; a < lay.labels(); ++a)
    for (int b = 0; b < lay.labels(); ++b) {
      if (a == b) continue;
      const Point &P = pts[a], &Q = pts[b];
      Vec d = Q.x - P.x;
      SymBuilder A(n);
      A.sym(-1, P.g, d).outer(0.5 * s.mu, d);
      Vec c;
      if (tight) {
        c = Vec::Zero(n);
        c[lay.c_index.at({a, b})] = 1;
      } else if (s.pin_c_selectors) {
        c = Q.x;
      }
      if (c.size() > 0) A.outer(-0.5 * s.mu, Q.x - c);
      std::string pair = lay.label_name(a) + "," + lay.label_name(b);
      inst.constraints.push_back({A.build(), fcoef(nf, {{Q.f, 1}, {P.f, -1}}), 0.0, Sense::GE, "A:" + pair});
      if (tight)
        inst.constraints.push_back({SymBuilder(n).outer(1, P.g + s.mu * (P.x - c)).build(), Vec::Zero(nf),
                                    s.B * s.B, Sense::LE, "E:" + pair});
    }

  const Vec w0 = pts[0].x - pts[N + 1].x;
  const double init_w = s.convention == MoreauConvention::PenaltyWeight ? 0.5 * s.rho : 0.5 / s.rho;
  inst.constraints.push_back(
      {SymBuilder(n).outer(init_w, w0).build(), fcoef(nf, {{N + 1, 1}}), s.R2, Sense::LE, "initial"});

  const double r2 = s.anchor_radius2.value_or(100 * std::max({1.0, s.B * s.B / (s.mu * s.mu), s.R2 / s.mu}));
  if (std::isfinite(r2))
    inst.constraints.push_back({SymBuilder(n).outer(1, pts[0].x).build(), Vec::Zero(nf), r2, Sense::LE, "anchor"});

  const double obj_w = (s.convention == MoreauConvention::PenaltyWeight ? s.rho * s.rho : 1 / (s.rho * s.rho)) /
                       (N + 1);
  SymBuilder obj(n);
  for (int i = 0; i <= N; ++i) obj.outer(obj_w, pts[i].x - pts[N + 1 + i].x);
  inst.objective_G = obj.build();
  inst.objective_F = Vec::Zero(nf);
  check_instance(inst);
  return inst;
}

SdpInstance build_gd_pep(const GdSpec& s) {
  if (s.N < 1 || !(s.L > 0) || !(s.R2 >= 0))
    throw Error(ErrorCode::ParameterOutOfDomain, "need N >= 1, L > 0, R2 >= 0");
  const double alpha = s.alpha > 0 ? s.alpha : 1 / s.L;
  const int N = s.N, n = N + 2, nf = N + 1;
  auto e = [&](int k) {
    Vec v = Vec::Zero(n);
    v[k] = 1;
    return v;
  };
  std::vector<Point> pts(N + 2);
  Vec x = e(0);
  for (int i = 0; i <= N; ++i) {
    pts[i] = {x, e(1 + i), i};
    x -= alpha * e(1 + i);
  }
  pts[N + 1] = {Vec::Zero(n), Vec::Zero(n), -1};

  SdpInstance inst;
  inst.gram_dim = n;
  inst.n_fvals = nf;
  inst.constraints.push_back({SymBuilder(n).outer(1, pts[0].x).build(), Vec::Zero(nf), s.R2, Sense::LE, "initial"});
  for (int i = 0; i < N + 2; ++i)
    for (int j = 0; j < N + 2; ++j) {
      if (i == j) continue;
      const Point &P = pts[i], &Q = pts[j];
      Vec dx = P.x - Q.x, dg = P.g - Q.g;
      std::string tag = std::to_string(i) + "," + std::to_string(j);
      SymBuilder A(n);
      A.sym(-1, Q.g, dx);
      if (s.variant == GdVariant::Tight_eq2) A.outer(-0.5 / s.L, dg);
      inst.constraints.push_back({A.build(), fcoef(nf, {{P.f, 1}, {Q.f, -1}}), 0.0, Sense::GE, "f:" + tag});
      if (s.variant == GdVariant::Weak_eq1 && i < j) {
        SymBuilder Lc(n);
        Lc.outer(s.L * s.L, dx).outer(-1, dg);
        inst.constraints.push_back({Lc.build(), Vec::Zero(nf), 0.0, Sense::GE, "lip:" + tag});
      }
    }
  inst.objective_G = SymBuilder(n).build();
  inst.objective_F = Vec::Zero(nf);
  inst.objective_F[N] = 1;
  check_instance(inst);
  return inst;
}

GdSpec gd_calibration_config(GdVariant v) {
  GdSpec s;
  s.N = 8;
  s.L = 1;
  s.R2 = 1;
  s.alpha = 1.0 / 8;
  s.variant = v;
  return s;
}

PepResult solve(const SdpInstance& inst, ConicBackend& backend) {
  if (!backend.supports_psd()) throw Error(ErrorCode::SolverFailure, "backend lacks PSD support");
  SdpSolution sol = backend.solve(inst);
  PepResult r;
  r.bound = sol.objective;
  r.status = sol.status;
  r.gram = sol.G;
  r.fvals = sol.F;
  r.dual = sol.dual;
  r.primal_residual = sol.primal_residual;
  r.dual_residual = sol.dual_residual;
  r.gap = sol.gap;
  // a binding anchor ball means the reported value may be too small
  for (std::size_t k = 0; k < inst.constraints.size() && k < static_cast<std::size_t>(sol.dual.size()); ++k)
    if (inst.constraints[k].label == "anchor" && std::abs(sol.dual[k]) > 1e-6 && r.status == SolverStatus::Optimal)
      r.status = SolverStatus::Inaccurate;
  if (sol.status == SolverStatus::Optimal || sol.status == SolverStatus::Inaccurate) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sol.G + sol.G.transpose()));
    Vec lam = es.eigenvalues();
    if (lam.minCoeff() < -1e-7)
      throw Error(ErrorCode::SolverFailure, "Gram matrix has eigenvalue " + std::to_string(lam.minCoeff()));
    r.recovered_points = lam.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  }
  return r;
}

PepResult solve(const SdpInstance& inst) {
  InteriorPointBackend b;
  return solve(inst, b);
}

Dataset wc_pep_dataset(const PepSpec& spec, const PepResult& res) {
  if (res.recovered_points.size() == 0) throw Error(ErrorCode::SolverFailure, "no recovered points");
  const WcLayout lay = wc_layout(spec);
  const auto pts = wc_points(spec, lay.gram_dim);
  const Mat& P = res.recovered_points;
  std::vector<DataTriple> ts;
  for (const auto& p : pts) {
    DataTriple t;
    t.x = P * p.x;
    t.g = P * p.g;
    t.f = p.f >= 0 ? res.fvals[p.f] : 0.0;
    ts.push_back(std::move(t));
  }
  return make_dataset(std::move(ts));
}

Baseline baseline_classical(int N, double mu, double B, double R) {
  double s = std::sqrt(N + 1.0);
  return {R * mu / (B * s), 4 * B * R / (mu * s)};
}

Baseline baseline_prior_pep(int N, double mu, double B, double R) {
  double n1 = N + 1.0;
  double h = std::sqrt(4 * (R * mu / B) * n1 + 1) / (2 * n1);
  double bound = B * B * (2 * std::sqrt(4 * (R * R * mu * mu / (B * B)) * n1 + 1) - 1) / (mu * mu * n1);
  return {h, bound};
}

namespace {

SweepRow sweep_point(PepSpec s) {
  SweepRow row;
  row.N = s.N;
  row.h = s.h;
  double R = std::sqrt(s.R2);
  row.baseline1 = baseline_classical(s.N, s.mu, s.B, R).bound;
  row.baseline2 = baseline_prior_pep(s.N, s.mu, s.B, R).bound;
  for (PepVariant v : {PepVariant::Tight_p, PepVariant::Classical_p}) {
    s.variant = v;
    s.pin_c_selectors = false;
    double bound = std::numeric_limits<double>::quiet_NaN();
    SolverStatus st = SolverStatus::Failed;
    try {
      PepResult r = solve(build_wc_pep(s));
      bound = r.bound;
      st = r.status;
    } catch (const Error&) {
    }
    if (v == PepVariant::Tight_p) {
      row.bound_tight = bound;
      row.status_tight = st;
    } else {
      row.bound_classical = bound;
      row.status_classical = st;
    }
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_N(const PepSpec& tmpl, const std::vector<int>& Ns, StepRule rule) {
  std::vector<SweepRow> out;
  for (int N : Ns) {
    PepSpec s = tmpl;
    s.N = N;
    double R = std::sqrt(s.R2);
    if (rule == StepRule::Classical) s.h = baseline_classical(N, s.mu, s.B, R).h;
    if (rule == StepRule::PriorPep) s.h = baseline_prior_pep(N, s.mu, s.B, R).h;
    out.push_back(sweep_point(s));
  }
  return out;
}

std::vector<SweepRow> sweep_h(const PepSpec& tmpl, const std::vector<double>& hs) {
  std::vector<SweepRow> out;
  for (double h : hs) {
    PepSpec s = tmpl;
    s.h = h;
    out.push_back(sweep_point(s));
  }
  return out;
}

std::string sweep_csv_header() {
  return "N,h,bound_tight,bound_classical_p,baseline1,baseline2,status_tight,status_classical";
}

std::string sweep_csv_row(const SweepRow& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.N << ',' << r.h << ',' << r.bound_tight << ',' << r.bound_classical << ',' << r.baseline1 << ','
     << r.baseline2 << ',' << status_name(r.status_tight) << ',' << status_name(r.status_classical);
  return os.str();
}

}  // namespace interp
