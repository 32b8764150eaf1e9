#include "interp/search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

namespace interp {

double VerifyOptions::certify_threshold() const { return threshold.value_or(std::sqrt(tol)); }

Counterexample verify_counterexample(const Dataset& raw, const Vec& x, const Family& fam, const VerifyOptions& opt,
                                     Provenance prov) {
  Dataset S = validate_dataset(raw);
  if (x.size() != S.dim) throw Error(ErrorCode::DimensionMismatch, "probe point dimension differs from dataset");
  Satisfaction sat = satisfies(fam, S, opt.tol);
  if (!sat.ok)
    throw Error(ErrorCode::DatasetInfeasible, "pair (" + std::to_string(sat.worst.i) + "," +
                                                  std::to_string(sat.worst.j) + ") component " +
                                                  std::to_string(sat.worst.component) + " = " +
                                                  fmt_num(sat.worst.value));
  GapOptions gopt;
  gopt.check_feasibility = false;
  gopt.tol = opt.tol;
  gopt.grid = opt.grid;
  ExtensionGap gap = extension_gap(S, x, fam, gopt);
  double oracle = std::numeric_limits<double>::quiet_NaN();
  if (S.dim == 1) oracle = grid_oracle_gap(S, x[0], fam, opt.grid, opt.tol).tau_star;
  if (!(gap.tau_star > opt.certify_threshold()) || (S.dim == 1 && !(oracle > opt.certify_threshold())))
    throw Error(ErrorCode::Extensible, "tau* = " + fmt_num(gap.tau_star) +
                                           (S.dim == 1 ? ", oracle tau* = " + fmt_num(oracle) : ""));
  return Counterexample{S, x, gap.tau_star, oracle, fam, prov};
}

nlohmann::json counterexample_to_json(const Counterexample& c) {
  nlohmann::json j = dataset_to_json(c.S);
  j["probe_x"] = vec_to_json(c.x);
  j["tau_star"] = c.tau_star;
  if (!std::isnan(c.tau_oracle)) j["tau_oracle"] = c.tau_oracle;
  j["family"] = family_to_json(c.family);
  j["provenance"] = c.provenance == Provenance::PaperTable ? "PaperTable" : "Found";
  return j;
}

// ---------------------------------------------------------------------------
// randomized ascent

namespace {

struct Climber {
  const Family& fam;
  const SearchConfig& cfg;
  int d;
  std::mt19937_64 rng;
  int used = 0;
  int budget;

  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> unit{0.0, 1.0};

  double gauss() { return normal(rng); }

  bool has_bound() const { return fam.kind == Kind::WeaklyConvexBounded || fam.kind == Kind::WeaklyConvexBoundedTight; }

  // tau at (S, x); NaN when the inner solve fails
  double tau(const Dataset& S, const Vec& x, ExtensionGap* out = nullptr) {
    ++used;
    GapOptions o;
    o.check_feasibility = false;
    o.tol = cfg.tol;
    o.grid = cfg.search_grid;
    o.conic_iterations = 2000;
    try {
      ExtensionGap g = extension_gap(S, x, fam, o);
      if (out) *out = g;
      return g.tau_star;
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  }

  Vec random_point() {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = -2 + 4 * unit(rng);
    return x;
  }

  DataTriple random_triple() {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      DataTriple t;
      t.x = random_point();
      t.f = gauss();
      t.g = Vec(d);
      for (int i = 0; i < d; ++i) t.g[i] = gauss();
      if (has_bound()) {
        double B = fam["B"], n = t.g.norm();
        if (n > 0) t.g *= B * unit(rng) / n;
      }
      if (fam.kind == Kind::LipschitzHessian) t.hess = gauss();
      if (eval_pairwise(fam, t, t).min() >= 0) return t;
    }
    throw Error(ErrorCode::SolverFailure, "could not sample a self-consistent point");
  }

  // minimum residual over pairs touching index k
  double touching(const Dataset& S, std::size_t k) {
    double m = eval_pairwise(fam, S[k], S[k]).min();
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (i == k) continue;
      m = std::min(m, eval_pairwise(fam, S[i], S[k]).min());
      m = std::min(m, eval_pairwise(fam, S[k], S[i]).min());
    }
    return m;
  }

  // every residual is affine in f_k, so the worst one is concave in f_k
  bool repair(Dataset& S, std::size_t k) {
    if (touching(S, k) >= -0.1 * cfg.tol) return true;
    double lo = S.triples[k].f - 100, hi = S.triples[k].f + 100;
    const double r = 0.5 * (std::sqrt(5.0) - 1);
    auto w = [&](double f) {
      S.triples[k].f = f;
      return touching(S, k);
    };
    double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
    double wa = w(a), wb = w(b);
    for (int it = 0; it < 120; ++it) {
      if (wa < wb) {
        lo = a;
        a = b;
        wa = wb;
        b = lo + r * (hi - lo);
        wb = w(b);
      } else {
        hi = b;
        b = a;
        wb = wa;
        a = hi - r * (hi - lo);
        wa = w(a);
      }
    }
    double best = 0.5 * (lo + hi);
    return w(best) >= -0.1 * cfg.tol;
  }

  bool distinct(const Dataset& S, const Vec& x) const {
    for (const auto& t : S.triples)
      if ((t.x - x).norm() < 1e-9) return false;
    return true;
  }

  // grows a feasible dataset through extension witnesses; may stop early with
  // a non-extensible probe already in hand
  std::pair<Dataset, Vec> seed_state(int N) {
    Dataset S;
    S.dim = d;
    S.triples.push_back(random_triple());
    for (int tries = 0; static_cast<int>(S.size()) < N && tries < 50 && used < budget; ++tries) {
      Vec xn = random_point();
      if (!distinct(S, xn)) continue;
      ExtensionGap g{};
      double t = tau(S, xn, &g);
      if (std::isnan(t)) continue;
      if (t > cfg.tol) return {S, xn};
      DataTriple nt;
      nt.x = xn;
      nt.f = g.witness_f;
      nt.g = g.witness_g;
      if (fam.kind == Kind::LipschitzHessian) nt.hess = g.witness_hess.value_or(0.0);
      S.triples.push_back(nt);
      if (!repair(S, S.size() - 1)) S.triples.pop_back();
    }
    Vec x = random_point();
    while (!distinct(S, x)) x = random_point();
    return {S, x};
  }

  bool perturb(Dataset& S, Vec& x, double sigma) {
    std::size_t target = std::uniform_int_distribution<std::size_t>(0, S.size())(rng);
    if (target == S.size()) {
      for (int i = 0; i < d; ++i) x[i] += sigma * gauss();
      return distinct(S, x);
    }
    DataTriple& t = S.triples[target];
    for (int i = 0; i < d; ++i) {
      t.x[i] += sigma * gauss();
      t.g[i] += sigma * gauss();
    }
    t.f += sigma * gauss();
    if (t.hess) *t.hess += sigma * gauss();
    for (std::size_t i = 0; i < S.size(); ++i)
      if (i != target && (S[i].x - t.x).norm() < 1e-9) return false;
    if ((t.x - x).norm() < 1e-9) return false;
    return repair(S, target);
  }
};

struct StartResult {
  double tau = -std::numeric_limits<double>::infinity();
  Dataset S;
  Vec x;
  std::vector<std::pair<int, double>> trace;
  int used = 0;
};

StartResult run_start(const Family& fam, int N, int d, const SearchConfig& cfg, int start, int budget) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(start)};
  Climber c{fam, cfg, d, std::mt19937_64(seq), 0, budget};
  StartResult res;
  while (c.used < budget && res.tau < cfg.target) {
    auto [S, x] = c.seed_state(N);
    double tau = c.tau(S, x);
    if (std::isnan(tau)) continue;
    double sigma = cfg.init_step;
    int fails = 0;
    auto record = [&]() {
      if (tau > res.tau) {
        res.tau = tau;
        res.S = S;
        res.x = x;
        res.trace.emplace_back(c.used, tau);
      }
    };
    record();
    while (c.used < budget && sigma > 1e-3 * cfg.init_step && res.tau < cfg.target) {
      Dataset S2 = S;
      Vec x2 = x;
      double t2 = std::numeric_limits<double>::quiet_NaN();
      if (c.perturb(S2, x2, sigma)) t2 = c.tau(S2, x2);
      if (!std::isnan(t2) && t2 >= tau) {
        bool strict = t2 > tau + 1e-12;
        S = std::move(S2);
        x = std::move(x2);
        tau = t2;
        record();
        fails = strict ? 0 : fails + 1;
      } else {
        ++fails;
      }
      if (fails >= 20) {
        sigma *= 0.5;
        fails = 0;
      }
    }
  }
  res.used = c.used;
  return res;
}

}  // namespace

SearchReport find_counterexample(const Family& fam, int N, int d, const SearchConfig& cfg) {
  if (N < 1 || d < 1) throw Error(ErrorCode::ParameterOutOfDomain, "need N >= 1 and d >= 1");
  if (d > 1 && !concave_in_probe(fam) && !has_extender(fam))
    throw Error(ErrorCode::UnsupportedDimension, "this family needs the 1-D grid oracle");
  if (fam.kind == Kind::LipschitzHessian && d != 1)
    throw Error(ErrorCode::UnsupportedDimension, "LipschitzHessian needs d = 1");

  const int starts = std::max(1, cfg.starts);
  std::vector<StartResult> results(starts);
  std::vector<int> budgets(starts, cfg.budget / starts);
  budgets[0] += cfg.budget % starts;

  int T = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  T = std::min(T, starts);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(T);
  for (int t = 0; t < T; ++t)
    pool.emplace_back([&, t]() {
      try {
        for (int s = t; s < starts; s += T) results[s] = run_start(fam, N, d, cfg, s, budgets[s]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SearchReport rep;
  std::vector<int> order(starts);
  for (int s = 0; s < starts; ++s) {
    order[s] = s;
    rep.iterations += results[s].used;
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return results[a].tau > results[b].tau; });
  const StartResult& top = results[order[0]];
  rep.best_tau = top.tau;
  rep.best_S = top.S;
  rep.best_x = top.x;
  rep.trace = top.trace;
  rep.budget_exhausted = rep.iterations >= cfg.budget;

  VerifyOptions vo;
  vo.tol = cfg.tol;
  for (int s : order) {
    if (!(results[s].tau > vo.certify_threshold())) break;
    try {
      rep.best = verify_counterexample(results[s].S, results[s].x, fam, vo, Provenance::Found);
      break;
    } catch (const Error&) {
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// published counterexamples

namespace {

Dataset dedup(std::vector<DataTriple> ts) {
  std::vector<DataTriple> out;
  for (auto& t : ts)
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
  return make_dataset(std::move(out));
}

Vec scalar(double v) { return Vec::Constant(1, v); }

[[noreturn]] void row_error(const std::string& id, const std::string& why) {
  throw Error(ErrorCode::RowFailed, id + ": " + why);
}

}  // namespace

std::vector<TableRow> table_rows(Table which, const TableParams& p) {
  std::vector<TableRow> rows;
  if (which == Table::Table1) {
    double mu = p.mu, B = p.B, L = p.L, M = p.M;
    rows.push_back({"T1-weakly-convex", make_family(Kind::WeaklyConvexBounded, {{"mu", mu}, {"B", B}}),
                    dedup({triple(0, 0, B), triple(2 * B / mu + 1, mu / 2 - 2 * B, B)}), scalar(2 * B / mu)});
    double e = p.uc_p;
    rows.push_back({"T1-uniformly-convex", make_family(Kind::UniformlyConvex, {{"mu", mu}, {"p", e}}),
                    dedup({triple(0, 0, 0), triple(2, mu * std::pow(2, e) / e, mu * std::pow(2, e) / e),
                           triple(1, mu * (std::pow(2, e - 1) - 1) / e, mu * std::pow(2, e - 1) / e)}),
                    scalar(0.1)});
    double a = p.holder_alpha, c = L * std::pow(1 + 1 / a, a);
    rows.push_back(
        {"T1-holder", make_family(Kind::HolderSmooth, {{"L", L}, {"alpha", a}, {"p", p.holder_exponent}}),
         dedup({triple(0, 0, 0), triple(2, c, c), triple(1, c / 2 - L / (a + 1), c / 2)}), scalar(0.5)});
    rows.push_back({"T1-pl", make_family(Kind::SmoothPL, {{"L", L}, {"mu", L / 2}, {"fstar", 0}}),
                    dedup({triple(0, 0, 0), triple(1, L / 2, L)}), scalar(0.5)});
    rows.push_back({"T1-lipschitz-hessian", make_family(Kind::LipschitzHessian, {{"M", M}}),
                    dedup({triple(0, 0, 0, 0), triple(1, -M / 6, 0, 0)}), scalar(0.5)});
  } else if (which == Table::Table3) {
    double be = p.t3_beta;
    for (double ga : p.t3_gammas) {
      std::string id = "T3-gamma=" + nlohmann::json(ga).dump();
      if (ga == 0 || ga == 1 || ga == 0.5) row_error(id, "gamma must avoid 0, 1/2 and 1");
      Family fam = make_family(Kind::ConsistForm, {{"alpha", 0}, {"beta", be}, {"gamma", ga}});
      double q = be / (1 - 2 * ga), m = -2 * be / (1 - 2 * ga);
      std::vector<DataTriple> ts{triple(0, 0, 1)};
      if (ga < 0) {
        ts.push_back(triple(-1, q - 1 + ga, m));
        ts.push_back(triple(-1, q - 1 + ga, m));
      } else if (ga > 1) {
        ts.push_back(triple(-1, q - 1 - ga, m + 2));
      } else if (ga <= 0.5) {
        ts.push_back(triple(-1, q - 1 + ga, m));
        ts.push_back(triple(-1.1, q - 1 + ga, m + 1));
      } else {
        ts.push_back(triple(-1, q - 1 - ga, m + 2));
        ts.push_back(triple(-1.1, q - 1 - ga, m + 1));
      }
      rows.push_back({id, fam, dedup(ts), scalar(-0.5)});
    }
  } else {
    double a = p.t4_alpha, ga = p.t4_gamma;
    for (double be : p.t4_betas) {
      std::string id = "T4-beta=" + nlohmann::json(be).dump();
      if (!(a > 0)) row_error(id, "alpha > 0 required");
      Family fam = make_family(Kind::ConsistForm, {{"alpha", a}, {"beta", be}, {"gamma", ga}});
      double t = (1 - 2 * ga) / (4 * a);
      double thr = 1 / (16 * a * a);
      if (be < 0 || be > thr) {
        double x = 0.5;
        if (be > thr) {
          double den = 16 * a * a * be - 1;
          if (den == 0) row_error(id, "probe formula is singular");
          x = 1 / den + 1;
        }
        rows.push_back({id, fam, dedup({triple(0, 0, 0), triple(1, -be + (1 - ga) * t - t * t, t)}), scalar(x)});
      } else if (be > 0 && be < thr) {
        double K = (1 - 2 * ga) * (1 - 2 * ga) - 16 * a * be;
        if (!(K > 0)) row_error(id, "K = " + fmt_num(K) + " is not positive");
        double sk = std::sqrt(K);
        rows.push_back({id, fam,
                        dedup({triple(0, 0, 0),
                               triple(4 * a, 1 - 4 * ga + 2 * ga * ga + (1 - ga) * sk, 1 - 2 * ga + sk)}),
                        scalar(2 * a * (1 + 1 / K))});
      } else {
        row_error(id, "beta sits on a regime boundary");
      }
    }
  }
  return rows;
}

std::vector<RowResult> table_suite(Table which, const TableParams& params, const VerifyOptions& opt) {
  std::vector<RowResult> out;
  for (const auto& row : table_rows(which, params)) {
    RowResult r;
    r.id = row.id;
    r.family = row.family;
    r.S = row.S;
    r.x = row.x;
    // same checks as verify_counterexample, but the gaps are kept for the report
    // even when the row fails
    try {
      Satisfaction sat = satisfies(row.family, row.S, opt.tol);
      r.feasibility = sat.worst.value;
      GapOptions g;
      g.check_feasibility = false;
      g.tol = opt.tol;
      g.grid = opt.grid;
      r.tau_star = extension_gap(row.S, row.x, row.family, g).tau_star;
      if (row.S.dim == 1) r.tau_oracle = grid_oracle_gap(row.S, row.x[0], row.family, opt.grid, opt.tol).tau_star;
      if (!sat.ok)
        r.reason = std::string("DatasetInfeasible: worst residual ") + fmt_num(sat.worst.value);
      else if (!(r.tau_star > opt.certify_threshold()) || (row.S.dim == 1 && !(r.tau_oracle > opt.certify_threshold())))
        r.reason = "Extensible: tau* = " + fmt_num(r.tau_star) + " not above " + fmt_num(opt.certify_threshold());
      else
        r.certified = true;
    } catch (const Error& e) {
      r.reason = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace interp
