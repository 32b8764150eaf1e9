#include <doctest.h>

#include "generators.hpp"
#include "interp/constraints.hpp"
#include "interp/extension.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace interp;

namespace {

Family wc(double mu = 1, double B = 1) { return make_family(Kind::WeaklyConvexBounded, {{"mu", mu}, {"B", B}}); }
Family wct(double mu = 1, double B = 1) { return make_family(Kind::WeaklyConvexBoundedTight, {{"mu", mu}, {"B", B}}); }
Family quad(double mu, double M = 1) { return make_family(Kind::QuadraticClass, {{"mu", mu}, {"M", M}}); }

Vec v1(double x) { return Vec::Constant(1, x); }

DataTriple as_probe(const Vec& x, const Extension& e) { return {x, e.f, e.g, {}}; }

// max over appended-probe components of minus the residual
double probe_tau(const Family& fam, const Dataset& S, const DataTriple& p) {
  std::vector<double> c;
  probe_components(fam, S, p, c);
  return -*std::min_element(c.begin(), c.end());
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an interp::Error");
  return ErrorCode::ParseError;
}

}  // namespace

TEST_CASE("project_ball examples") {
  CHECK(project_ball(v1(3), {v1(1), 1})[0] == doctest::Approx(2));
  CHECK(project_ball(v1(0.5), {v1(1), 1})[0] == 0.5);
  Vec y(2);
  y << 3, 4;
  Vec p = project_ball(y, {Vec::Zero(2), 5});
  CHECK(p[0] == doctest::Approx(3));
  CHECK(p[1] == doctest::Approx(4));
  CHECK(project_ball(y, {Vec::Zero(2), 0}).norm() == 0.0);
}

TEST_CASE("extend_convex examples") {
  Extension e = extend_convex(make_dataset({triple(0, 0, 1)}), v1(2));
  CHECK(e.f == doctest::Approx(2));
  CHECK(e.g[0] == doctest::Approx(1));

  Dataset abs = make_dataset({triple(-1, 1, -1), triple(1, 1, 1)});
  e = extend_convex(abs, v1(0));
  CHECK(e.f == doctest::Approx(0).scale(1));
  CHECK(e.g[0] == -1.0);  // lowest index wins the tie
  CHECK(probe_min_residual(make_family(Kind::Convex, {}), abs, as_probe(v1(0), e)) >= 0.0);

  Dataset sq = make_dataset({triple(0, 0, 0), triple(1, 1, 2)});
  e = extend_convex(sq, v1(2));
  CHECK(e.f == doctest::Approx(3));
  CHECK(e.g[0] == doctest::Approx(2));
  CHECK(probe_min_residual(make_family(Kind::Convex, {}), sq, as_probe(v1(2), e)) >= 0.0);
}

TEST_CASE("extend_wc_tight examples") {
  Dataset S = make_dataset({triple(0, 0, 1)});
  Extension e = extend_wc_tight(S, v1(3), 1, 1);
  CHECK(e.f == doctest::Approx(-1));
  CHECK(e.g[0] == doctest::Approx(-1));
  CHECK(probe_min_residual(wct(), S, as_probe(v1(3), e)) >= -1e-12);

  e = extend_wc_tight(S, v1(1), 1, 1);
  CHECK(e.f == doctest::Approx(0.5));
  CHECK(e.g[0] == doctest::Approx(0).scale(1));

  Dataset T = make_dataset({triple(0.7, -0.2, 0.4)});
  e = extend_wc_tight(T, v1(0.7), 1, 1);
  CHECK(e.f == doctest::Approx(-0.2));
  CHECK(e.g[0] == doctest::Approx(0.4));
}

TEST_CASE("extend_quadratic examples") {
  Extension e = extend_quadratic(make_dataset({triple(0, 0, 0)}), v1(2), 1, 1);
  CHECK(e.f == doctest::Approx(2));
  CHECK(e.g[0] == doctest::Approx(2));

  e = extend_quadratic(make_dataset({triple(1, 0.5, 1)}), v1(0), 1, 1);
  CHECK(e.f == doctest::Approx(0).scale(1));
  CHECK(e.g[0] == doctest::Approx(0).scale(1));

  Dataset S = make_dataset({triple(0, 0, 1)});
  e = extend_quadratic(S, v1(1), 2, 1);
  CHECK(e.f == doctest::Approx(2));
  CHECK(e.g[0] == doctest::Approx(3));
  DataTriple p = as_probe(v1(1), e);
  CHECK(eval_pairwise(quad(2), S[0], p)[0] == doctest::Approx(0).scale(1));
  CHECK(eval_pairwise(quad(2), p, S[0])[0] == doctest::Approx(0).scale(1));
}

TEST_CASE("extenders refuse infeasible input") {
  Dataset S = make_dataset({triple(0, 0, 1), triple(3, -1.5, 1)});
  CHECK(code_of([&] { extend_wc_tight(S, v1(2), 1, 1); }) == ErrorCode::InputNotFeasible);
  CHECK(code_of([&] { extend_convex(S, v1(2)); }) == ErrorCode::InputNotFeasible);
  CHECK(code_of([&] { extend_convex(make_dataset({triple(0, 0, 1)}), Vec::Zero(2)); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("extend_convex property") {
  std::mt19937_64 rng(101);
  Family conv = make_family(Kind::Convex, {});
  for (int trial = 0; trial < 1000; ++trial) {
    int d = 1 + trial % 3, n = 1 + static_cast<int>(rng() % 8);
    gen::MaxAffine fn(rng, d);
    Dataset S = gen::sample(fn, rng, n, d);
    Vec x = gen::uniform_vec(rng, d, -2, 2);
    Extension e = extend_convex(S, x);
    REQUIRE(probe_min_residual(conv, S, as_probe(x, e)) >= -1e-9);
  }
}

TEST_CASE("extend_wc_tight property") {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> U(0.3, 2.5);
  for (int trial = 0; trial < 1000; ++trial) {
    int d = 1 + trial % 3, n = 1 + static_cast<int>(rng() % 8);
    double mu = U(rng), B = U(rng);
    gen::SinWc fn(rng, d, mu, B);
    Dataset S = gen::sample(fn, rng, n, d);
    Vec x = gen::uniform_vec(rng, d, -2, 2);
    Extension e = extend_wc_tight(S, x, mu, B);
    double m = probe_min_residual(wct(mu, B), S, as_probe(x, e));
    REQUIRE_MESSAGE(m >= -1e-9, "trial " << trial << " residual " << m);
    // the classical family is implied
    REQUIRE(probe_min_residual(wc(mu, B), S, as_probe(x, e)) >= -1e-9);
  }
}

TEST_CASE("extend_quadratic property and anchor independence") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> U(0.1, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    int d = 1 + trial % 3, n = 1 + static_cast<int>(rng() % 8);
    double mu = U(rng), M = U(rng);
    gen::Quadratic fn(rng, d, mu);
    Dataset S = gen::sample(fn, rng, n, d);
    Vec x = gen::uniform_vec(rng, d, -2, 2);
    Extension e0 = extend_quadratic(S, x, mu, M, 0);
    REQUIRE(probe_min_residual(quad(mu, M), S, as_probe(x, e0)) >= -1e-9);
    for (std::size_t a = 1; a < S.size(); ++a) {
      Extension ea = extend_quadratic(S, x, mu, M, a);
      REQUIRE(std::abs(ea.f - e0.f) <= 1e-9);
      REQUIRE((ea.g - e0.g).norm() <= 1e-9);
    }
  }
}

TEST_CASE("gap on the two-point weakly convex dataset") {
  Dataset S = make_dataset({triple(0, 0, 1), triple(3, -1.5, 1)});
  // the probe (2, 0, -1) meets every classical residual, so the set is extensible at x = 2
  DataTriple w = triple(2, 0, -1);
  CHECK(probe_min_residual(wc(), S, w) >= 0.0);
  ExtensionGap g = extension_gap(S, v1(2), wc());
  CHECK(g.method == GapMethod::ConicSolve);
  CHECK(g.tau_star <= 1e-6);
  ExtensionGap o = grid_oracle_gap(S, 2, wc());
  CHECK(o.tau_star <= 1e-6);
  CHECK(std::abs(o.tau_star - g.tau_star) <= 1e-3);

  CHECK(code_of([&] { extension_gap(S, v1(2), wct()); }) == ErrorCode::InputNotFeasible);
}

TEST_CASE("single point under the tight family is always extensible") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    double g0 = std::clamp(U(rng), -1.0, 1.0);
    Dataset S = make_dataset({triple(U(rng), U(rng), g0)});
    ExtensionGap g = extension_gap(S, v1(U(rng)), wct());
    CHECK(g.method == GapMethod::ClosedForm);
    CHECK(g.tau_star <= 1e-12);
  }
}

TEST_CASE("Lipschitz Hessian row is not extensible at 0.5") {
  Dataset S = make_dataset({triple(0, 0, 0, 0), triple(1, -1.0 / 6, 0, 0)});
  Family lh = make_family(Kind::LipschitzHessian, {{"M", 1}});
  ExtensionGap g = extension_gap(S, v1(0.5), lh);
  CHECK(g.tau_star > 1e-6);
  REQUIRE(g.witness_hess.has_value());
  ExtensionGap o = grid_oracle_gap(S, 0.5, lh);
  CHECK(o.tau_star > 0);
}

TEST_CASE("convex data is extensible according to the grid oracle") {
  std::mt19937_64 rng(505);
  Family conv = make_family(Kind::Convex, {});
  for (int trial = 0; trial < 10; ++trial) {
    gen::MaxAffine fn(rng, 1);
    Dataset S = gen::sample(fn, rng, 1 + trial % 4, 1);
    double x = std::uniform_real_distribution<double>(-2, 2)(rng);
    CHECK(grid_oracle_gap(S, x, conv).tau_star <= 1e-6);
    CHECK(extension_gap(S, v1(x), conv).tau_star <= 1e-12);
  }
}

TEST_CASE("witness reproduces tau") {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset S = gen::random_feasible_1d(wc(), rng, 2 + trial % 3);
    double x = std::uniform_real_distribution<double>(-3, 3)(rng);
    for (const ExtensionGap& g : {extension_gap(S, v1(x), wc()), grid_oracle_gap(S, x, wc())}) {
      DataTriple p{v1(x), g.witness_f, g.witness_g, {}};
      CHECK(std::abs(probe_tau(wc(), S, p) - g.tau_star) <= 1e-6);
    }
  }
}

TEST_CASE("appending a triple never lowers tau") {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset big = gen::random_feasible_1d(wc(), rng, 4);
    Dataset small = make_dataset({big[0], big[1], big[2]});
    Vec x = v1(std::uniform_real_distribution<double>(-3, 3)(rng));
    CHECK(extension_gap(big, x, wc()).tau_star >= extension_gap(small, x, wc()).tau_star - 1e-6);
  }
}

TEST_CASE("grid oracle agrees with the conic solve on random instances") {
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 100; ++trial) {
    Dataset S = gen::random_feasible_1d(wc(), rng, 1 + trial % 4);
    double x = std::uniform_real_distribution<double>(-3, 3)(rng);
    double a = extension_gap(S, v1(x), wc()).tau_star;
    double b = grid_oracle_gap(S, x, wc()).tau_star;
    CHECK_MESSAGE(std::abs(a - b) <= 1e-3, "trial " << trial << ": " << a << " vs " << b);
  }
}

TEST_CASE("tight feasibility is necessary for a nonpositive gap at random probes") {
  std::mt19937_64 rng(909);
  for (int trial = 0; trial < 10; ++trial) {
    gen::SinWc fn(rng, 1, 1, 1);
    Dataset S = gen::sample(fn, rng, 4, 1);
    for (int k = 0; k < 50; ++k) {
      Vec x = gen::uniform_vec(rng, 1, -3, 3);
      CHECK(extension_gap(S, x, wct()).tau_star <= 1e-8);
    }
  }
}
