#pragma once

#include "interp/constraints.hpp"
#include "interp/core.hpp"

#include <optional>
#include <utility>

namespace interp {

struct BallSpec {
  Vec center;
  double radius = 0.0;
};

Vec project_ball(const Vec& y, const BallSpec& ball);

struct Extension {
  double f = 0.0;
  Vec g;
};

Extension extend_convex(const Dataset& S, const Vec& x, double tol = 1e-8);
Extension extend_wc_tight(const Dataset& S, const Vec& x, double mu, double B, double tol = 1e-8);
Extension extend_quadratic(const Dataset& S, const Vec& x, double mu, double M, std::size_t anchor = 0,
                           double tol = 1e-8);

enum class GapMethod { ClosedForm, ConicSolve, GridOracle };
const char* method_name(GapMethod m);

struct ExtensionGap {
  double tau_star = 0.0;
  double witness_f = 0.0;
  Vec witness_g;
  std::optional<double> witness_hess;  // LipschitzHessian only
  GapMethod method = GapMethod::ClosedForm;
};

// (f, g) box searched by the conic and grid solvers; unset fields use the
// data-driven defaults
struct SearchBox {
  std::optional<std::pair<double, double>> f;
  std::optional<double> g_max;
  std::optional<double> h_max;
};

struct GridOptions {
  int resolution = 401;
  int refinements = 3;
  double final_step = 1e-4;
  SearchBox box;
  int threads = 0;  // 0: hardware concurrency
};

struct GapOptions {
  bool check_feasibility = true;
  double tol = 1e-8;
  GridOptions grid;
  int conic_iterations = 6000;
};

bool concave_in_probe(const Family& fam);
bool has_extender(const Family& fam);

// all residual components of p^{xx}, p^{xi}, p^{ix} for the appended probe
void probe_components(const Family& fam, const Dataset& S, const DataTriple& probe, std::vector<double>& out);
void probe_components(const PairEvaluator& ev, const Dataset& S, const DataTriple& probe, std::vector<double>& out);

ExtensionGap extension_gap(const Dataset& S, const Vec& x, const Family& fam, const GapOptions& opt = {});
ExtensionGap conic_gap(const Dataset& S, const Vec& x, const Family& fam, const GapOptions& opt = {});
ExtensionGap grid_oracle_gap(const Dataset& S, double x, const Family& fam, const GridOptions& opt = {},
                             double tol = 1e-8);

}  // namespace interp
