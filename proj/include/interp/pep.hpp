#pragma once

#include "interp/sdp.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace interp {

enum class PepVariant { Classical_p, Tight_p };

// How rho enters the Moreau-envelope measure.
//  PenaltyWeight: y = x - g^y/rho, initial f^y_0 + (rho/2)||x_0-y_0||^2 <= R^2,
//                 measure mean rho^2 ||x_i - y_i||^2 (= mean ||g^y_i||^2)
//  InverseWeight: y = x - g^y/rho, initial f^y_0 + ||x_0-y_0||^2/(2 rho) <= R^2,
//                 measure mean ||x_i - y_i||^2 / rho^2
enum class MoreauConvention { PenaltyWeight, InverseWeight };

struct PepSpec {
  int N = 1;
  double h = 0.1;
  double mu = 1, B = 1, rho = 2, R2 = 0.125;
  PepVariant variant = PepVariant::Tight_p;
  MoreauConvention convention = MoreauConvention::PenaltyWeight;
  // Classical_p only: emit the tight construction with each C-selector set
  // to the target point instead of the direct encoding
  bool pin_c_selectors = false;
  // Nothing ties x_0 to x*, so the optimal face is unbounded along a joint
  // translation of the iterates; interior points drift off along it. This ball
  // keeps them bounded. It is inactive at the reported optimum (its
  // multiplier is checked after solving). Unset means 100 max(1, (B/mu)^2, R2/mu);
  // infinity disables it.
  std::optional<double> anchor_radius2;
};

void validate(const PepSpec& spec);

// label 0..N: x_i, N+1..2N+1: y_i, 2N+2: x*
struct WcLayout {
  int N = 0;
  int gram_dim = 0;
  int labels() const { return 2 * N + 3; }
  std::map<std::pair<int, int>, int> c_index;  // ordered pair of labels -> column of P
  std::string label_name(int a) const;
};

WcLayout wc_layout(const PepSpec& spec);
SdpInstance build_wc_pep(const PepSpec& spec);

enum class GdVariant { Weak_eq1, Tight_eq2 };

struct GdSpec {
  int N = 1;
  double L = 1, R2 = 1;
  double alpha = -1;  // step; <= 0 means 1/L
  GdVariant variant = GdVariant::Tight_eq2;
};

SdpInstance build_gd_pep(const GdSpec& spec);

// configuration reproducing the 1/6 versus 1/4 comparison
GdSpec gd_calibration_config(GdVariant v);

struct PepResult {
  double bound = 0.0;
  SolverStatus status = SolverStatus::Failed;
  Mat gram;
  Vec fvals;
  Vec dual;
  Mat recovered_points;  // rows are coordinates; column j is P e_j
  double primal_residual = 0.0, dual_residual = 0.0, gap = 0.0;
};

PepResult solve(const SdpInstance& inst, ConicBackend& backend);
PepResult solve(const SdpInstance& inst);

// dataset {x_i} u {y_i} u {x*} read off a solved weakly convex PEP
Dataset wc_pep_dataset(const PepSpec& spec, const PepResult& res);

struct Baseline {
  double h;
  double bound;
};
Baseline baseline_classical(int N, double mu, double B, double R);
Baseline baseline_prior_pep(int N, double mu, double B, double R);

enum class StepRule { Fixed, Classical, PriorPep };

struct SweepRow {
  int N = 0;
  double h = 0;
  double bound_tight = 0, bound_classical = 0;
  SolverStatus status_tight = SolverStatus::Failed, status_classical = SolverStatus::Failed;
  double baseline1 = 0, baseline2 = 0;
};

// one row per N (axis "N", step given by rule) or per h (axis "h", N fixed)
std::vector<SweepRow> sweep_N(const PepSpec& tmpl, const std::vector<int>& Ns, StepRule rule);
std::vector<SweepRow> sweep_h(const PepSpec& tmpl, const std::vector<double>& hs);
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& r);

}  // namespace interp
