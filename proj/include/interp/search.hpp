#pragma once

#include "interp/extension.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace interp {

enum class Provenance { PaperTable, Found };

struct Counterexample {
  Dataset S;
  Vec x;
  double tau_star = 0.0;       // from extension_gap
  double tau_oracle = 0.0;     // from the grid oracle (d = 1), NaN otherwise
  Family family;
  Provenance provenance = Provenance::Found;
};

struct VerifyOptions {
  double tol = 1e-8;        // feasibility tolerance
  // tau must exceed this to certify. Unset: sqrt(tol). Residuals are quadratic
  // in the data, so S feasible only to tol can sit sqrt(tol) away from truly
  // feasible data and yield a spurious gap of that order.
  std::optional<double> threshold;
  GridOptions grid;
  double certify_threshold() const;
};

Counterexample verify_counterexample(const Dataset& S, const Vec& x, const Family& fam,
                                     const VerifyOptions& opt = {}, Provenance prov = Provenance::Found);

struct SearchConfig {
  std::uint64_t seed = 0;
  int budget = 5000;  // total inner-problem evaluations across all starts
  int starts = 8;
  double tol = 1e-8;
  double init_step = 0.5;
  int threads = 0;
  double target = std::numeric_limits<double>::infinity();  // stop a start once reached
  GridOptions search_grid{101, 2, 1e-3, {}, 1};  // cheap oracle used while climbing
};

struct SearchReport {
  std::optional<Counterexample> best;
  double best_tau = -std::numeric_limits<double>::infinity();
  Dataset best_S;
  Vec best_x;
  int iterations = 0;
  bool budget_exhausted = false;
  std::vector<std::pair<int, double>> trace;
};

SearchReport find_counterexample(const Family& fam, int N, int d, const SearchConfig& cfg = {});

enum class Table { Table1, Table3, Table4 };

struct TableParams {
  double mu = 1, B = 1, L = 1, M = 1;
  double uc_p = 3;
  double holder_alpha = 0.5;
  double holder_exponent = 3;  // exponent on ||x-y|| in the Holder row
  double t3_beta = 0;
  std::vector<double> t3_gammas{-1, 2, 0.3, 0.75};
  double t4_alpha = 1;
  double t4_gamma = 0;
  std::vector<double> t4_betas{-0.1, 0.2, 0.03};
};

struct TableRow {
  std::string id;
  Family family;
  Dataset S;
  Vec x;
};

struct RowResult {
  std::string id;
  Family family;
  Dataset S;
  Vec x;
  bool certified = false;
  double feasibility = 0.0;  // worst residual of S
  double tau_star = std::numeric_limits<double>::quiet_NaN();
  double tau_oracle = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
};

std::vector<TableRow> table_rows(Table which, const TableParams& params = {});
std::vector<RowResult> table_suite(Table which, const TableParams& params = {}, const VerifyOptions& opt = {});

nlohmann::json counterexample_to_json(const Counterexample& c);

}  // namespace interp
