#pragma once

#include "interp/constraints.hpp"

#include <string>
#include <utility>
#include <vector>

namespace interp {

struct RegionOptions {
  double g_min = -3, g_max = 3;
  int g_count = 61;
  double tol = 1e-12;
};

struct RegionRow {
  double g;
  double f_min_a, f_max_a, f_min_b, f_max_b;
};

// feasible range of f for {anchor, (x, f, g)}; NaN pair when empty
std::pair<double, double> feasible_f_range(const Family& fam, const DataTriple& anchor, double x, double g,
                                           const RegionOptions& opt = {});

std::vector<RegionRow> run_region(const DataTriple& anchor, double x, const Family& a, const Family& b,
                                  const RegionOptions& opt = {});

std::string region_csv_header();
std::string region_csv_row(const RegionRow& r);

}  // namespace interp
