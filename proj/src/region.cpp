#include "interp/region.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace interp {

std::pair<double, double> feasible_f_range(const Family& fam, const DataTriple& anchor, double x, double g,
                                           const RegionOptions& opt) {
  if (anchor.dim() != 1) throw Error(ErrorCode::UnsupportedDimension, "region export needs d = 1");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  DataTriple probe = triple(x, 0.0, g);
  if (fam.kind == Kind::LipschitzHessian) probe.hess = 0.0;
  PairEvaluator ev(fam);
  if (ev(anchor, anchor).min() < -opt.tol) return {nan, nan};

  // every residual is affine in the probe's f, so the feasible set is an
  // interval cut out by one half-line per component
  auto comps = [&](double f, std::vector<double>& out) {
    probe.f = f;
    out.clear();
    for (const Residual& r : {ev(probe, probe), ev(anchor, probe), ev(probe, anchor)})
      for (Eigen::Index k = 0; k < r.size(); ++k) out.push_back(r[k]);
  };
  std::vector<double> r0, r1;
  comps(0.0, r0);
  comps(1.0, r1);
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < r0.size(); ++k) {
    double slope = r1[k] - r0[k], c = r0[k] + opt.tol;
    if (std::abs(slope) < 1e-12) {
      if (c < 0) return {nan, nan};
    } else if (slope > 0) {
      lo = std::max(lo, -c / slope);
    } else {
      hi = std::min(hi, -c / slope);
    }
  }
  if (lo > hi) return {nan, nan};
  return {lo, hi};
}

std::vector<RegionRow> run_region(const DataTriple& anchor, double x, const Family& a, const Family& b,
                                  const RegionOptions& opt) {
  if (opt.g_count < 1) throw Error(ErrorCode::ParameterOutOfDomain, "g grid needs at least one point");
  std::vector<RegionRow> rows;
  for (int k = 0; k < opt.g_count; ++k) {
    double g = opt.g_count == 1 ? opt.g_min : opt.g_min + (opt.g_max - opt.g_min) * k / (opt.g_count - 1);
    auto [amin, amax] = feasible_f_range(a, anchor, x, g, opt);
    auto [bmin, bmax] = feasible_f_range(b, anchor, x, g, opt);
    rows.push_back({g, amin, amax, bmin, bmax});
  }
  return rows;
}

std::string region_csv_header() { return "g,f_min_a,f_max_a,f_min_b,f_max_b"; }

std::string region_csv_row(const RegionRow& r) {
  std::ostringstream os;
  os.precision(12);
  os << r.g << ',' << r.f_min_a << ',' << r.f_max_a << ',' << r.f_min_b << ',' << r.f_max_b;
  return os.str();
}

}  // namespace interp
