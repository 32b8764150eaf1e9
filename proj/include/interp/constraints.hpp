#pragma once

#include "interp/core.hpp"

#include <array>

namespace interp {

// Signed residual components; the pair satisfies the family iff all are >= 0.
struct Residual {
  std::array<double, 4> v{};
  int n = 0;

  double operator[](int k) const { return v[k]; }
  int size() const { return n; }
  double min() const;
  int argmin() const;
};

int residual_length(const Family& fam);

Residual eval_pairwise(const Family& fam, const DataTriple& i, const DataTriple& j);

// eval_pairwise with the family parameters unpacked once; 1-D pairs are
// evaluated on fixed-size vectors, without allocating
class PairEvaluator {
 public:
  explicit PairEvaluator(const Family& fam);
  Residual operator()(const DataTriple& i, const DataTriple& j) const;

 private:
  template <class V>
  Residual eval(const V& xi, double fi, const V& gi, const std::optional<double>& hi, const V& xj, double fj,
                const V& gj, const std::optional<double>& hj, int d) const;

  Kind kind_;
  double mu_, L_, B_, M_, alpha_, beta_, gamma_, p_, fstar_;
  std::array<double, 10> gl_{};  // Gram-linear B..K
};

struct WorstEntry {
  std::size_t i = 0, j = 0;
  int component = 0;
  double value = 0.0;
};

struct Satisfaction {
  bool ok = true;
  WorstEntry worst;
};

Satisfaction satisfies(const Family& fam, const Dataset& S, double tol = 1e-8);

// min over i of min(p^{xi}, p^{ix}) and p^{xx}, i.e. minus the largest violation
// when (x, f, g) is appended to S
double probe_min_residual(const Family& fam, const Dataset& S, const DataTriple& probe);

}  // namespace interp
