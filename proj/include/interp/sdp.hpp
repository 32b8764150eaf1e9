#pragma once

#include "interp/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace interp {

// Symmetric matrix kept as U S U' with few columns; PEP constraint matrices
// are sums of a handful of outer products of selector vectors.
struct LowRankSym {
  Mat U;
  Mat S;

  int dim() const { return static_cast<int>(U.rows()); }
  int rank() const { return static_cast<int>(U.cols()); }
  Mat dense() const;
  double inner(const Mat& X) const;  // <A, X> for symmetric X
};

class SymBuilder {
 public:
  explicit SymBuilder(int n) : n_(n) {}
  // adds coef * (u v' + v u') / 2
  SymBuilder& sym(double coef, const Vec& u, const Vec& v);
  // adds coef * u u'
  SymBuilder& outer(double coef, const Vec& u) { return sym(coef, u, u); }
  LowRankSym build() const;

 private:
  int column(const Vec& u);
  int n_;
  std::vector<Vec> cols_;
  std::vector<std::tuple<int, int, double>> entries_;
};

enum class Sense { LE, GE, EQ };

struct SdpConstraint {
  LowRankSym G;
  Vec F;
  double rhs = 0.0;
  Sense sense = Sense::LE;
  std::string label;
};

// maximize <C_G, G> + c_F' F  subject to the constraints, G PSD, F >= 0
struct SdpInstance {
  int gram_dim = 0;
  int n_fvals = 0;
  LowRankSym objective_G;
  Vec objective_F;
  std::vector<SdpConstraint> constraints;
};

enum class SolverStatus { Optimal, Infeasible, Unbounded, Inaccurate, Failed };
const char* status_name(SolverStatus s);

struct SdpSolution {
  SolverStatus status = SolverStatus::Failed;
  double objective = 0.0;
  Mat G;
  Vec F;
  Vec dual;  // one multiplier per constraint
  double primal_residual = 0.0, dual_residual = 0.0, gap = 0.0;
  int iterations = 0;
};

struct SolverSettings {
  double tol = 1e-8;
  double inaccurate_tol = 1e-5;
  int max_iter = 150;
  bool verbose = false;
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual bool supports_psd() const = 0;
  virtual bool supports_nonneg() const = 0;
  virtual SdpSolution solve(const SdpInstance& inst) = 0;
};

// Primal-dual path following with the HKM direction and Mehrotra correction;
// one PSD block (G) and one nonnegative block (F and slacks).
class InteriorPointBackend : public ConicBackend {
 public:
  explicit InteriorPointBackend(SolverSettings s = {}) : settings_(s) {}
  bool supports_psd() const override { return true; }
  bool supports_nonneg() const override { return true; }
  SdpSolution solve(const SdpInstance& inst) override;

 private:
  SolverSettings settings_;
};

void check_instance(const SdpInstance& inst);
void dump_sdp(const SdpInstance& inst, std::ostream& os);

}  // namespace interp
