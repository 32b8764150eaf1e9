#include "interp/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>

namespace interp {

Mat LowRankSym::dense() const {
  if (U.cols() == 0) return Mat::Zero(U.rows(), U.rows());
  return U * S * U.transpose();
}

double LowRankSym::inner(const Mat& X) const {
  if (U.cols() == 0) return 0.0;
  return (S.cwiseProduct(U.transpose() * X * U)).sum();
}

int SymBuilder::column(const Vec& u) {
  for (std::size_t i = 0; i < cols_.size(); ++i)
    if (cols_[i] == u) return static_cast<int>(i);
  cols_.push_back(u);
  return static_cast<int>(cols_.size() - 1);
}

SymBuilder& SymBuilder::sym(double coef, const Vec& u, const Vec& v) {
  if (u.size() != n_ || v.size() != n_) throw Error(ErrorCode::DimensionMismatch, "selector of wrong length");
  if (coef == 0.0 || u.isZero(0) || v.isZero(0)) return *this;
  int a = column(u), b = column(v);
  entries_.emplace_back(a, b, 0.5 * coef);
  entries_.emplace_back(b, a, 0.5 * coef);
  return *this;
}

LowRankSym SymBuilder::build() const {
  LowRankSym out;
  const int r = static_cast<int>(cols_.size());
  out.U = Mat::Zero(n_, r);
  for (int i = 0; i < r; ++i) out.U.col(i) = cols_[i];
  out.S = Mat::Zero(r, r);
  for (auto [a, b, c] : entries_) out.S(a, b) += c;
  return out;
}

const char* status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::Infeasible: return "Infeasible";
    case SolverStatus::Unbounded: return "Unbounded";
    case SolverStatus::Inaccurate: return "Inaccurate";
    case SolverStatus::Failed: return "Failed";
  }
  return "?";
}

void check_instance(const SdpInstance& inst) {
  auto check = [&](const LowRankSym& A, const Vec& F, const std::string& what) {
    if (A.U.rows() != inst.gram_dim && A.U.cols() > 0)
      throw Error(ErrorCode::DimensionMismatch, what + ": matrix has wrong size");
    if (A.S.rows() != A.U.cols() || A.S.cols() != A.U.cols())
      throw Error(ErrorCode::DimensionMismatch, what + ": inconsistent factor");
    if (!A.S.isApprox(A.S.transpose(), 1e-14) && A.S.size() > 0)
      throw Error(ErrorCode::DimensionMismatch, what + ": not symmetric");
    if (F.size() != inst.n_fvals) throw Error(ErrorCode::DimensionMismatch, what + ": F coefficients of wrong size");
  };
  check(inst.objective_G, inst.objective_F, "objective");
  for (std::size_t k = 0; k < inst.constraints.size(); ++k)
    check(inst.constraints[k].G, inst.constraints[k].F, "constraint " + std::to_string(k));
}

void dump_sdp(const SdpInstance& inst, std::ostream& os) {
  os << "%%SDP maximize <C,G> + c'F, G psd, F >= 0\n";
  os << "gram_dim " << inst.gram_dim << "\nn_fvals " << inst.n_fvals << "\nconstraints "
     << inst.constraints.size() << "\n";
  os << std::setprecision(17);
  auto body = [&](const LowRankSym& A, const Vec& F) {
    if (A.rank() > 0) {
      Mat D = A.dense();
      for (int i = 0; i < D.rows(); ++i)
        for (int j = i; j < D.cols(); ++j)
          if (D(i, j) != 0.0) os << "G " << i + 1 << ' ' << j + 1 << ' ' << D(i, j) << '\n';
    }
    for (Eigen::Index i = 0; i < F.size(); ++i)
      if (F[i] != 0.0) os << "F " << i + 1 << ' ' << F[i] << '\n';
  };
  os << "objective\n";
  body(inst.objective_G, inst.objective_F);
  for (std::size_t k = 0; k < inst.constraints.size(); ++k) {
    const auto& c = inst.constraints[k];
    const char* s = c.sense == Sense::LE ? "<=" : c.sense == Sense::GE ? ">=" : "=";
    os << "constraint " << k + 1 << ' ' << s << ' ' << c.rhs << ' ' << (c.label.empty() ? "-" : c.label) << '\n';
    body(c.G, c.F);
  }
}

// ---------------------------------------------------------------------------
// interior point

namespace {

struct StandardForm {
  int n = 0, m = 0, p = 0;
  Mat V;                      // n x R, all factors side by side
  std::vector<int> off, rk;   // column offset / width of each constraint in V
  std::vector<Mat> S;         // small symmetric cores
  Mat Al;                     // m x p linear block
  Vec b;
  Mat C;                      // n x n
  Vec c;                      // p

  Vec apply(const Mat& W, const Vec& x) const {
    Vec out = Al * x;
    Mat WV = W * V;
    for (int k = 0; k < m; ++k) {
      if (rk[k] == 0) continue;
      Mat Q = V.middleCols(off[k], rk[k]).transpose() * WV.middleCols(off[k], rk[k]);
      out[k] += S[k].cwiseProduct(Q).sum();
    }
    return out;
  }

  Mat adjoint(const Vec& y) const {
    Mat VS(n, V.cols());
    for (int k = 0; k < m; ++k)
      if (rk[k] > 0) VS.middleCols(off[k], rk[k]) = V.middleCols(off[k], rk[k]) * (y[k] * S[k]);
    if (V.cols() == 0) return Mat::Zero(n, n);
    return VS * V.transpose();
  }
};

StandardForm standardize(const SdpInstance& inst) {
  StandardForm sf;
  sf.n = inst.gram_dim;
  sf.m = static_cast<int>(inst.constraints.size());
  int nineq = 0;
  for (const auto& c : inst.constraints)
    if (c.sense != Sense::EQ) ++nineq;
  sf.p = inst.n_fvals + nineq;
  int R = 0;
  for (const auto& c : inst.constraints) R += c.G.rank();
  sf.V = Mat::Zero(sf.n, R);
  sf.Al = Mat::Zero(sf.m, sf.p);
  sf.b = Vec(sf.m);
  int col = 0, slack = inst.n_fvals;
  for (int k = 0; k < sf.m; ++k) {
    const auto& c = inst.constraints[k];
    sf.off.push_back(col);
    sf.rk.push_back(c.G.rank());
    if (c.G.rank() > 0) sf.V.middleCols(col, c.G.rank()) = c.G.U;
    sf.S.push_back(c.G.S);
    col += c.G.rank();
    sf.Al.row(k).head(inst.n_fvals) = c.F.transpose();
    if (c.sense == Sense::LE) sf.Al(k, slack++) = 1.0;
    if (c.sense == Sense::GE) sf.Al(k, slack++) = -1.0;
    sf.b[k] = c.rhs;
  }
  sf.C = -inst.objective_G.dense();
  sf.c = Vec::Zero(sf.p);
  sf.c.head(inst.n_fvals) = -inst.objective_F;
  return sf;
}

// largest step keeping X + a dX PSD (infinity if unbounded)
double psd_step(const Mat& X, const Mat& dX) {
  Eigen::LLT<Mat> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  Mat T = llt.matrixL().solve(dX);
  Mat M = llt.matrixL().solve(T.transpose());
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double lp_step(const Vec& x, const Vec& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0) a = std::min(a, -x[i] / dx[i]);
  return a;
}

double fro_lowrank(const Mat& U, const Mat& S) {
  if (U.cols() == 0) return 0.0;
  Mat K = S * (U.transpose() * U);
  return std::sqrt(std::max(0.0, (K * K).trace()));
}

}  // namespace

SdpSolution InteriorPointBackend::solve(const SdpInstance& inst) {
  check_instance(inst);
  const StandardForm sf = standardize(inst);
  const int n = sf.n, m = sf.m, p = sf.p;
  const double nu = n + p;

  double normA = 0, xi = std::max(10.0, std::sqrt(double(n))), eta = xi;
  for (int k = 0; k < m; ++k) {
    double a = std::hypot(fro_lowrank(sf.V.middleCols(sf.off[k], sf.rk[k]), sf.S[k]), sf.Al.row(k).norm());
    normA = std::max(normA, a);
    xi = std::max(xi, n * (1 + std::abs(sf.b[k])) / (1 + a));
  }
  const double normC = std::hypot(sf.C.norm(), sf.c.norm());
  eta = std::max({eta, normA, normC});

  Mat X = xi * Mat::Identity(n, n), Z = eta * Mat::Identity(n, n);
  Vec x = Vec::Constant(p, xi), z = Vec::Constant(p, eta), y = Vec::Zero(m);

  SdpSolution sol;
  const double normb = sf.b.norm();
  double relp = 0, reld = 0, relgap = 0;
  bool converged = false;
  int small_steps = 0, worse = 0, stalled = 0;

  // best iterate seen so far; late iterations can lose feasibility to rounding
  struct Snapshot {
    Mat X;
    Vec x, y;
    double relp, reld, relgap, merit = std::numeric_limits<double>::infinity();
  } best;

  for (int it = 0; it < settings_.max_iter; ++it) {
    sol.iterations = it;
    Vec rp = sf.b - sf.apply(X, x);
    Mat Rd = sf.C - sf.adjoint(y) - Z;
    Vec rd = sf.c - sf.Al.transpose() * y - z;
    double pobj = (sf.C.cwiseProduct(X)).sum() + sf.c.dot(x);
    double dobj = sf.b.dot(y);
    relp = rp.norm() / (1 + normb);
    reld = std::hypot(Rd.norm(), rd.norm()) / (1 + normC);
    relgap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
    if (settings_.verbose)
      std::cerr << "it " << it << " pobj " << pobj << " dobj " << dobj << " relp " << relp << " reld " << reld
                << " gap " << relgap << '\n';
    const double merit = std::max({relp, reld, relgap});
    if (merit < best.merit) {
      best = {X, x, y, relp, reld, relgap, merit};
      worse = 0;
      stalled = 0;
    } else if (merit > 0.5 * best.merit && ++stalled >= 8) {
      break;
    } else if (merit > 10 * best.merit && ++worse >= 3) {
      break;
    }
    if (merit < settings_.tol) {
      converged = true;
      break;
    }
    if (X.trace() + x.sum() > 1e12 || y.norm() > 1e12) break;

    const double mu = ((X.cwiseProduct(Z)).sum() + x.dot(z)) / nu;
    Eigen::LLT<Mat> zl(Z);
    if (zl.info() != Eigen::Success) break;
    Mat Zi = zl.solve(Mat::Identity(n, n));
    Zi = 0.5 * (Zi + Zi.transpose());

    // Schur complement
    // both Gram products through Cholesky factors so they stay PSD in floating point
    Eigen::LLT<Mat> xl(X);
    if (xl.info() != Eigen::Success) break;
    Mat Px = xl.matrixU() * sf.V;
    Mat Wz = zl.matrixL().solve(sf.V);
    Mat Q1 = Px.transpose() * Px, Q2 = Wz.transpose() * Wz;
    Mat SQ = Q1;
    for (int k = 0; k < m; ++k)
      if (sf.rk[k] > 0) SQ.middleRows(sf.off[k], sf.rk[k]) = sf.S[k] * Q1.middleRows(sf.off[k], sf.rk[k]);
    for (int k = 0; k < m; ++k)
      if (sf.rk[k] > 0) SQ.middleCols(sf.off[k], sf.rk[k]) = SQ.middleCols(sf.off[k], sf.rk[k]) * sf.S[k];
    Vec xz = x.cwiseQuotient(z);
    Mat Msch = sf.Al * xz.asDiagonal() * sf.Al.transpose();
    for (int k = 0; k < m; ++k) {
      if (sf.rk[k] == 0) continue;
      for (int l = k; l < m; ++l) {
        if (sf.rk[l] == 0) continue;
        double v = SQ.block(sf.off[k], sf.off[l], sf.rk[k], sf.rk[l])
                       .cwiseProduct(Q2.block(sf.off[k], sf.off[l], sf.rk[k], sf.rk[l]))
                       .sum();
        Msch(k, l) += v;
        if (l != k) Msch(l, k) += v;
      }
    }
    // Jacobi equilibration: the diagonal spans many orders of magnitude near the end
    const Vec dsc = Msch.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Mat Ms = dsc.asDiagonal() * Msch * dsc.asDiagonal();
    Eigen::LLT<Mat> ml(Ms);
    Eigen::LDLT<Mat> mldl;
    const bool use_ldlt = ml.info() != Eigen::Success;
    if (use_ldlt) mldl.compute(Ms + 1e-13 * Mat::Identity(m, m));
    auto schur = [&](const Vec& r) -> Vec {
      auto base = [&](const Vec& q) -> Vec {
        Vec t = dsc.cwiseProduct(q);
        return dsc.cwiseProduct(use_ldlt ? Vec(mldl.solve(t)) : Vec(ml.solve(t)));
      };
      Vec v = base(r);
      for (int ref = 0; ref < 2; ++ref) v += base(r - Msch * v);
      return v;
    };

    struct Dir {
      Mat dX, dZ;
      Vec dx, dz, dy;
    };
    auto direction = [&](double smu, const Mat* corr, const Vec* corrl) {
      Mat G0 = smu * Zi - X - X * Rd * Zi;
      if (corr) G0 -= (*corr) * Zi;
      Vec g0 = smu * z.cwiseInverse() - x - x.cwiseProduct(rd).cwiseQuotient(z);
      if (corrl) g0 -= corrl->cwiseQuotient(z);
      Mat G0s = 0.5 * (G0 + G0.transpose());
      Dir d;
      d.dy = schur(rp - sf.apply(G0s, g0));
      Mat At = sf.adjoint(d.dy);
      d.dZ = Rd - At;
      d.dz = rd - sf.Al.transpose() * d.dy;
      Mat dX = G0 + X * At * Zi;
      d.dX = 0.5 * (dX + dX.transpose());
      d.dx = g0 + xz.cwiseProduct(sf.Al.transpose() * d.dy);
      // refine against the operator itself; the Schur matrix loses accuracy near the end
      for (int ref = 0; ref < 3; ++ref) {
        Vec e = rp - sf.apply(d.dX, d.dx);
        if (e.norm() <= 1e-14 * (1 + rp.norm())) break;
        Vec ey = schur(e);
        Mat Ae = sf.adjoint(ey);
        Mat cX = X * Ae * Zi;
        d.dy += ey;
        d.dZ -= Ae;
        d.dz -= sf.Al.transpose() * ey;
        d.dX += 0.5 * (cX + cX.transpose());
        d.dx += xz.cwiseProduct(sf.Al.transpose() * ey);
      }
      return d;
    };
    auto steps = [&](const Dir& d) {
      double ap = std::min(psd_step(X, d.dX), lp_step(x, d.dx));
      double ad = std::min(psd_step(Z, d.dZ), lp_step(z, d.dz));
      return std::pair{ap, ad};
    };

    Dir pred = direction(0.0, nullptr, nullptr);
    auto [ap0, ad0] = steps(pred);
    ap0 = std::min(1.0, ap0);
    ad0 = std::min(1.0, ad0);
    double mu_aff = (((X + ap0 * pred.dX).cwiseProduct(Z + ad0 * pred.dZ)).sum() +
                     (x + ap0 * pred.dx).dot(z + ad0 * pred.dz)) /
                    nu;
    double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3), 0.0, 1.0);
    Mat corr = pred.dX * pred.dZ;
    Vec corrl = pred.dx.cwiseProduct(pred.dz);
    Dir d = direction(sigma * mu, &corr, &corrl);
    auto [ap, ad] = steps(d);
    const double gamma = 0.95;
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    X += ap * d.dX;
    x += ap * d.dx;
    y += ad * d.dy;
    Z += ad * d.dZ;
    z += ad * d.dz;
    X = 0.5 * (X + X.transpose()).eval();
    Z = 0.5 * (Z + Z.transpose()).eval();

    small_steps = (ap < 1e-8 && ad < 1e-8) ? small_steps + 1 : 0;
    if (small_steps >= 3) break;
  }

  const bool diverged = y.norm() > 1e12 || X.trace() + x.sum() > 1e12;
  if (!diverged && best.merit < std::numeric_limits<double>::infinity()) {
    X = best.X;
    x = best.x;
    y = best.y;
    relp = best.relp;
    reld = best.reld;
    relgap = best.relgap;
  }
  sol.G = X;
  sol.F = x.head(inst.n_fvals);
  sol.dual = y;
  sol.objective = -((sf.C.cwiseProduct(X)).sum() + sf.c.dot(x));
  sol.primal_residual = relp;
  sol.dual_residual = reld;
  sol.gap = relgap;
  if (converged)
    sol.status = SolverStatus::Optimal;
  else if (std::max({relp, reld, relgap}) < settings_.inaccurate_tol)
    sol.status = SolverStatus::Inaccurate;
  else if (y.norm() > 1e12)
    sol.status = SolverStatus::Infeasible;
  else if (X.trace() + x.sum() > 1e12)
    sol.status = SolverStatus::Unbounded;
  else
    sol.status = SolverStatus::Failed;
  return sol;
}

}  // namespace interp
