#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace interp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteEntry,
  InconsistentDuplicate,
  UnknownKind,
  ParameterOutOfDomain,
  MissingHessian,
  UnsupportedDimension,
  InputNotFeasible,
  UnboundedWitness,
  SolverFailure,
  DatasetInfeasible,
  Extensible,
  BudgetExhausted,
  RowFailed,
  InaccurateSolution,
  ParseError,
};

const char* error_name(ErrorCode c);
std::string fmt_num(double v);  // %.6g

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct DataTriple {
  Vec x;
  double f = 0.0;
  Vec g;
  std::optional<double> hess;

  int dim() const { return static_cast<int>(x.size()); }
};

// 1-D convenience constructor
DataTriple triple(double x, double f, double g);
DataTriple triple(double x, double f, double g, double hess);

struct Dataset {
  std::vector<DataTriple> triples;
  int dim = 0;

  std::size_t size() const { return triples.size(); }
  const DataTriple& operator[](std::size_t i) const { return triples[i]; }
};

bool operator==(const DataTriple& a, const DataTriple& b);
bool operator==(const Dataset& a, const Dataset& b);

enum class Kind {
  Convex,
  SmoothConvexWeak,
  SmoothConvexTight,
  SmoothStronglyConvex,
  QuadraticClass,
  WeaklyConvexBounded,
  WeaklyConvexBoundedTight,
  GramLinearGeneral,
  ConsistForm,
  UniformlyConvex,
  HolderSmooth,
  SmoothPL,
  LipschitzHessian,
};

const char* kind_name(Kind k);
// accepts canonical names (case-insensitive) and short CLI aliases such as "wc-tight"
Kind parse_kind(const std::string& s);

struct Family {
  Kind kind = Kind::Convex;
  std::map<std::string, double> params;

  double operator[](const std::string& key) const;
  bool has(const std::string& key) const { return params.count(key) > 0; }
  std::string describe() const;
};

// Builds a validated family. Missing optional parameters are filled with
// their defaults; dependent Gram-linear coefficients are computed here.
Family make_family(Kind kind, std::map<std::string, double> params);
// every parameter name make_family accepts for this kind
std::vector<std::string> family_parameters(Kind kind);
Family family_from_spec(const nlohmann::json& spec);
// "kind=wc-tight mu=1 B=1" or comma separated
Family family_from_spec(const std::string& text);
nlohmann::json family_to_json(const Family& fam);

struct Budget {
  int evaluations = 5000;
  int starts = 8;
};

struct ProblemConfig {
  Family family;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
  Budget budget;
};

Dataset validate_dataset(const Dataset& raw);
Dataset make_dataset(std::vector<DataTriple> triples);

nlohmann::json dataset_to_json(const Dataset& S);
Dataset dataset_from_json(const nlohmann::json& j);
Vec vec_from_json(const nlohmann::json& j);
nlohmann::json vec_to_json(const Vec& v);

}  // namespace interp
