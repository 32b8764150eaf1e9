#include "interp/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace interp {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::InconsistentDuplicate: return "InconsistentDuplicate";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::ParameterOutOfDomain: return "ParameterOutOfDomain";
    case ErrorCode::MissingHessian: return "MissingHessian";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::InputNotFeasible: return "InputNotFeasible";
    case ErrorCode::UnboundedWitness: return "UnboundedWitness";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::DatasetInfeasible: return "DatasetInfeasible";
    case ErrorCode::Extensible: return "Extensible";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::RowFailed: return "RowFailed";
    case ErrorCode::InaccurateSolution: return "InaccurateSolution";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

DataTriple triple(double x, double f, double g) {
  DataTriple t;
  t.x = Vec::Constant(1, x);
  t.f = f;
  t.g = Vec::Constant(1, g);
  return t;
}

DataTriple triple(double x, double f, double g, double hess) {
  DataTriple t = triple(x, f, g);
  t.hess = hess;
  return t;
}

bool operator==(const DataTriple& a, const DataTriple& b) {
  return a.x.size() == b.x.size() && a.g.size() == b.g.size() && a.x == b.x && a.f == b.f &&
         a.g == b.g && a.hess == b.hess;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.dim == b.dim && a.triples == b.triples;
}

// ---------------------------------------------------------------------------
// families

namespace {

struct KindInfo {
  Kind kind;
  const char* name;
  std::vector<const char*> aliases;
};

const std::vector<KindInfo>& kind_table() {
  static const std::vector<KindInfo> t = {
      {Kind::Convex, "Convex", {"convex"}},
      {Kind::SmoothConvexWeak, "SmoothConvexWeak", {"smooth-convex-weak", "eq1"}},
      {Kind::SmoothConvexTight, "SmoothConvexTight", {"smooth-convex", "smooth-convex-tight", "eq2"}},
      {Kind::SmoothStronglyConvex, "SmoothStronglyConvex", {"ssc", "smooth-strongly-convex"}},
      {Kind::QuadraticClass, "QuadraticClass", {"quadratic"}},
      {Kind::WeaklyConvexBounded, "WeaklyConvexBounded", {"wc"}},
      {Kind::WeaklyConvexBoundedTight, "WeaklyConvexBoundedTight", {"wc-tight"}},
      {Kind::GramLinearGeneral, "GramLinearGeneral", {"gram-linear"}},
      {Kind::ConsistForm, "ConsistForm", {"consist"}},
      {Kind::UniformlyConvex, "UniformlyConvex", {"uc", "uniformly-convex"}},
      {Kind::HolderSmooth, "HolderSmooth", {"holder"}},
      {Kind::SmoothPL, "SmoothPL", {"pl"}},
      {Kind::LipschitzHessian, "LipschitzHessian", {"lh", "lipschitz-hessian"}},
  };
  return t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct ParamRule {
  std::vector<std::string> required;
  std::map<std::string, double> defaults;
};

ParamRule rules(Kind k) {
  switch (k) {
    case Kind::Convex: return {};
    case Kind::SmoothConvexWeak:
    case Kind::SmoothConvexTight: return {{"L"}, {}};
    case Kind::SmoothStronglyConvex: return {{"mu", "L"}, {}};
    case Kind::QuadraticClass: return {{"mu", "M"}, {}};
    case Kind::WeaklyConvexBounded:
    case Kind::WeaklyConvexBoundedTight: return {{"mu", "B"}, {}};
    case Kind::GramLinearGeneral: return {{"B", "C", "E", "F", "H", "I", "J"}, {}};
    case Kind::ConsistForm: return {{"alpha", "beta", "gamma"}, {}};
    case Kind::UniformlyConvex: return {{"mu", "p"}, {}};
    // p is the exponent on ||x - y||; when absent it is alpha + 1
    case Kind::HolderSmooth: return {{"L", "alpha"}, {}};
    case Kind::SmoothPL: return {{"L", "mu"}, {{"fstar", 0.0}}};
    case Kind::LipschitzHessian: return {{"M"}, {}};
  }
  return {};
}

[[noreturn]] void out_of_domain(Kind k, const std::string& why) {
  throw Error(ErrorCode::ParameterOutOfDomain, std::string(kind_name(k)) + ": " + why);
}

}  // namespace

const char* kind_name(Kind k) {
  for (const auto& e : kind_table())
    if (e.kind == k) return e.name;
  return "?";
}

Kind parse_kind(const std::string& s) {
  const std::string ls = lower(s);
  for (const auto& e : kind_table()) {
    if (lower(e.name) == ls) return e.kind;
    for (const char* a : e.aliases)
      if (ls == a) return e.kind;
  }
  throw Error(ErrorCode::UnknownKind, "'" + s + "'");
}

double Family::operator[](const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw Error(ErrorCode::ParameterOutOfDomain, "missing parameter " + key);
  return it->second;
}

std::string Family::describe() const {
  std::ostringstream os;
  os << kind_name(kind);
  for (const auto& [k, v] : params) os << ' ' << k << '=' << v;
  return os.str();
}

std::vector<std::string> family_parameters(Kind kind) {
  ParamRule r = rules(kind);
  std::set<std::string> allowed(r.required.begin(), r.required.end());
  for (const auto& [k, v] : r.defaults) allowed.insert(k);
  if (kind == Kind::HolderSmooth) allowed.insert("p");
  if (kind == Kind::GramLinearGeneral)
    for (const char* dep : {"D", "G", "K"}) allowed.insert(dep);
  return {allowed.begin(), allowed.end()};
}

Family make_family(Kind kind, std::map<std::string, double> params) {
  ParamRule r = rules(kind);
  const auto keys = family_parameters(kind);
  std::set<std::string> allowed(keys.begin(), keys.end());

  for (const auto& [k, v] : params) {
    if (!allowed.count(k)) out_of_domain(kind, "unexpected parameter '" + k + "'");
    if (!std::isfinite(v)) out_of_domain(kind, "parameter '" + k + "' is not finite");
  }
  for (const auto& k : r.required)
    if (!params.count(k)) out_of_domain(kind, "missing parameter '" + k + "'");
  for (const auto& [k, v] : r.defaults) params.try_emplace(k, v);

  auto P = [&](const char* k) { return params.at(k); };
  switch (kind) {
    case Kind::SmoothConvexWeak:
    case Kind::SmoothConvexTight:
      if (!(P("L") > 0)) out_of_domain(kind, "L > 0 required");
      break;
    case Kind::SmoothStronglyConvex:
      if (!(P("mu") < P("L"))) out_of_domain(kind, "mu < L required");
      if (!(P("L") > 0)) out_of_domain(kind, "L > 0 required");
      break;
    case Kind::QuadraticClass:
      if (!(P("M") > 0)) out_of_domain(kind, "M > 0 required");
      break;
    case Kind::WeaklyConvexBounded:
    case Kind::WeaklyConvexBoundedTight:
      if (!(P("mu") >= 0)) out_of_domain(kind, "mu >= 0 required");
      if (!(P("B") >= 0)) out_of_domain(kind, "B >= 0 required");
      break;
    case Kind::GramLinearGeneral: {
      // dependent coefficients make any single point satisfy the constraint
      double D = -(P("B") + P("C"));
      double G = -(P("E") + P("F"));
      double K = -(P("H") + P("I") + P("J"));
      for (auto [name, val] : {std::pair{"D", D}, std::pair{"G", G}, std::pair{"K", K}}) {
        auto it = params.find(name);
        if (it != params.end() && std::abs(it->second - val) > 1e-12)
          out_of_domain(kind, std::string("coefficient ") + name + " is determined by the others");
        params[name] = val;
      }
      break;
    }
    case Kind::ConsistForm:
      if (!(P("alpha") >= 0)) out_of_domain(kind, "alpha >= 0 required");
      break;
    case Kind::UniformlyConvex:
      if (!(P("p") > 2)) out_of_domain(kind, "exponent p > 2 required");
      if (!(P("mu") >= 0)) out_of_domain(kind, "mu >= 0 required");
      break;
    case Kind::HolderSmooth:
      if (!(P("alpha") > 0 && P("alpha") < 1)) out_of_domain(kind, "alpha in (0,1) required");
      if (!(P("L") >= 0)) out_of_domain(kind, "L >= 0 required");
      if (params.count("p") && !(P("p") > 0)) out_of_domain(kind, "exponent p > 0 required");
      break;
    case Kind::SmoothPL:
      if (!(P("mu") >= 0 && P("mu") <= P("L"))) out_of_domain(kind, "0 <= mu <= L required");
      break;
    case Kind::LipschitzHessian:
      if (!(P("M") >= 0)) out_of_domain(kind, "M >= 0 required");
      break;
    case Kind::Convex: break;
  }
  return Family{kind, std::move(params)};
}

Family family_from_spec(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw Error(ErrorCode::ParseError, "family spec needs a string 'kind'");
  Kind k = parse_kind(spec["kind"].get<std::string>());
  std::map<std::string, double> params;
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    if (it.key() == "kind") continue;
    if (!it.value().is_number())
      throw Error(ErrorCode::ParseError, "parameter '" + it.key() + "' must be a number");
    params[it.key()] = it.value().get<double>();
  }
  return make_family(k, std::move(params));
}

Family family_from_spec(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::string tok;
  nlohmann::json j = nlohmann::json::object();
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "expected key=value, got '" + tok + "'");
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "kind") {
      j["kind"] = val;
      continue;
    }
    try {
      std::size_t used = 0;
      double v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
      j[key] = v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad number for '" + key + "': " + val);
    }
  }
  return family_from_spec(j);
}

nlohmann::json family_to_json(const Family& fam) {
  nlohmann::json j;
  j["kind"] = kind_name(fam.kind);
  for (const auto& [k, v] : fam.params) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------
// datasets

Dataset validate_dataset(const Dataset& raw) {
  if (raw.triples.empty()) throw Error(ErrorCode::DimensionMismatch, "empty dataset");
  const int d = raw.triples.front().dim();
  if (d < 1) throw Error(ErrorCode::DimensionMismatch, "dimension must be >= 1");
  if (raw.dim != 0 && raw.dim != d)
    throw Error(ErrorCode::DimensionMismatch, "declared dim " + std::to_string(raw.dim) + " but points have " +
                                                  std::to_string(d));
  for (std::size_t i = 0; i < raw.triples.size(); ++i) {
    const auto& t = raw.triples[i];
    if (t.x.size() != d || t.g.size() != d)
      throw Error(ErrorCode::DimensionMismatch, "point " + std::to_string(i) + " has inconsistent dimension");
    if (!std::isfinite(t.f) || !t.x.allFinite() || !t.g.allFinite() || (t.hess && !std::isfinite(*t.hess)))
      throw Error(ErrorCode::NonFiniteEntry, "point " + std::to_string(i));
  }
  for (std::size_t i = 0; i < raw.triples.size(); ++i)
    for (std::size_t j = i + 1; j < raw.triples.size(); ++j)
      if (raw.triples[i].x == raw.triples[j].x && raw.triples[i].f != raw.triples[j].f)
        throw Error(ErrorCode::InconsistentDuplicate,
                    "points " + std::to_string(i) + " and " + std::to_string(j) + " share x but not f");
  Dataset out = raw;
  out.dim = d;
  return out;
}

Dataset make_dataset(std::vector<DataTriple> triples) {
  Dataset S;
  S.triples = std::move(triples);
  return validate_dataset(S);
}

Vec vec_from_json(const nlohmann::json& j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected number or array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::ParseError, "non-numeric vector entry");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json dataset_to_json(const Dataset& S) {
  nlohmann::json j;
  j["dim"] = S.dim;
  j["points"] = nlohmann::json::array();
  for (const auto& t : S.triples) {
    nlohmann::json p;
    p["x"] = vec_to_json(t.x);
    p["f"] = t.f;
    p["g"] = vec_to_json(t.g);
    if (t.hess) p["hess"] = *t.hess;
    j["points"].push_back(p);
  }
  return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
    throw Error(ErrorCode::ParseError, "dataset needs a 'points' array");
  Dataset S;
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer()) throw Error(ErrorCode::ParseError, "'dim' must be an integer");
    S.dim = j["dim"].get<int>();
  }
  for (const auto& p : j["points"]) {
    if (!p.is_object() || !p.contains("x") || !p.contains("f") || !p.contains("g"))
      throw Error(ErrorCode::ParseError, "each point needs x, f, g");
    if (!p["f"].is_number()) throw Error(ErrorCode::ParseError, "f must be a number");
    DataTriple t;
    t.x = vec_from_json(p["x"]);
    t.f = p["f"].get<double>();
    t.g = vec_from_json(p["g"]);
    if (p.contains("hess") && !p["hess"].is_null()) {
      if (!p["hess"].is_number()) throw Error(ErrorCode::ParseError, "hess must be a number");
      t.hess = p["hess"].get<double>();
    }
    S.triples.push_back(std::move(t));
  }
  return validate_dataset(S);
}

}  // namespace interp
