#include <doctest.h>

#include "interp/constraints.hpp"
#include "interp/core.hpp"

#include <cmath>
#include <limits>

using namespace interp;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an interp::Error");
  return ErrorCode::ParseError;
}

DataTriple triple_nd(std::initializer_list<double> x, double f, std::initializer_list<double> g) {
  DataTriple t;
  t.x = Vec::Map(std::data(x), static_cast<int>(x.size()));
  t.f = f;
  t.g = Vec::Map(std::data(g), static_cast<int>(g.size()));
  return t;
}

}  // namespace

TEST_CASE("validate_dataset accepts the two-point example") {
  Dataset S = make_dataset({triple(0, 0, 1), triple(3, -1.5, 1)});
  CHECK(S.size() == 2);
  CHECK(S.dim == 1);
}

TEST_CASE("validate_dataset rejects mismatched x and g") {
  CHECK(code_of([] { make_dataset({triple_nd({0, 0}, 0, {1})}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { make_dataset({triple(0, 0, 1), triple_nd({1, 1}, 0, {1, 1})}); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("validate_dataset rejects inconsistent duplicates and non-finite values") {
  CHECK(code_of([] { make_dataset({triple(0, 0, 1), triple(0, 1, 1)}); }) == ErrorCode::InconsistentDuplicate);
  double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { make_dataset({triple(0, nan, 1)}); }) == ErrorCode::NonFiniteEntry);
  CHECK(code_of([&] { make_dataset({triple(0, 0, std::numeric_limits<double>::infinity())}); }) ==
        ErrorCode::NonFiniteEntry);
}

TEST_CASE("repeated x with equal f is allowed") {
  CHECK(make_dataset({triple(1, 2, 3), triple(1, 2, 3)}).size() >= 1);
  // two subgradients at a kink
  CHECK(make_dataset({triple(0, 0, -1), triple(0, 0, 1)}).size() == 2);
}

TEST_CASE("family_from_spec builds the tight weakly convex family") {
  Family f = family_from_spec(nlohmann::json{{"kind", "WeaklyConvexBoundedTight"}, {"mu", 1}, {"B", 1}});
  CHECK(f.kind == Kind::WeaklyConvexBoundedTight);
  CHECK(f["mu"] == 1.0);
  CHECK(f["B"] == 1.0);
}

TEST_CASE("smooth strongly convex needs mu < L") {
  CHECK(code_of([] { family_from_spec(nlohmann::json{{"kind", "SmoothStronglyConvex"}, {"mu", 2}, {"L", 1}}); }) ==
        ErrorCode::ParameterOutOfDomain);
  CHECK_NOTHROW(family_from_spec(nlohmann::json{{"kind", "SmoothStronglyConvex"}, {"mu", 0}, {"L", 1}}));
}

TEST_CASE("unknown kinds and parameters are rejected") {
  CHECK(code_of([] { family_from_spec(nlohmann::json{{"kind", "NotAFamily"}}); }) == ErrorCode::UnknownKind);
  CHECK(code_of([] { make_family(Kind::Convex, {{"mu", 1}}); }) == ErrorCode::ParameterOutOfDomain);
  CHECK(code_of([] { make_family(Kind::WeaklyConvexBounded, {{"mu", 1}}); }) == ErrorCode::ParameterOutOfDomain);
}

TEST_CASE("gram-linear dependent coefficients") {
  Family f = family_from_spec(
      nlohmann::json{{"kind", "GramLinearGeneral"}, {"B", 0}, {"C", 0}, {"E", 0}, {"F", 0}, {"H", -1}, {"I", 0}, {"J", 0}});
  CHECK(f["D"] == 0.0);
  CHECK(f["G"] == 0.0);
  CHECK(f["K"] == 1.0);

  // convexity itself is J = 1, K = -1: f_i - f_j - <g_j, x_i - x_j>
  Family conv = make_family(Kind::GramLinearGeneral, {{"B", 0}, {"C", 0}, {"E", 0}, {"F", 0}, {"H", 0}, {"I", 0}, {"J", 1}});
  CHECK(conv["K"] == -1.0);
  Family plain = make_family(Kind::Convex, {});
  DataTriple a = triple(0.3, 1.2, -0.7), b = triple(-1.1, 0.4, 2.5);
  CHECK(eval_pairwise(conv, a, b)[0] == doctest::Approx(eval_pairwise(plain, b, a)[0]).epsilon(1e-14));
  CHECK(eval_pairwise(conv, b, a)[0] == doctest::Approx(eval_pairwise(plain, a, b)[0]).epsilon(1e-14));
}

TEST_CASE("kind aliases") {
  CHECK(parse_kind("wc") == Kind::WeaklyConvexBounded);
  CHECK(parse_kind("wc-tight") == Kind::WeaklyConvexBoundedTight);
  CHECK(parse_kind("weaklyconvexboundedtight") == Kind::WeaklyConvexBoundedTight);
  CHECK(parse_kind("eq1") == Kind::SmoothConvexWeak);
  CHECK(parse_kind("eq2") == Kind::SmoothConvexTight);
  CHECK(parse_kind("ssc") == Kind::SmoothStronglyConvex);
  CHECK(parse_kind("pl") == Kind::SmoothPL);
  for (Kind k : {Kind::Convex, Kind::QuadraticClass, Kind::ConsistForm, Kind::LipschitzHessian})
    CHECK(parse_kind(kind_name(k)) == k);
}

TEST_CASE("family from key=value text") {
  Family f = family_from_spec(std::string("kind=wc-tight mu=2 B=0.5"));
  CHECK(f.kind == Kind::WeaklyConvexBoundedTight);
  CHECK(f["mu"] == 2.0);
  CHECK(f["B"] == 0.5);
  Family g = family_from_spec(std::string("kind=pl,L=1,mu=0.5"));
  CHECK(g["fstar"] == 0.0);
}

TEST_CASE("dataset JSON round trip") {
  DataTriple h = triple(1, -1.0 / 6, 0, 0);
  Dataset S = make_dataset({triple(0, 0, 0, 0), h});
  Dataset back = dataset_from_json(nlohmann::json::parse(dataset_to_json(S).dump()));
  CHECK(back == S);
  REQUIRE(back[1].hess.has_value());
  CHECK(*back[1].hess == 0.0);

  Dataset S2 = make_dataset({triple_nd({1, 2, 3}, 0.5, {0.1, 0.2, 0.3})});
  CHECK(dataset_from_json(dataset_to_json(S2)) == S2);
}

TEST_CASE("dataset JSON errors") {
  CHECK(code_of([] { dataset_from_json(nlohmann::json::array()); }) == ErrorCode::ParseError);
  CHECK(code_of([] { dataset_from_json(nlohmann::json::parse(R"({"points":[{"x":[0],"f":"a","g":[1]}]})")); }) ==
        ErrorCode::ParseError);
  CHECK(code_of([] { dataset_from_json(nlohmann::json::parse(R"({"points":[{"x":[0,1],"f":0,"g":[1]}]})")); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("family JSON round trip") {
  Family f = make_family(Kind::ConsistForm, {{"alpha", 0}, {"beta", 0}, {"gamma", 0.3}});
  Family back = family_from_spec(family_to_json(f));
  CHECK(back.kind == f.kind);
  CHECK(back.params == f.params);
}
