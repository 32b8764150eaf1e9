#include "interp/pep.hpp"
#include "interp/region.hpp"
#include "interp/search.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace interp;
using nlohmann::json;

namespace {

enum Exit { Ok = 0, Negative = 1, InputError = 2, SolverError = 3 };

struct Globals {
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::string out;
  std::string format;
};

struct FamilyFlags {
  std::string family;
  std::map<std::string, std::optional<double>> values{{"mu", {}},    {"L", {}},    {"B", {}}, {"M", {}},
                                                      {"alpha", {}}, {"beta", {}}, {"gamma", {}},
                                                      {"p", {}},     {"fstar", {}}};
  std::vector<std::string> extra;

  void attach(CLI::App* cmd, bool with_kind = true) {
    if (with_kind) cmd->add_option("--family", family, "family kind or alias (wc, wc-tight, eq1, ...)");
    for (auto& [k, v] : values) cmd->add_option("--" + k, v, "family parameter " + k);
    cmd->add_option("--param", extra, "extra family parameter k=v (repeatable)");
  }

  // parameters given on the command line; with a kind, only those it accepts
  std::map<std::string, double> given(std::optional<Kind> only = {}) const {
    std::map<std::string, double> p;
    for (const auto& [k, v] : values)
      if (v) p[k] = *v;
    for (const auto& kv : extra) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "--param expects k=v, got '" + kv + "'");
      try {
        p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad number in --param " + kv);
      }
    }
    if (only) {
      auto keys = family_parameters(*only);
      std::erase_if(p, [&](const auto& e) { return std::find(keys.begin(), keys.end(), e.first) == keys.end(); });
    }
    return p;
  }

  Family build(const json* embedded = nullptr) const {
    if (family.empty()) {
      if (embedded && embedded->contains("family")) return family_from_spec((*embedded)["family"]);
      throw Error(ErrorCode::ParseError, "no family given (use --family or a \"family\" entry in the file)");
    }
    return make_family(parse_kind(family), given());
  }
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

Dataset read_dataset(const json& j) {
  try {
    return dataset_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::ParseError, "cannot write " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt_or(const std::string& f, const char* dflt) { return f.empty() ? dflt : f; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += c == '"' ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// "1..6", "1,3,5" or "4"
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  try {
    auto dots = s.find("..");
    if (dots != std::string::npos) {
      int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
      for (int i = a; i <= b; ++i) out.push_back(i);
    } else {
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "bad integer list '" + s + "'");
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "empty integer list '" + s + "'");
  return out;
}

std::vector<double> parse_num_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "empty number list");
  return out;
}

// ---------------------------------------------------------------- commands

int run_check(const Globals& G, const FamilyFlags& ff, const std::string& path) {
  json j = read_json(path);
  Dataset S = read_dataset(j);
  Family fam = ff.build(&j);
  Satisfaction sat = satisfies(fam, S, G.tol);
  Output out(G.out);
  if (fmt_or(G.format, "json") == "csv") {
    out.os() << "satisfied,i,j,component,value\n"
             << sat.ok << ',' << sat.worst.i << ',' << sat.worst.j << ',' << sat.worst.component << ','
             << num(sat.worst.value) << '\n';
  } else {
    json r = {{"family", family_to_json(fam)},
              {"points", S.size()},
              {"satisfied", sat.ok},
              {"worst",
               {{"i", sat.worst.i}, {"j", sat.worst.j}, {"component", sat.worst.component}, {"value", sat.worst.value}}}};
    out.os() << r.dump(2) << '\n';
  }
  return sat.ok ? Ok : Negative;
}

int run_extend(const Globals& G, const FamilyFlags& ff, const std::string& path, const std::vector<double>& xv,
               bool oracle) {
  json j = read_json(path);
  Dataset S = read_dataset(j);
  Family fam = ff.build(&j);
  Vec x = Eigen::Map<const Vec>(xv.data(), static_cast<Eigen::Index>(xv.size()));
  GapOptions opt;
  opt.tol = G.tol;
  ExtensionGap gap = extension_gap(S, x, fam, opt);
  double tau_o = std::numeric_limits<double>::quiet_NaN();
  if (oracle) tau_o = grid_oracle_gap(S, x[0], fam, opt.grid, G.tol).tau_star;
  const bool extensible = gap.tau_star <= G.tol;

  Output out(G.out);
  if (fmt_or(G.format, "json") == "csv") {
    out.os() << "tau_star,extensible,method,witness_f,tau_oracle\n"
             << num(gap.tau_star) << ',' << extensible << ',' << method_name(gap.method) << ','
             << num(gap.witness_f) << ',' << num(tau_o) << '\n';
  } else {
    json r = {{"family", family_to_json(fam)},
              {"probe_x", vec_to_json(x)},
              {"tau_star", gap.tau_star},
              {"extensible", extensible},
              {"method", method_name(gap.method)},
              {"witness", {{"f", gap.witness_f}, {"g", vec_to_json(gap.witness_g)}}}};
    if (gap.witness_hess) r["witness"]["hess"] = *gap.witness_hess;
    if (oracle) r["tau_oracle"] = num_json(tau_o);
    out.os() << r.dump(2) << '\n';
  }
  return extensible ? Ok : Negative;
}

int run_hunt(const Globals& G, const FamilyFlags& ff, int n, int d, int budget, int starts, int threads) {
  Family fam = ff.build();
  SearchConfig cfg;
  cfg.seed = G.seed;
  cfg.tol = G.tol;
  cfg.budget = budget;
  cfg.starts = starts;
  cfg.threads = threads;
  SearchReport rep = find_counterexample(fam, n, d, cfg);

  json r;
  if (rep.best) {
    r = counterexample_to_json(*rep.best);
  } else {
    r = dataset_to_json(rep.best_S);
    r["probe_x"] = vec_to_json(rep.best_x);
    r["family"] = family_to_json(fam);
  }
  r["found"] = rep.best.has_value();
  r["best_tau"] = num_json(rep.best_tau);
  r["iterations"] = rep.iterations;
  r["budget_exhausted"] = rep.budget_exhausted;
  r["seed"] = G.seed;
  Output out(G.out);
  out.os() << r.dump(2) << '\n';
  if (!rep.best) std::cerr << "no certified counterexample (best tau " << rep.best_tau << ")\n";
  return rep.best ? Ok : Negative;
}

int run_verify_tables(const Globals& G, const FamilyFlags& ff, const std::string& which) {
  std::vector<std::pair<std::string, Table>> tables;
  if (which == "1" || which == "all") tables.push_back({"1", Table::Table1});
  if (which == "3" || which == "all") tables.push_back({"3", Table::Table3});
  if (which == "4" || which == "all") tables.push_back({"4", Table::Table4});
  if (tables.empty()) throw Error(ErrorCode::ParseError, "--which must be 1, 3, 4 or all");

  TableParams tp;
  auto p = ff.given();
  if (p.count("mu")) tp.mu = p["mu"];
  if (p.count("B")) tp.B = p["B"];
  if (p.count("L")) tp.L = p["L"];
  if (p.count("M")) tp.M = p["M"];
  VerifyOptions vo;
  vo.tol = G.tol;

  bool all = true;
  int certified = 0, total = 0;
  json rows = json::array();
  std::ostringstream csv;
  csv << "table,id,family,certified,feasibility,tau_star,tau_oracle,reason\n";
  for (const auto& [name, t] : tables) {
    for (const auto& r : table_suite(t, tp, vo)) {
      ++total;
      certified += r.certified;
      all = all && r.certified;
      csv << name << ',' << r.id << ',' << csv_escape(r.family.describe()) << ',' << r.certified << ','
          << num(r.feasibility) << ',' << num(r.tau_star) << ',' << num(r.tau_oracle) << ','
          << csv_escape(r.reason) << '\n';
      json row = dataset_to_json(r.S);
      row["table"] = name;
      row["id"] = r.id;
      row["family"] = family_to_json(r.family);
      row["probe_x"] = vec_to_json(r.x);
      row["certified"] = r.certified;
      row["feasibility"] = num_json(r.feasibility);
      row["tau_star"] = num_json(r.tau_star);
      row["tau_oracle"] = num_json(r.tau_oracle);
      row["reason"] = r.reason;
      rows.push_back(row);
    }
  }
  Output out(G.out);
  if (fmt_or(G.format, "csv") == "json")
    out.os() << rows.dump(2) << '\n';
  else
    out.os() << csv.str();
  std::cerr << certified << "/" << total << " rows certified\n";
  return all ? Ok : Negative;
}

struct PepFlags {
  std::string N = "1";
  std::string h = "classical";
  double rho = 2, R2 = 0.125, mu = 1, B = 1;
  std::string variant = "both";
  std::string convention = "penalty";
  std::string gd;
  double L = 1;
  std::optional<double> alpha;
  std::string dump;
};

bool usable(SolverStatus s) { return s == SolverStatus::Optimal || s == SolverStatus::Inaccurate; }

int run_gd(const Globals& G, const PepFlags& pf, bool N_given) {
  std::vector<GdVariant> vs;
  if (pf.gd == "tight" || pf.gd == "both") vs.push_back(GdVariant::Tight_eq2);
  if (pf.gd == "weak" || pf.gd == "both") vs.push_back(GdVariant::Weak_eq1);
  if (vs.empty()) throw Error(ErrorCode::ParseError, "--gd must be tight, weak or both");
  Output out(G.out);
  std::ofstream dump;
  if (!pf.dump.empty()) dump.open(pf.dump);
  bool ok = true;
  const bool csv = fmt_or(G.format, "csv") == "csv";
  json rows = json::array();
  if (csv) out.os() << "variant,N,L,R2,alpha,bound,status\n";
  for (GdVariant v : vs) {
    GdSpec s = gd_calibration_config(v);
    if (N_given) s.N = parse_int_list(pf.N).front();
    s.L = pf.L;
    if (pf.alpha) s.alpha = *pf.alpha;
    SdpInstance inst = build_gd_pep(s);
    if (dump.is_open()) dump_sdp(inst, dump);
    PepResult r = solve(inst);
    ok = ok && usable(r.status);
    const char* name = v == GdVariant::Tight_eq2 ? "tight" : "weak";
    if (csv)
      out.os() << name << ',' << s.N << ',' << num(s.L) << ',' << num(s.R2) << ',' << num(s.alpha) << ','
               << num(r.bound) << ',' << status_name(r.status) << '\n';
    else
      rows.push_back({{"variant", name},
                      {"N", s.N},
                      {"L", s.L},
                      {"R2", s.R2},
                      {"alpha", s.alpha},
                      {"bound", num_json(r.bound)},
                      {"status", status_name(r.status)}});
  }
  if (!csv) out.os() << rows.dump(2) << '\n';
  return ok ? Ok : SolverError;
}

int run_pep(const Globals& G, const PepFlags& pf, bool N_given) {
  if (!pf.gd.empty()) return run_gd(G, pf, N_given);

  PepSpec tmpl;
  tmpl.rho = pf.rho;
  tmpl.R2 = pf.R2;
  tmpl.mu = pf.mu;
  tmpl.B = pf.B;
  if (pf.convention == "inverse")
    tmpl.convention = MoreauConvention::InverseWeight;
  else if (pf.convention != "penalty")
    throw Error(ErrorCode::ParseError, "--convention must be penalty or inverse");
  if (pf.variant != "both" && pf.variant != "tight" && pf.variant != "classical")
    throw Error(ErrorCode::ParseError, "--variant must be tight, classical or both");

  const auto Ns = parse_int_list(pf.N);
  std::vector<SweepRow> rows;
  std::vector<PepSpec> specs;  // for --dump-sdp
  if (pf.h == "classical" || pf.h == "prior") {
    StepRule rule = pf.h == "classical" ? StepRule::Classical : StepRule::PriorPep;
    rows = sweep_N(tmpl, Ns, rule);
    for (const auto& r : rows) {
      PepSpec s = tmpl;
      s.N = r.N;
      s.h = r.h;
      specs.push_back(s);
    }
  } else {
    auto hs = parse_num_list(pf.h);
    for (int N : Ns) {
      PepSpec s = tmpl;
      s.N = N;
      for (double h : hs) {
        s.h = h;
        validate(s);
        specs.push_back(s);
      }
      auto part = sweep_h(s, hs);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }

  if (!pf.dump.empty()) {
    std::ofstream dump(pf.dump);
    if (!dump) throw Error(ErrorCode::ParseError, "cannot write " + pf.dump);
    for (PepSpec s : specs)
      for (PepVariant v : {PepVariant::Tight_p, PepVariant::Classical_p}) {
        if ((pf.variant == "tight" && v != PepVariant::Tight_p) ||
            (pf.variant == "classical" && v != PepVariant::Classical_p))
          continue;
        s.variant = v;
        dump << "%% N=" << s.N << " h=" << num(s.h) << " variant=" << (v == PepVariant::Tight_p ? "tight" : "classical")
             << '\n';
        dump_sdp(build_wc_pep(s), dump);
      }
  }

  bool ok = true;
  for (const auto& r : rows) {
    if (pf.variant != "classical") ok = ok && usable(r.status_tight);
    if (pf.variant != "tight") ok = ok && usable(r.status_classical);
  }
  Output out(G.out);
  if (fmt_or(G.format, "csv") == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"N", r.N},
                     {"h", r.h},
                     {"bound_tight", num_json(r.bound_tight)},
                     {"bound_classical_p", num_json(r.bound_classical)},
                     {"baseline1", r.baseline1},
                     {"baseline2", r.baseline2},
                     {"status_tight", status_name(r.status_tight)},
                     {"status_classical", status_name(r.status_classical)}});
    out.os() << arr.dump(2) << '\n';
  } else {
    out.os() << sweep_csv_header() << '\n';
    for (const auto& r : rows) out.os() << sweep_csv_row(r) << '\n';
  }
  return ok ? Ok : SolverError;
}

int run_region(const Globals& G, const FamilyFlags& ff, const std::string& anchor, double x, const std::string& fa,
               const std::string& fb, RegionOptions ro) {
  auto a = parse_num_list(anchor);
  if (a.size() != 3) throw Error(ErrorCode::ParseError, "--anchor expects x,f,g");
  Kind ka = parse_kind(fa), kb = parse_kind(fb);
  Family A = make_family(ka, ff.given(ka)), B = make_family(kb, ff.given(kb));
  auto rows = run_region(triple(a[0], a[1], a[2]), x, A, B, ro);
  Output out(G.out);
  if (fmt_or(G.format, "csv") == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"g", r.g},
                     {"f_min_a", num_json(r.f_min_a)},
                     {"f_max_a", num_json(r.f_max_a)},
                     {"f_min_b", num_json(r.f_min_b)},
                     {"f_max_b", num_json(r.f_max_b)}});
    out.os() << arr.dump(2) << '\n';
  } else {
    out.os() << region_csv_header() << '\n';
    for (const auto& r : rows) out.os() << region_csv_row(r) << '\n';
  }
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpolation constraints: checks, extension gaps, counterexample search and PEP bounds"};
  app.set_config("--config", "", "flat key = value file mirroring the flags");
  app.require_subcommand(1);
  app.fallthrough();

  Globals G;
  app.add_option("--seed", G.seed, "random seed");
  app.add_option("--tol", G.tol, "feasibility tolerance")->check(CLI::PositiveNumber);
  app.add_option("--out", G.out, "output path (default stdout)");
  app.add_option("--format", G.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  std::string path;
  std::function<int()> action;

  FamilyFlags f_check;
  auto* check = app.add_subcommand("check", "does the dataset satisfy the family's pairwise constraints");
  check->add_option("dataset", path, "dataset JSON")->required();
  f_check.attach(check);
  check->callback([&] { action = [&] { return run_check(G, f_check, path); }; });

  FamilyFlags f_ext;
  std::vector<double> probe;
  bool with_oracle = false;
  auto* extend = app.add_subcommand("extend", "extension gap at a probe point");
  extend->add_option("dataset", path, "dataset JSON")->required();
  extend->add_option("--x", probe, "probe point (comma separated)")->required()->delimiter(',');
  extend->add_flag("--oracle", with_oracle, "also run the 1-D grid oracle");
  f_ext.attach(extend);
  extend->callback([&] { action = [&] { return run_extend(G, f_ext, path, probe, with_oracle); }; });

  FamilyFlags f_hunt;
  int n = 2, d = 1, budget = 5000, starts = 8, threads = 0;
  auto* hunt = app.add_subcommand("hunt", "search for a counterexample to interpolability");
  f_hunt.attach(hunt);
  hunt->add_option("--n", n, "number of data points")->check(CLI::PositiveNumber);
  hunt->add_option("--d", d, "dimension")->check(CLI::PositiveNumber);
  hunt->add_option("--budget", budget, "inner-problem evaluations")->check(CLI::PositiveNumber);
  hunt->add_option("--starts", starts, "random restarts")->check(CLI::PositiveNumber);
  hunt->add_option("--threads", threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  hunt->callback([&] { action = [&] { return run_hunt(G, f_hunt, n, d, budget, starts, threads); }; });

  FamilyFlags f_tab;
  std::string which = "all";
  auto* tables = app.add_subcommand("verify-tables", "re-verify the published counterexample tables");
  tables->add_option("--which", which, "1, 3, 4 or all");
  f_tab.attach(tables, false);
  tables->callback([&] { action = [&] { return run_verify_tables(G, f_tab, which); }; });

  PepFlags pf;
  auto* pep = app.add_subcommand("pep", "performance-estimation bounds for the subgradient method");
  pep->set_help_flag("--help", "print this help message and exit");  // frees -h for the step option
  auto* optN = pep->add_option("--N", pf.N, "iteration counts: 3, 1..6 or 1,2,4");
  pep->add_option("--h", pf.h, "step: classical, prior or numbers");
  pep->add_option("--rho", pf.rho, "Moreau parameter")->check(CLI::PositiveNumber);
  pep->add_option("--R2", pf.R2, "initial-condition bound")->check(CLI::PositiveNumber);
  pep->add_option("--mu", pf.mu, "weak convexity")->check(CLI::PositiveNumber);
  pep->add_option("--B", pf.B, "subgradient bound")->check(CLI::PositiveNumber);
  pep->add_option("--variant", pf.variant, "tight, classical or both");
  pep->add_option("--convention", pf.convention, "penalty or inverse");
  pep->add_option("--gd", pf.gd, "gradient-descent calibration instead: tight, weak or both");
  pep->add_option("--L", pf.L, "smoothness for --gd")->check(CLI::PositiveNumber);
  pep->add_option("--alpha", pf.alpha, "step for --gd");
  pep->add_option("--dump-sdp", pf.dump, "write the SDP instances to this path");
  pep->callback([&] { action = [&] { return run_pep(G, pf, optN->count() > 0); }; });

  FamilyFlags f_reg;
  std::string anchor = "0,0,1", fam_a = "wc", fam_b = "wc-tight";
  double rx = 3;
  RegionOptions ro;
  auto* region = app.add_subcommand("region", "allowed f interval at x as a function of g, for two families");
  region->add_option("--anchor", anchor, "anchor triple x,f,g");
  region->add_option("--x", rx, "second point");
  region->add_option("--family-a", fam_a, "first family (columns _a)");
  region->add_option("--family-b", fam_b, "second family (columns _b)");
  region->add_option("--gmin", ro.g_min, "smallest g");
  region->add_option("--gmax", ro.g_max, "largest g");
  region->add_option("--gcount", ro.g_count, "number of g values")->check(CLI::PositiveNumber);
  f_reg.attach(region, false);
  region->callback([&] { action = [&] { return run_region(G, f_reg, anchor, rx, fam_a, fam_b, ro); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? Ok : InputError;
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::SolverFailure:
      case ErrorCode::InaccurateSolution: return SolverError;
      default: return InputError;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return InputError;
  }
}
