#include "fundrv/basis.hpp"
#include "fundrv/dataset.hpp"
#include "fundrv/dtest.hpp"
#include "fundrv/errors.hpp"
#include "fundrv/fdata.hpp"
#include "fundrv/jtest.hpp"
#include "fundrv/kernels.hpp"
#include "fundrv/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace fundrv;
using nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::string data;
  std::string out;
  std::string basis = "fourier:12";
  std::string xbasis = "bspline:6:21";
  std::string grid;
  bool json = false;
  bool no_scalars = false;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Basis basis_or_usage(const std::string& s) {
  try {
    return parse_basis(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw UsageError(std::string("malformed ") + what + " list '" + s + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> lambda_grid(const Common& c) {
  if (c.grid.empty()) return default_lambda_grid();
  std::vector<double> g = parse_list(c.grid, "lambda");
  for (double l : g) {
    if (l < 0.0) throw UsageError("lambda values must be nonnegative");
  }
  return g;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + c.out + "'");
  f << text;
}

struct Prepared {
  Dataset ds;
  FunctionalSample x;
  Basis coef_basis;
  std::optional<Eigen::MatrixXd> scalars;
};

Prepared prepare(const Common& c) {
  const Basis coef = basis_or_usage(c.basis);
  const Basis xb = basis_or_usage(c.xbasis);
  Dataset ds = ingest_wide_csv(c.data);
  FunctionalSample x = project(ds.grid, ds.curves, xb);
  std::optional<Eigen::MatrixXd> scalars = c.no_scalars ? std::nullopt : ds.scalars;
  return {std::move(ds), std::move(x), coef, std::move(scalars)};
}

ordered_json stage_json(const ContrastResult& r) {
  return {{"F", r.F},     {"pC", r.p_C},           {"df2", r.df2}, {"eta", r.eta},
          {"p", r.p_value}, {"p_central", r.p_value_central}};
}

ordered_json axis_json(const Dataset& ds) {
  return {{"lower", ds.abscissae.front()}, {"upper", ds.abscissae.back()}};
}

std::vector<std::string> scalar_names(const Prepared& p) {
  return p.scalars ? p.ds.scalar_names : std::vector<std::string>{};
}

// ---- test ----------------------------------------------------------------

struct TestArgs {
  Common c;
  std::string test = "0v1";
  double lambda = std::nan("");
  bool ocv = false;
  double level = 0.05;
};

void cmd_test(const TestArgs& a) {
  const TestKind kind = parse_test_kind(a.test);
  const Prepared p = prepare(a.c);
  const LambdaPolicy policy = std::isnan(a.lambda) ? LambdaPolicy::cross_validated(lambda_grid(a.c)) : LambdaPolicy::fixed(a.lambda);
  const DerivativeTestReport r = run_test(p.ds.response, p.x, kind, p.scalars, p.coef_basis, policy, a.level);

  if (a.c.json) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "test";
    j["test_kind"] = to_string(kind);
    j["lambda_policy"] = describe(policy);
    j["lambda"] = r.lambda;
    j["level"] = r.level;
    j["basis"] = p.coef_basis.describe();
    j["xbasis"] = p.x.basis.describe();
    j["n"] = p.ds.n();
    j["df"] = r.df;
    j["scalars"] = scalar_names(p);
    j["axis"] = axis_json(p.ds);
    j["stage1"] = stage_json(r.stage1);
    j["stage2"] = stage_json(r.stage2);
    j["decision"] = to_string(r.decision);
    emit(a.c, j.dump(2) + "\n");
    return;
  }
  std::ostringstream o;
  o << "test " << to_string(kind) << "  lambda " << num(r.lambda) << " (" << describe(policy) << ")  df "
    << num(r.df) << "  n " << p.ds.n() << "\n";
  auto line = [&](const char* name, const ContrastResult& s) {
    o << name << ": F " << num(s.F) << "  pC " << s.p_C << "  df2 " << num(s.df2) << "  eta " << num(s.eta)
      << "  p " << num(s.p_value) << "  (central p " << num(s.p_value_central) << ")\n";
  };
  line("stage 1", r.stage1);
  line("stage 2", r.stage2);
  o << "decision at level " << num(r.level) << ": " << to_string(r.decision) << "\n";
  emit(a.c, o.str());
}

// ---- pcurve --------------------------------------------------------------

struct CurveArgs {
  Common c;
  std::string test = "0v1";
};

void cmd_pcurve(const CurveArgs& a) {
  const TestKind kind = parse_test_kind(a.test);
  const Prepared p = prepare(a.c);
  const std::vector<double> grid = lambda_grid(a.c);
  const AugmentedDesign d = assemble(p.ds.response, p.x, design_spec(kind, p.coef_basis, p.scalars));
  const OcvResult cv = ocv(d, p.ds.response, grid);
  const auto [c1, c2] = contrasts(kind, p.coef_basis, d.p());

  struct Row {
    double lambda, p1, p2, score;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Row r{grid[i], std::nan(""), std::nan(""), cv.scores[i]};
    try {
      const PenalizedFit f = fit(d, p.ds.response, grid[i]);
      r.p1 = evaluate_contrast(d, p.ds.response, f, c1).p_value;
      r.p2 = evaluate_contrast(d, p.ds.response, f, c2).p_value;
    } catch (const SingularSystemError&) {
    } catch (const SingularContrastError&) {
    }
    rows.push_back(r);
  }
  if (a.c.json) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "pcurve";
    j["test_kind"] = to_string(kind);
    j["basis"] = p.coef_basis.describe();
    j["lambda_star"] = cv.lambda_star;
    j["rows"] = ordered_json::array();
    for (const Row& r : rows) {
      j["rows"].push_back({{"lambda", r.lambda},
                           {"p_stage1", r.p1},
                           {"p_stage2", r.p2},
                           {"ocv_score", std::isfinite(r.score) ? ordered_json(r.score) : ordered_json(nullptr)},
                           {"ocv_min", r.lambda == cv.lambda_star}});
    }
    emit(a.c, j.dump(2) + "\n");
    return;
  }
  std::string out = "lambda,p_stage1,p_stage2,ocv_score,ocv_min\n";
  for (const Row& r : rows) {
    out += num(r.lambda) + "," + num(r.p1) + "," + num(r.p2) + "," + num(r.score) + "," +
           (r.lambda == cv.lambda_star ? "1" : "0") + "\n";
  }
  emit(a.c, out);
}

// ---- jtest ---------------------------------------------------------------

struct JArgs {
  Common c;
  std::string null_spec = "nw:0";
  std::string alt_spec = "nw:1";
  double frac = kDefaultSplitFraction;
  std::uint64_t seed = 1;
  bool free_null = false;
};

void cmd_jtest(const JArgs& a) {
  ModelSpec ns, as;
  try {
    ns = ModelSpec::parse(a.null_spec);
    as = ModelSpec::parse(a.alt_spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Prepared p = prepare(a.c);
  JTestOptions opts;
  opts.coef_basis = p.coef_basis;
  opts.lambda_grid = lambda_grid(a.c);
  opts.free_null_coefficient = a.free_null;
  const JTestResult r = j_test(p.ds.response, p.x, p.scalars, ns, as, a.frac, a.seed, opts);
  if (a.c.json) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "jtest";
    j["null"] = ns.describe();
    j["alt"] = as.describe();
    j["basis"] = p.coef_basis.describe();
    j["free_null_coefficient"] = a.free_null;
    j["frac"] = a.frac;
    j["theta_hat"] = r.theta_hat;
    j["t_stat"] = r.t_stat;
    j["df"] = r.df;
    j["p_value"] = r.p_value;
    j["split_seed"] = r.split_seed;
    j["n1"] = r.n1;
    j["n2"] = r.n2;
    emit(a.c, j.dump(2) + "\n");
    return;
  }
  std::ostringstream o;
  o << "J test  null " << ns.describe() << "  alt " << as.describe() << "  split " << r.n1 << "/" << r.n2
    << " (seed " << r.split_seed << ")\n"
    << "theta " << num(r.theta_hat) << "  t " << num(r.t_stat) << "  df " << num(r.df) << "  p " << num(r.p_value)
    << "\n";
  emit(a.c, o.str());
}

// ---- power ---------------------------------------------------------------

struct PowerArgs {
  Common c;
  std::string test = "0v1";
  std::size_t n = 100;
  std::size_t reps = 500;
  std::string beta0 = "0";
  double noise = 0.1;
  std::uint64_t seed = 1;
  double lambda = std::nan("");
  bool ocv = false;
  double level = 0.05;
};

void cmd_power(const PowerArgs& a, unsigned threads) {
  const TestKind kind = parse_test_kind(a.test);
  SimConfig cfg;
  cfg.n = a.n;
  cfg.reps = a.reps;
  cfg.beta0_grid = parse_list(a.beta0, "beta0");
  cfg.noise_sd = a.noise;
  cfg.seed = a.seed;
  cfg.lambda_policy = a.ocv ? LambdaPolicy::cross_validated()
                            : LambdaPolicy::fixed(std::isnan(a.lambda) ? kLambdaFloor : a.lambda);
  cfg.level = a.level;
  cfg.coef_basis = basis_or_usage(a.c.basis);
  cfg.threads = threads;
  const PowerTable t = power_study(cfg, kind);
  for (const PowerRow& r : t.rows) {
    if (r.failures > 0) {
      std::cerr << "warning: " << r.failures << " of " << r.reps << " replications failed at beta0 = " << num(r.beta0)
                << "\n";
    }
  }
  if (a.c.json) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "power";
    j["n"] = cfg.n;
    j["noise_sd"] = cfg.noise_sd;
    j["level"] = cfg.level;
    j["basis"] = cfg.coef_basis.describe();
    j["rows"] = ordered_json::array();
    for (const PowerRow& r : t.rows) {
      j["rows"].push_back({{"test_kind", to_string(r.test_kind)},
                           {"lambda_policy", r.lambda_policy},
                           {"beta0", r.beta0},
                           {"reject1", r.reject1},
                           {"reject2", r.reject2},
                           {"correct", r.correct},
                           {"reps", r.reps},
                           {"seed", r.seed},
                           {"failures", r.failures}});
    }
    emit(a.c, j.dump(2) + "\n");
    return;
  }
  emit(a.c, t.to_csv());
}

// ---- ingest-check --------------------------------------------------------

void cmd_ingest_check(const Common& c) {
  const Dataset ds = ingest_wide_csv(c.data);
  if (c.json) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "ingest-check";
    j["n"] = ds.n();
    j["m"] = ds.m();
    j["q"] = ds.scalar_names.size();
    j["response"] = ds.response_name;
    j["scalars"] = ds.scalar_names;
    j["axis"] = axis_json(ds);
    emit(c, j.dump(2) + "\n");
    return;
  }
  std::ostringstream o;
  o << "curves " << ds.n() << "  points " << ds.m() << "  abscissae " << num(ds.abscissae.front()) << " .. "
    << num(ds.abscissae.back()) << "\n"
    << "response " << ds.response_name << "\n"
    << "scalars " << ds.scalar_names.size();
  for (const auto& s : ds.scalar_names) o << " " << s;
  o << "\n";
  emit(c, o.str());
}

void add_common(CLI::App* sub, Common& c, bool needs_data = true) {
  auto* d = sub->add_option("--data", c.data, "WideCSV input file");
  if (needs_data) d->required();
  sub->add_option("--out", c.out, "Write output to this file instead of stdout");
  sub->add_flag("--json", c.json, "Machine-readable JSON output");
}

void add_model(CLI::App* sub, Common& c) {
  sub->add_option("--basis", c.basis, "Coefficient basis: fourier:N or bspline:ORDER:KNOTS")->capture_default_str();
  sub->add_option("--xbasis", c.xbasis, "Basis the curves are projected onto")->capture_default_str();
  sub->add_flag("--no-scalars", c.no_scalars, "Ignore scalar covariate columns");
  sub->add_option("--grid", c.grid, "Comma-separated lambda grid for cross-validation (default 1e-11,...,1e2)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tests for choosing the derivative order of a functional covariate"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for simulations (0 = all cores)")->capture_default_str();
  app.fallthrough();

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Two-stage derivative test on a dataset");
  add_common(test, ta.c);
  add_model(test, ta.c);
  test->add_option("--test", ta.test, "0v1, 1v0 or 0v2")->check(CLI::IsMember({"0v1", "1v0", "0v2"}))->capture_default_str();
  auto* tl = test->add_option("--lambda", ta.lambda, "Fixed smoothing parameter")->check(CLI::NonNegativeNumber);
  test->add_flag("--ocv", ta.ocv, "Choose lambda by leave-one-out cross-validation (default)")->excludes(tl);
  test->add_option("--level", ta.level, "Test level")->check(CLI::Bound(1e-12, 1.0 - 1e-12))->capture_default_str();

  CurveArgs ca;
  auto* pcurve = app.add_subcommand("pcurve", "Stage p-values and OCV score across the --grid lambdas (CSV)");
  add_common(pcurve, ca.c);
  add_model(pcurve, ca.c);
  pcurve->add_option("--test", ca.test, "0v1, 1v0 or 0v2")->check(CLI::IsMember({"0v1", "1v0", "0v2"}))->capture_default_str();

  JArgs ja;
  auto* jtest = app.add_subcommand("jtest", "J test between two fitted models");
  add_common(jtest, ja.c);
  add_model(jtest, ja.c);
  jtest->add_option("--null", ja.null_spec, "Null model: nw:K, flm:K, fplm:K or semi:K")->capture_default_str();
  jtest->add_option("--alt", ja.alt_spec, "Alternative model")->capture_default_str();
  jtest->add_option("--frac", ja.frac, "Training fraction")->check(CLI::Bound(1e-9, 1.0 - 1e-9));
  jtest->add_option("--seed", ja.seed, "Split seed")->capture_default_str();
  jtest->add_flag("--free-null", ja.free_null, "Estimate a coefficient on the null fit as well");

  PowerArgs pa;
  auto* power = app.add_subcommand("power", "Simulated rejection rates (CSV)");
  add_common(power, pa.c, false);
  power->add_option("--basis", pa.c.basis, "Coefficient basis")->capture_default_str();
  power->add_option("--test", pa.test, "0v1, 1v0 or 0v2")->check(CLI::IsMember({"0v1", "1v0", "0v2"}))->capture_default_str();
  power->add_option("--n", pa.n, "Curves")->check(CLI::Range(10, 100000))->capture_default_str();
  power->add_option("--reps", pa.reps, "Replications per beta0")->check(CLI::Range(1, 10000000))->capture_default_str();
  power->add_option("--beta0", pa.beta0, "Comma-separated beta0 values")->capture_default_str();
  power->add_option("--noise", pa.noise, "Noise standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
  power->add_option("--seed", pa.seed, "Seed")->capture_default_str();
  auto* pl = power->add_option("--lambda", pa.lambda, "Fixed smoothing parameter (default 1e-11)")->check(CLI::NonNegativeNumber);
  power->add_flag("--ocv", pa.ocv, "Choose lambda by OCV in every replication")->excludes(pl);
  power->add_option("--level", pa.level, "Test level")->check(CLI::Bound(1e-12, 1.0 - 1e-12))->capture_default_str();

  Common ic;
  auto* ingest = app.add_subcommand("ingest-check", "Validate and summarize a WideCSV file");
  add_common(ingest, ic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*test) cmd_test(ta);
    if (*pcurve) cmd_pcurve(ca);
    if (*jtest) cmd_jtest(ja);
    if (*power) cmd_power(pa, threads);
    if (*ingest) cmd_ingest_check(ic);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
