#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "overid/cli.hpp"
#include "overid/error.hpp"
#include "overid/estimators.hpp"
#include "overid/experiments.hpp"
#include "overid/io.hpp"
#include "overid/partial_mle.hpp"
#include "overid/semiparam.hpp"

namespace overid::cli {

namespace {

using Json = nlohmann::ordered_json;

// Options shared by every command. Each command owns its copy so a config
// file given to one subcommand cannot leak into another.
struct Common {
  std::uint64_t seed = 0;
  std::string params = "default";
  std::string output;
  std::string report;
  unsigned threads = 0;
  bool dry_run = false;
  std::string config;
};

struct Options {
  Common common;
  // simulate
  std::size_t n = 1000;
  std::string schema = "full";
  bool binary = false;
  // estimate / if-estimate / bootstrap / mle-partial
  std::string input;
  std::string method = "all";
  std::string variant = "all";
  bool center = false;
  double clip = 0.01;
  double ratio_cap = 100.0;
  std::size_t b = 1000;
  std::optional<double> truth;
  std::vector<std::string> estimators{"backdoor", "frontdoor", "combined"};
  bool partial = false;
  std::string confounder_input;
  std::string mediator_input;
  std::size_t p = 0;
  std::size_t bootstrap_reps = 100;
  double tol = 1e-8;
  int max_iter = 500;
  bool multi_start = false;
  // compare / cramer-rao
  double grid = 0.01;
  std::optional<double> k;
  // mc-validate
  std::string mode = "mse";
  std::size_t reps = 200;
  std::vector<std::size_t> n_values;
  std::size_t draws = 50;
  // ihdp-gen
  std::string covariates;
  std::size_t rows = 747;
  std::size_t cols = 25;
  std::string setting = "both";
  std::string emit_data;
  std::string emit_covariates;
};

Json params_json(const ScmParams& p) {
  return Json{{"a", p.a},           {"b", p.b},           {"c", p.c},
              {"d", p.d},           {"var_uw", p.var_uw}, {"var_ux", p.var_ux},
              {"var_um", p.var_um}, {"var_uy", p.var_uy}};
}

Json theta_json(const ThetaVec& t) {
  Json j;
  const Eigen::VectorXd v = t.to_vector();
  for (int i = 0; i < ThetaVec::kDim; ++i) j[ThetaVec::names()[static_cast<std::size_t>(i)]] = v(i);
  return j;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json theory_json(const VarianceTheory& t) {
  Json j;
  if (const auto* iv = std::get_if<Interval>(&t.finite_sample)) {
    j["finite_sample"] = Json{{"lower", iv->lower}, {"upper", iv->upper}};
  } else {
    j["finite_sample"] = std::get<double>(t.finite_sample);
  }
  j["asymptotic_normalized"] = t.asymptotic_normalized;
  return j;
}

Json row_json(const McRow& r) {
  Json j{{"estimator", r.estimator}, {"n", r.n},
         {"reps", r.reps},           {"excluded", r.excluded},
         {"flagged", r.flagged},     {"seed", r.seed},
         {"truth", r.truth},         {"mean", number_or_null(r.mean)},
         {"variance", number_or_null(r.variance)}, {"mse", number_or_null(r.mse)},
         {"mse_se", number_or_null(r.mse_se)}};
  if (r.theory_variance) j["theory_variance"] = *r.theory_variance;
  if (r.theory_interval) {
    j["theory_interval"] = Json{{"lower", r.theory_interval->lower}, {"upper", r.theory_interval->upper}};
  }
  return j;
}

Json summary_json(const McSummary& s) {
  Json j{{"seed", s.seed}, {"rows", Json::array()}};
  for (const auto& r : s.rows) j["rows"].push_back(row_json(r));
  if (!s.mape.empty()) {
    j["mape"] = Json::array();
    for (const auto& m : s.mape) {
      Json mj{{"estimator", m.estimator}, {"n", m.n},
              {"draws", m.draws},         {"reps", m.reps},
              {"mape_mean", m.mape_mean}, {"mape_std", number_or_null(m.mape_std)}};
      if (m.inside_fraction) mj["inside_fraction"] = *m.inside_fraction;
      j["mape"].push_back(mj);
    }
    j["resampled_draws"] = s.resampled_draws;
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Config, "cannot write '" + path + "'");
  f << text;
}

template <typename Fn>
std::string to_string_with(Fn fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

void emit_summary_csv(const Options& o, const McSummary& s) {
  if (!o.common.output.empty()) {
    write_text(o.common.output, to_string_with([&](std::ostream& os) { write_summary_csv(os, s); }));
  }
}

// Each command fills `results` and `warnings`; params are echoed when used.
struct Report {
  Json results = Json::object();
  Json warnings = Json::array();
  std::optional<ScmParams> params;
  bool suppress = false;  // primary artifact already went to stdout
};

void cmd_simulate(const Options& o, Report& rep, std::ostream& out) {
  const ScmParams p = parse_params(o.common.params);
  rep.params = p;
  Dataset d = o.binary ? sample_binary_treatment(p, o.n, o.common.seed) : sample(p, o.n, o.common.seed);
  if (o.schema == "confounder-only") d = restrict(d, Schema::ConfounderOnly);
  else if (o.schema == "mediator-only") d = restrict(d, Schema::MediatorOnly);
  else if (o.schema != "full") throw Error(ErrorCode::Config, "unknown schema '" + o.schema + "'");
  if (o.common.output.empty() || o.common.output == "-") {
    write_dataset_csv(out, d);
    rep.suppress = true;
    return;
  }
  write_dataset_csv(o.common.output, d);
  rep.results = Json{{"rows", d.size()}, {"schema", std::string(to_string(d.schema()))},
                     {"binary_treatment", o.binary}, {"path", o.common.output}};
}

Json effect_json(const EffectReport& r) {
  Json j{{"method", std::string(to_string(r.method))}, {"estimate", r.estimate}, {"n", r.n}};
  if (r.theory) j["theory"] = theory_json(*r.theory);
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

void cmd_estimate(const Options& o, Report& rep, bool params_given) {
  Dataset d = read_dataset_csv(o.input);
  if (o.center) d = center(d);
  std::optional<ScmParams> p;
  if (params_given) {
    p = parse_params(o.common.params);
    rep.params = p;
  }
  std::vector<Method> methods;
  if (o.method == "all") {
    if (d.has_w()) methods.push_back(Method::Backdoor);
    if (d.has_m()) methods.push_back(Method::Frontdoor);
    if (d.has_w() && d.has_m()) methods.push_back(Method::Combined);
  } else {
    methods.push_back(parse_method(o.method));
  }
  rep.results["estimates"] = Json::array();
  for (Method m : methods) {
    const EffectReport r = estimate(m, d, p);
    rep.results["estimates"].push_back(effect_json(r));
  }
  rep.results["n"] = d.size();
  rep.results["centered"] = o.center;
}

template <typename Fn>
void try_item(Report& rep, const char* key, Fn fn) {
  try {
    rep.results[key] = fn();
  } catch (const Error& e) {
    rep.results[key] = nullptr;
    rep.warnings.push_back(std::string(key) + ": " + std::string(to_string(e.code())) + ": " + e.what());
  }
}

void cmd_compare(const Options& o, Report& rep) {
  const ScmParams p = parse_params(o.common.params);
  rep.params = p;
  const std::size_t n = o.n;
  rep.results["n"] = n;
  rep.results["true_effect"] = true_effect(p);
  try_item(rep, "backdoor", [&] { return theory_json(backdoor_variance(p, n)); });
  try_item(rep, "frontdoor", [&] { return theory_json(frontdoor_variance(p, n)); });
  try_item(rep, "combined", [&] { return theory_json(combined_variance(p, n)); });
  try_item(rep, "variance_ratio", [&] { return Json(variance_ratio(p, n)); });
  try_item(rep, "preferred_single", [&] {
    const auto m = preferred_single_estimator(p, n);
    return m ? Json(std::string(to_string(*m))) : Json("tie");
  });
  try_item(rep, "ideal_mediator_frontdoor", [&] { return Json(ideal_mediator_frontdoor(p, n)); });
  try_item(rep, "ideal_mediator_combined", [&] { return Json(ideal_mediator_combined(p)); });
  try_item(rep, "dominance_threshold_backdoor",
           [&] { return Json(dominance_threshold(p, Method::Backdoor)); });
  try_item(rep, "dominance_threshold_frontdoor",
           [&] { return Json(dominance_threshold(p, Method::Frontdoor)); });
  try_item(rep, "equal_variance_b", [&] { return Json(equal_variance_b(p, n)); });
  try_item(rep, "combined_dominance_ratio_bound",
           [&] { return Json(combined_dominance_ratio_bound(p, n)); });
}

void cmd_mc_validate(const Options& o, Report& rep, bool params_given) {
  McConfig c;
  c.reps = o.reps;
  c.seed = o.common.seed;
  c.threads = o.common.threads;
  c.draws = o.draws;
  c.mle_bootstrap_reps = o.bootstrap_reps;
  if (!o.n_values.empty()) c.n_values = o.n_values;
  McSummary s;
  if (o.mode == "mape") {
    if (params_given) {
      c.fixed = parse_params(o.common.params);
      rep.params = c.fixed;
    }
    s = mape_experiment(c);
  } else if (o.mode == "mse" || o.mode == "partial") {
    const ScmParams p = parse_params(o.common.params);
    rep.params = p;
    if (o.n_values.empty()) c.n_values = o.mode == "mse" ? std::vector<std::size_t>{100, 500, 1000}
                                                          : std::vector<std::size_t>{200, 1000, 4000};
    s = o.mode == "mse" ? mse_comparison(c, p) : partial_mse_comparison(c, p);
    const char* other = o.mode == "mse" ? "combined" : "partial-mle";
    Json gaps = Json::array();
    for (std::size_t n : c.n_values) {
      for (const char* single : {"backdoor", "frontdoor"}) {
        const PairedGap g = paired_gap(s.row(other, n), s.row(single, n));
        gaps.push_back(Json{{"n", n}, {"lhs", other}, {"rhs", single}, {"mse_gap", g.mean},
                            {"se", g.se}, {"z", g.z()}});
      }
    }
    rep.results["paired_gaps"] = gaps;
  } else {
    throw Error(ErrorCode::Config, "unknown mode '" + o.mode + "' (mape, mse, partial)");
  }
  rep.results["mode"] = o.mode;
  rep.results["summary"] = summary_json(s);
  emit_summary_csv(o, s);
}

void cmd_cramer_rao(const Options& o, Report& rep) {
  const ScmParams p = parse_params(o.common.params);
  rep.params = p;
  const ThetaVec t = ThetaVec::from_params(p);
  if (o.k) {
    rep.results["k"] = *o.k;
    rep.results["ve"] = cramer_rao_ve(t, *o.k);
    return;
  }
  const OptimalK ok = optimal_k(t, o.grid);
  rep.results["grid"] = o.grid;
  rep.results["k_star"] = ok.k_star;
  rep.results["ve_star"] = ok.ve_star;
  rep.results["points"] = ok.curve.size();
  if (!o.common.output.empty()) {
    write_text(o.common.output, to_string_with([&](std::ostream& os) { write_curve_csv(os, ok); }));
  }
}

void cmd_mle_partial(const Options& o, Report& rep) {
  std::optional<PartialData> pd;
  if (!o.input.empty()) {
    const Dataset d = read_dataset_csv(o.input);
    if (d.schema() != Schema::Full) {
      throw Error(ErrorCode::Schema, "mle-partial --input needs columns x, y, w, m to split");
    }
    pd.emplace(PartialData::split(d, o.p ? o.p : d.size() / 2));
  } else if (!o.confounder_input.empty() && !o.mediator_input.empty()) {
    pd.emplace(read_dataset_csv(o.confounder_input), read_dataset_csv(o.mediator_input));
  } else {
    throw Error(ErrorCode::Config, "give --input, or both --confounder and --mediator");
  }
  MleConfig mc;
  mc.tol = o.tol;
  mc.max_iter = o.max_iter;
  mc.bootstrap_reps = o.bootstrap_reps;
  mc.seed = o.common.seed;
  mc.multi_start = o.multi_start;
  const MleResult r = mle_fit(*pd, mc);
  rep.results = Json{{"p", pd->p()},
                     {"q", pd->q()},
                     {"k", pd->k()},
                     {"estimate", r.theta.e},
                     {"theta", theta_json(r.theta)},
                     {"initial_theta", theta_json(r.initial)},
                     {"loglik", r.loglik},
                     {"init_loglik", r.init_loglik},
                     {"converged", r.converged},
                     {"iterations", r.iterations},
                     {"grad_norm", r.grad_norm}};
  if (!r.converged) rep.warnings.push_back("optimizer did not converge; best iterate reported");
  try_item(rep, "backdoor_block1", [&] { return Json(backdoor_point(pd->confounder_block())); });
  try_item(rep, "frontdoor_block2",
           [&] { return Json(frontdoor_parts(pd->mediator_block()).product()); });
}

void cmd_if_estimate(const Options& o, Report& rep) {
  const Dataset d = read_dataset_csv(o.input);
  std::vector<IfVariant> variants;
  if (o.variant == "all") {
    variants = {IfVariant::Frontdoor, IfVariant::Fulcher, IfVariant::Restricted,
                IfVariant::RestrictedDensity};
  } else {
    variants.push_back(parse_if_variant(o.variant));
  }
  IfOptions opt;
  opt.propensity_clip = o.clip;
  opt.ratio_cap = o.ratio_cap;
  rep.results["estimates"] = Json::array();
  for (IfVariant v : variants) {
    const IfReport r = if_ate(d, v, opt);
    rep.results["estimates"].push_back(Json{{"variant", std::string(to_string(v))},
                                            {"psi_treated", r.psi_treated},
                                            {"psi_control", r.psi_control},
                                            {"ate", r.ate},
                                            {"std_error", r.std_error},
                                            {"trimmed", r.trimmed},
                                            {"clipped", r.clipped}});
  }
  rep.results["n"] = d.size();
}

void cmd_ihdp(const Options& o, Report& rep) {
  const Covariates cov = o.covariates.empty()
                             ? synthetic_ihdp_covariates(o.rows, o.cols, o.common.seed)
                             : Covariates{standardize(read_covariates_csv(o.covariates).w),
                                          read_covariates_csv(o.covariates).x};
  if (!o.emit_covariates.empty()) {
    write_text(o.emit_covariates,
               to_string_with([&](std::ostream& os) { write_covariates_csv(os, cov); }));
  }
  std::vector<IhdpSetting> settings;
  if (o.setting == "both") settings = {ihdp_setting("S1"), ihdp_setting("S2")};
  else settings = {ihdp_setting(o.setting)};
  McSummary all;
  all.seed = o.common.seed;
  rep.results["rows"] = cov.w.rows();
  rep.results["covariates"] = cov.w.cols();
  rep.results["treated"] = cov.x.sum();
  rep.results["settings"] = Json::array();
  for (const auto& s : settings) {
    McSummary m = ihdp_protocol(cov, s, o.reps, o.common.seed, o.common.threads);
    Json sj{{"setting", s.label}, {"a", s.a}, {"c", s.c}, {"sigma_um", s.sigma_um},
            {"summary", summary_json(m)}};
    rep.results["settings"].push_back(sj);
    for (auto& r : m.rows) {
      r.estimator = s.label + ":" + r.estimator;
      all.rows.push_back(std::move(r));
    }
  }
  emit_summary_csv(o, all);
  if (!o.emit_data.empty()) {
    // One replicate of the first setting, for inspection or external tools.
    const IhdpSetting& s = settings.front();
    NormalStream gen(o.common.seed);
    Eigen::VectorXd b(cov.w.cols());
    static constexpr double kCdf[] = {0.5, 0.7, 0.85, 0.95, 1.0};
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double u = gen.uniform();
      int v = 0;
      while (v < 4 && u >= kCdf[v]) ++v;
      b(j) = v;
    }
    const auto n = cov.w.rows();
    Eigen::VectorXd m(n), y(n);
    const Eigen::VectorXd wb = cov.w * b;
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i) = s.c * cov.x(i) + gen(s.sigma_um);
      y(i) = s.a * m(i) + wb(i) + gen.standard();
    }
    write_dataset_csv(o.emit_data, Dataset::full(cov.x, y, cov.w, m));
  }
}

void cmd_bootstrap(const Options& o, Report& rep) {
  const Dataset d = read_dataset_csv(o.input);
  BootstrapConfig c;
  c.b = o.b;
  c.seed = o.common.seed;
  c.truth = o.truth;
  c.center = o.center;
  c.partial = o.partial;
  c.threads = o.common.threads;
  c.estimators.clear();
  for (const auto& e : o.estimators) c.estimators.push_back(parse_estimator(e));
  const McSummary s = bootstrap_eval(d, c);
  rep.results["b"] = o.b;
  rep.results["summary"] = summary_json(s);
  for (const auto& r : s.rows) {
    if (r.excluded) {
      rep.warnings.push_back(r.estimator + ": " + std::to_string(r.excluded) +
                             " bootstrap iterations failed and were excluded");
    }
  }
  emit_summary_csv(o, s);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Flat 'name = value' file; flags on the command line win");
  sub->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  sub->add_option("--params", c.params,
                  "Parameter set: default, fig3a, fig3b, f2-case1..3, or a=..,b=..")
      ->capture_default_str();
  sub->add_option("-o,--output", c.output, "Primary output file (CSV)");
  sub->add_option("--report", c.report, "Write the JSON report here instead of stdout");
  sub->add_option("--threads", c.threads, "Worker threads (0: OVERID_THREADS or all cores)")
      ->capture_default_str();
  sub->add_flag("--dry-run", c.dry_run, "Print the resolved configuration and exit");
}

Json resolved_config(const CLI::App* sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "dry-run") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() > 1) j[name] = res;
      else j[name] = res.empty() ? std::string("true") : res.back();
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Expands `--config FILE` into ordinary `--name value` arguments placed right
// after the subcommand name. Names already given on the command line are
// skipped, so explicit flags win; unknown names fail later in the parser.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config file " + path);
  auto given = [&](const std::string& name) {
    for (const std::string& a : args) {
      if (a == "--" + name || a.rfind("--" + name + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> injected;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, path + ":" + std::to_string(lineno) + ": expected name = value");
    }
    const std::string name = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    if (name.empty() || given(name)) continue;
    std::vector<std::string> words;
    std::istringstream ws(value);
    for (std::string w; ws >> w;) words.push_back(w);
    // A single word binds with '=' so boolean flags accept true / false.
    if (words.size() == 1) {
      injected.push_back("--" + name + "=" + words.front());
    } else {
      injected.push_back("--" + name);
      injected.insert(injected.end(), words.begin(), words.end());
    }
  }
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

void print_error(std::ostream& err, ErrorCode code, const std::string& msg) {
  err << Json{{"error", Json{{"code", std::string(to_string(code))}, {"message", msg}}}}.dump()
      << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal effect estimation with confounders and mediators", "overid"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Sample a dataset from the linear Gaussian model");
  add_common(sim, o.common);
  sim->add_option("--n", o.n, "Rows")->capture_default_str();
  sim->add_option("--schema", o.schema, "full, confounder-only or mediator-only")->capture_default_str();
  sim->add_flag("--binary", o.binary, "Binarize the treatment: x = 1{d w + u_x > 0}");

  auto* est = app.add_subcommand("estimate", "Backdoor, frontdoor and combined estimates from a CSV");
  add_common(est, o.common);
  est->add_option("--input", o.input, "Dataset CSV")->required();
  est->add_option("--method", o.method, "backdoor, frontdoor, combined or all")->capture_default_str();
  est->add_flag("--center", o.center, "Center every column before estimation");

  auto* cmp = app.add_subcommand("compare", "Closed-form variance comparison at given parameters");
  add_common(cmp, o.common);
  cmp->add_option("--n", o.n, "Sample size")->capture_default_str();

  auto* mc = app.add_subcommand("mc-validate", "Monte Carlo validation of the variance theory");
  add_common(mc, o.common);
  mc->add_option("--mode", o.mode, "mape, mse or partial")->capture_default_str();
  mc->add_option("--reps", o.reps, "Replications per cell")->capture_default_str();
  mc->add_option("--n", o.n_values, "Sample sizes")->expected(1, -1);
  mc->add_option("--draws", o.draws, "Prior parameter draws (mape mode)")->capture_default_str();
  mc->add_option("--bootstrap-reps", o.bootstrap_reps, "Initializer bootstrap (partial mode)")
      ->capture_default_str();

  auto* cr = app.add_subcommand("cramer-rao", "Cramer-Rao variance of the partial-data MLE over k");
  add_common(cr, o.common);
  cr->add_option("--grid", o.grid, "Grid step for k")->capture_default_str();
  cr->add_option("--k", o.k, "Evaluate a single k instead of the grid");

  auto* mle = app.add_subcommand("mle-partial", "Maximum likelihood from a confounder and a mediator dataset");
  add_common(mle, o.common);
  mle->add_option("--input", o.input, "Full CSV to split into two blocks");
  mle->add_option("--p", o.p, "Rows in the confounder block when splitting (default half)");
  mle->add_option("--confounder", o.confounder_input, "CSV with x, y, w");
  mle->add_option("--mediator", o.mediator_input, "CSV with x, y, m");
  mle->add_option("--bootstrap-reps", o.bootstrap_reps, "Initializer bootstrap resamples")
      ->capture_default_str();
  mle->add_option("--tol", o.tol, "Relative gradient tolerance")->capture_default_str();
  mle->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
  mle->add_flag("--multi-start", o.multi_start, "Also try 8 jittered starting points");

  auto* ife = app.add_subcommand("if-estimate", "Influence-function estimates for a binary treatment");
  add_common(ife, o.common);
  ife->add_option("--input", o.input, "Dataset CSV with x in {0,1}")->required();
  ife->add_option("--variant", o.variant, "frontdoor, fulcher, restricted, restricted-density or all")
      ->capture_default_str();
  ife->add_option("--clip", o.clip, "Propensity clip")->capture_default_str();
  ife->add_option("--ratio-cap", o.ratio_cap, "Density-ratio trimming cap")->capture_default_str();

  auto* ih = app.add_subcommand("ihdp-gen", "Semi-synthetic protocol on real or synthetic covariates");
  add_common(ih, o.common);
  ih->add_option("--covariates", o.covariates, "CSV with x and w1..wk (default: synthetic)");
  ih->add_option("--rows", o.rows, "Synthetic covariate rows")->capture_default_str();
  ih->add_option("--cols", o.cols, "Synthetic covariate columns")->capture_default_str();
  ih->add_option("--setting", o.setting, "S1, S2 or both")->capture_default_str();
  ih->add_option("--reps", o.reps, "Replications")->capture_default_str();
  ih->add_option("--emit-data", o.emit_data, "Write one generated dataset here");
  ih->add_option("--emit-covariates", o.emit_covariates, "Write the covariate table here");

  auto* bs = app.add_subcommand("bootstrap", "Pairs-bootstrap variance and MSE on a CSV dataset");
  add_common(bs, o.common);
  bs->add_option("--input", o.input, "Dataset CSV")->required();
  bs->add_option("--b", o.b, "Bootstrap iterations")->capture_default_str();
  bs->add_option("--truth", o.truth, "True effect, enables MSE");
  bs->add_option("--estimators", o.estimators, "Estimators to evaluate")->expected(1, -1);
  bs->add_flag("--center", o.center, "Center each resample for the linear estimators");
  bs->add_flag("--partial", o.partial, "Also split each resample in half for the partial MLE");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return exit_status(e.code());
  }
  // CLI11 wants argv order reversed when given a vector.
  std::vector<std::string> rev(expanded.rbegin(), expanded.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, ErrorCode::Config, e.what());
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const bool params_given = sub->get_option("--params")->count() > 0;

  if (o.common.dry_run) {
    out << Json{{"command", name}, {"dry_run", true}, {"config", resolved_config(sub)}}.dump(2)
        << '\n';
    return 0;
  }

  Report rep;
  try {
    if (name == "simulate") cmd_simulate(o, rep, out);
    else if (name == "estimate") cmd_estimate(o, rep, params_given);
    else if (name == "compare") cmd_compare(o, rep);
    else if (name == "mc-validate") cmd_mc_validate(o, rep, params_given);
    else if (name == "cramer-rao") cmd_cramer_rao(o, rep);
    else if (name == "mle-partial") cmd_mle_partial(o, rep);
    else if (name == "if-estimate") cmd_if_estimate(o, rep);
    else if (name == "ihdp-gen") cmd_ihdp(o, rep);
    else if (name == "bootstrap") cmd_bootstrap(o, rep);
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return exit_status(e.code());
  }
  if (rep.suppress) return 0;

  Json report{{"command", name},
              {"seed", o.common.seed},
              {"params", rep.params ? params_json(*rep.params) : Json(nullptr)},
              {"results", rep.results},
              {"warnings", rep.warnings}};
  const std::string text = report.dump(2) + "\n";
  if (o.common.report.empty()) {
    out << text;
  } else {
    try {
      write_text(o.common.report, text);
    } catch (const Error& e) {
      print_error(err, e.code(), e.what());
      return exit_status(e.code());
    }
  }
  return 0;
}

}  // namespace overid::cli
