// lsistab command-line driver.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsistab/lsistab.hpp"

using namespace lsistab;

namespace {

struct Config {
  std::string command;
  json measure;
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;
  bool strict = false;
  std::string format = "json";
  std::string out;
  // budgets
  long paths = 10000;
  int steps = 512;
  long samples = 0;  // 0: command default
  double quad_tol = 1e-8;
  double epsilon = 1e-3;
  // command specific
  std::string theorem = "dim";
  std::string family = "isotropic";
  std::vector<double> ks;
  bool monte_carlo = false;
  long support = 2;
  double p = 2.0;
  double wasserstein_c = kDefaultWassersteinConstant;
  std::string a_path, b_path;
};

struct Outcome {
  json result;
  std::optional<CsvTable> table;
  bool holds = true;
  std::string summary;
};

template <class T>
void take(const json& j, const char* key, T& dst, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    detail::field_error(path + key, "has the wrong type");
  }
}

void load_config(const std::string& file, Config& c) {
  const json j = read_json_file(file);
  if (!j.is_object()) detail::field_error("<root>", "expected an object");
  take(j, "command", c.command, "");
  if (j.contains("measure")) c.measure = j.at("measure");
  take(j, "seed", c.seed, "");
  take(j, "threads", c.threads, "");
  take(j, "strict", c.strict, "");
  take(j, "theorem", c.theorem, "");
  take(j, "family", c.family, "");
  take(j, "k", c.ks, "");
  take(j, "monte_carlo", c.monte_carlo, "");
  take(j, "support", c.support, "");
  take(j, "p", c.p, "");
  take(j, "wasserstein_c", c.wasserstein_c, "");
  take(j, "a", c.a_path, "");
  take(j, "b", c.b_path, "");
  if (j.contains("budgets")) {
    const json& b = j.at("budgets");
    if (!b.is_object()) detail::field_error("budgets", "expected an object");
    take(b, "paths", c.paths, "budgets.");
    take(b, "steps", c.steps, "budgets.");
    take(b, "samples", c.samples, "budgets.");
    take(b, "quad_tol", c.quad_tol, "budgets.");
    take(b, "epsilon", c.epsilon, "budgets.");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    if (!o.is_object()) detail::field_error("output", "expected an object");
    take(o, "format", c.format, "output.");
    take(o, "path", c.out, "output.");
  }
}

void validate(const Config& c) {
  auto bad = [](const std::string& field, const std::string& msg) { detail::field_error(field, msg); };
  if (c.paths < 1) bad("budgets.paths", "must be positive");
  if (c.steps < 1) bad("budgets.steps", "must be positive");
  if (c.samples < 0) bad("budgets.samples", "must be positive");
  if (!(c.quad_tol > 0)) bad("budgets.quad_tol", "must be positive");
  if (!(c.epsilon > 0)) bad("budgets.epsilon", "must be positive");
  if (c.threads < 0) bad("threads", "must be non-negative");
  if (!(c.wasserstein_c > 0)) bad("wasserstein_c", "must be positive");
  if (c.format != "json" && c.format != "csv" && c.format != "both") bad("output.format", "expected json, csv or both");
}

GaussianMixture measure_of(const Config& c) {
  if (c.measure.is_null()) detail::field_error("measure", "missing (use --measure FILE|JSON or the config file)");
  return parse_mixture(c.measure);
}

Budget budget_of(const Config& c) {
  Budget b;
  b.quad_tol = c.quad_tol;
  b.seed = c.seed;
  b.threads = c.threads;
  return b;
}

EnsembleOptions ensemble_of(const Config& c) {
  EnsembleOptions o;
  o.paths = c.paths;
  o.steps = c.steps;
  o.epsilon = c.epsilon;
  o.seed = c.seed;
  o.threads = c.threads;
  return o;
}

std::string verdict(bool holds) { return holds ? "holds" : "VIOLATED"; }

std::string bool_cell(bool b) { return b ? "1" : "0"; }

// ---------------------------------------------------------------------------

Outcome verify_bounds(const Config& c) {
  const GaussianMixture mu = measure_of(c);
  VerifyOptions o;
  o.budget = budget_of(c);
  o.wasserstein_c = c.wasserstein_c;
  if (c.samples > 0) o.transport.points = c.samples;
  const auto reports = verify_all(mu, o);
  Outcome out;
  out.result["measure"] = to_json(mu);
  out.result["reports"] = json::array();
  CsvTable t({"name", "lhs", "lhs_error", "rhs", "rhs_error", "direction", "slack", "holds", "preconditions_met"});
  int failed = 0, checked = 0;
  for (const auto& r : reports) {
    out.result["reports"].push_back(to_json(r));
    t.add({r.name, format_double(r.lhs.value), format_double(r.lhs.abs_error), format_double(r.rhs.value),
           format_double(r.rhs.abs_error), std::string(to_string(r.direction)), format_double(r.slack), bool_cell(r.holds),
           bool_cell(r.preconditions_met)});
    if (!r.preconditions_met) continue;
    ++checked;
    if (!r.holds) ++failed;
  }
  out.table = std::move(t);
  out.holds = failed == 0;
  out.summary = "verify-bounds: " + std::to_string(checked - failed) + "/" + std::to_string(checked) + " reports hold";
  return out;
}

Outcome simulate_follmer(const Config& c) {
  const GaussianMixture mu = measure_of(c);
  const Budget b = budget_of(c);
  const PathEnsemble e = simulate_ensemble(mu, ensemble_of(c));
  const EnergyIdentities ei = energy_identities(e);
  const FunctionalSummary s = summarize(mu, b);
  const MartingaleReport mr = martingale_diagnostics(e, mu, s.fisher_leb);
  LocalizationOptions lo;
  lo.budget = b;
  const LocalizationReport lr = localization_checks(e, mu, lo);

  const BoundReport entropy_match = make_report("entropy_path_identity", ei.entropy_path, s.H_gamma, Direction::LessEqual);
  BoundReport entropy_eq = entropy_match;
  entropy_eq.slack = -std::abs(ei.entropy_path.value - s.H_gamma.value);
  entropy_eq.holds = std::abs(ei.entropy_path.value - s.H_gamma.value) <= 3 * ei.entropy_path.abs_error + s.H_gamma.abs_error;
  entropy_eq.notes = "two-sided, 3 standard errors";
  BoundReport deficit_eq = make_report("deficit_path_identity", ei.deficit_path, s.deficit, Direction::LessEqual);
  deficit_eq.slack = -std::abs(ei.deficit_path.value - s.deficit.value);
  deficit_eq.holds = std::abs(ei.deficit_path.value - s.deficit.value) <= 3 * ei.deficit_path.abs_error + s.deficit.abs_error;
  deficit_eq.notes = entropy_eq.notes;

  Outcome out;
  json& r = out.result;
  r["measure"] = to_json(mu);
  r["paths"] = e.paths;
  r["steps"] = e.steps();
  r["epsilon"] = e.epsilon;
  r["entropy"] = to_json(s.H_gamma);
  r["deficit"] = to_json(s.deficit);
  r["entropy_path"] = to_json(ei.entropy_path);
  r["deficit_path"] = to_json(ei.deficit_path);
  r["identities"] = {to_json(entropy_eq), to_json(deficit_eq)};
  r["martingale"] = {{"monotonicity_violations", mr.monotonicity_violations},
                     {"worst_mean_v_ratio", number(mr.worst_mean_v_ratio)},
                     {"worst_q_ratio", number(mr.worst_q_ratio)},
                     {"mean_v_ok", mr.mean_v_ok},
                     {"q_ok", mr.q_ok},
                     {"comparison_applicable", mr.comparison_applicable},
                     {"comparison_ok", mr.comparison_ok}};
  r["localization"] = {{"dat_median_residual", number(lr.dat_median_residual)},
                       {"dat_rms_residual", number(lr.dat_rms_residual)},
                       {"integrated_direct", to_json(lr.integrated_direct)},
                       {"integrated_path", to_json(lr.integrated_path)},
                       {"bound", to_json(lr.bound)}};

  CsvTable t({"t", "mean_v_gap", "mean_v_se", "v2", "v2_se", "v2_increment", "v2_increment_se", "q_residual", "q_residual_se",
              "ito_residual", "qq_drift", "qq_drift_se", "dv2dt", "dv2dt_se", "trace_eq2", "trace_m2", "comparison_slack",
              "comparison_error"});
  for (const auto& d : mr.rows)
    t.add(std::vector<double>{d.t, d.mean_v_gap, d.mean_v_se, d.v2, d.v2_se, d.v2_increment, d.v2_increment_se, d.q_residual,
                              d.q_residual_se, d.ito_residual, d.qq_drift, d.qq_drift_se, d.dv2dt, d.dv2dt_se, d.trace_eq2,
                              d.trace_m2, d.comparison_slack, d.comparison_error});
  out.table = std::move(t);
  out.holds = entropy_eq.holds && deficit_eq.holds && mr.mean_v_ok && mr.q_ok && mr.monotonicity_violations == 0 &&
              lr.bound.holds && (!mr.comparison_applicable || mr.comparison_ok);
  out.summary = "simulate-follmer: " + std::to_string(e.paths) + " paths x " + std::to_string(e.steps()) +
                " steps, entropy_path " + format_double(ei.entropy_path.value) + " vs " + format_double(s.H_gamma.value) +
                ", deficit_path " + format_double(ei.deficit_path.value) + " vs " + format_double(s.deficit.value) + ", " +
                verdict(out.holds);
  return out;
}

void add_points(CsvTable& t, const std::vector<const MatrixXd*>& blocks) {
  const Index rows = blocks.front()->rows();
  for (Index i = 0; i < rows; ++i) {
    std::vector<double> row;
    for (const MatrixXd* m : blocks)
      for (Index k = 0; k < m->cols(); ++k) row.push_back((*m)(i, k));
    t.add(row);
  }
}

std::vector<std::string> point_columns(const std::string& prefix, Index n) {
  std::vector<std::string> cols;
  for (Index k = 0; k < n; ++k) cols.push_back(prefix + std::to_string(k));
  return cols;
}

Outcome decompose(const Config& c) {
  if (c.theorem != "dim" && c.theorem != "uncor") detail::field_error("theorem", "expected dim or uncor");
  const GaussianMixture mu = measure_of(c);
  const PathEnsemble e = simulate_ensemble(mu, ensemble_of(c));
  DecompositionOptions o;
  o.budget = budget_of(c);
  o.seed = c.seed;
  if (c.samples > 0) o.points = c.samples;
  Outcome out;
  json& r = out.result;
  r["measure"] = to_json(mu);
  r["theorem"] = c.theorem;
  r["paths"] = e.paths;
  r["steps"] = e.steps();
  if (c.theorem == "dim") {
    const DimDecomposition d = theorem_dim(mu, e, o);
    r["t_star"] = number(d.t_star);
    r["t_used"] = number(d.t_used);
    r["grid_index"] = d.grid_index;
    r["nu_is_mu"] = d.nu_is_mu;
    r["deficit"] = to_json(d.deficit);
    r["w2"] = to_json(d.w2_estimate);
    r["nu_spread"] = number(d.nu_spread);
    r["bound"] = to_json(d.bound_report);
    r["intermediate"] = to_json(d.intermediate);
    CsvTable t(point_columns("nu_", mu.dim()));
    add_points(t, {&d.nu_samples.points()});
    out.table = std::move(t);
    out.holds = d.bound_report.holds && (!d.intermediate.preconditions_met || d.intermediate.holds);
    out.summary = "decompose dim: t_used " + format_double(d.t_used) + ", W2 " + format_double(d.w2_estimate.value) +
                  ", deficit " + format_double(d.deficit.value) + ", " + verdict(out.holds);
  } else {
    const UncorDecomposition d = theorem_uncor(mu, e, o);
    r["inner_product"] = to_json(d.inner_product);
    r["qv_residual"] = number(d.qv_residual);
    r["realized_qv_residual"] = number(d.realized_qv_residual);
    r["projection_defect"] = number(d.projection_defect);
    r["max_pre_location_overshoot"] = number(d.max_pre_location_overshoot);
    r["reconstruction_median"] = number(d.reconstruction_median);
    r["coupling_gap"] = to_json(d.coupling_gap);
    r["w2_nu_gamma"] = to_json(d.w2_nu_gamma);
    r["w2_noise_floor"] = number(d.w2_noise_floor);
    r["deficit"] = to_json(d.deficit);
    r["bound"] = to_json(d.bound);
    r["z_skew_ratio"] = number(d.z_skew_ratio);
    r["z_kurtosis_ratio"] = number(d.z_kurtosis_ratio);
    r["z_radius"] = to_json(d.z_radius);
    r["z_gaussian_ok"] = d.z_gaussian_ok;
    auto cols = point_columns("y_", mu.dim());
    for (auto& s : point_columns("w_", mu.dim())) cols.push_back(s);
    for (auto& s : point_columns("z_", mu.dim())) cols.push_back(s);
    CsvTable t(cols);
    add_points(t, {&d.y_samples.points(), &d.w_samples.points(), &d.z_samples.points()});
    out.table = std::move(t);
    out.holds = d.bound.holds && d.z_gaussian_ok;
    out.summary = "decompose uncor: E<Y,W> " + format_double(d.inner_product.value) + ", [Z]_1 residual " +
                  format_double(d.qv_residual) + ", " + verdict(out.holds);
  }
  return out;
}

Outcome transport(const Config& c) {
  if (!(c.p >= 1)) detail::field_error("p", "must be at least 1");
  MatrixXd a, b;
  std::string source;
  if (!c.a_path.empty() || !c.b_path.empty()) {
    if (c.a_path.empty() || c.b_path.empty()) detail::field_error("a", "both --a and --b are required for point files");
    a = read_points_csv(c.a_path);
    b = read_points_csv(c.b_path);
    source = "points";
  } else {
    // measure against the standard Gaussian on fresh samples
    const GaussianMixture mu = measure_of(c);
    const Index n = c.samples > 0 ? c.samples : 1024;
    a = sample(mu, n, derive_seed(c.seed, 0x7A), 0);
    b = sample(GaussianMixture::standard(mu.dim()), n, derive_seed(c.seed, 0x7A), 1);
    source = "measure";
  }
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::DimensionMismatch, "point sets differ in shape");
  if (a.cols() > 1 && a.rows() > kAssignmentBudget)
    fail(ErrorKind::BudgetExceeded, "exact assignment limited to " + std::to_string(kAssignmentBudget) + " points");
  const EmpiricalMeasure ea(a), eb(b);
  const double w = wp_exact(ea, eb, c.p);
  const std::string method = a.cols() == 1 ? "sorted_1d" : "assignment";
  Outcome out;
  out.result = {{"source", source}, {"points", a.rows()}, {"dim", a.cols()}, {"p", number(c.p)}, {"method", method},
                {"wp", number(w)}};
  CsvTable t({"points", "dim", "p", "method", "wp"});
  t.add({std::to_string(a.rows()), std::to_string(a.cols()), format_double(c.p), method, format_double(w)});
  out.table = std::move(t);
  out.summary = "transport: W_" + format_double(c.p) + " = " + format_double(w) + " (" + method + ", " +
                std::to_string(a.rows()) + " points)";
  return out;
}

Outcome counterexample_sweep(const Config& c) {
  const Family f = parse_family(c.family);
  std::vector<double> ks = c.ks;
  if (ks.empty()) ks = f == Family::variance_blowup ? std::vector<double>{4, 10, 100, 1000} : std::vector<double>{400, 900, 1600, 2500};
  SweepOptions o;
  o.monte_carlo = c.monte_carlo;
  o.budget = budget_of(c);
  o.threads = c.threads;
  if (c.samples > 0) o.points = c.samples;
  const auto rows = sweep(f, ks, o);
  CsvTable t({"k", "n_k", "a", "b", "sigma", "t", "mean", "variance", "deficit_upper", "w_lower_p1", "w2_lower", "tail_ok",
              "tensor_deficit_upper", "tensor_w2_lower", "ratio", "deficit", "deficit_error", "w2sq_translate",
              "w2sq_translate_error", "w1_translate", "w1_translate_error", "w2sq_floor"});
  Outcome out;
  out.result["family"] = std::string(to_string(f));
  out.result["monte_carlo"] = c.monte_carlo;
  out.result["rows"] = json::array();
  auto mc = [](const SweepRow& r, double v) { return r.has_monte_carlo ? format_double(v) : std::string(); };
  for (const auto& r : rows) {
    const FamilyAnalytic& an = r.member.analytic;
    t.add({format_double(r.member.k), std::to_string(r.member.n_k), format_double(an.a), format_double(an.b),
           format_double(an.sigma), format_double(an.t), format_double(an.mean), format_double(an.variance),
           format_double(an.deficit_upper), format_double(an.w_lower_p1), format_double(an.w2_lower), bool_cell(an.tail_ok),
           format_double(r.tensor_deficit_upper), format_double(r.tensor_w2_lower), format_double(r.ratio),
           mc(r, r.deficit.value), mc(r, r.deficit.abs_error), mc(r, r.w2sq_translate.value),
           mc(r, r.w2sq_translate.abs_error), mc(r, r.w1_translate.value), mc(r, r.w1_translate.abs_error),
           mc(r, r.w2sq_floor)});
    json row = {{"k", number(r.member.k)},
                {"n_k", r.member.n_k},
                {"a", number(an.a)},
                {"b", number(an.b)},
                {"sigma", number(an.sigma)},
                {"t", number(an.t)},
                {"mean", number(an.mean)},
                {"variance", number(an.variance)},
                {"deficit_upper", number(an.deficit_upper)},
                {"w_lower_p1", number(an.w_lower_p1)},
                {"w2_lower", number(an.w2_lower)},
                {"tail_ok", an.tail_ok},
                {"tensor_deficit_upper", number(r.tensor_deficit_upper)},
                {"tensor_w2_lower", number(r.tensor_w2_lower)},
                {"ratio", number(r.ratio)}};
    if (r.has_monte_carlo) {
      row["deficit"] = to_json(r.deficit);
      row["w2sq_translate"] = to_json(r.w2sq_translate);
      row["w1_translate"] = to_json(r.w1_translate);
      row["w2sq_floor"] = number(r.w2sq_floor);
    }
    out.result["rows"].push_back(row);
  }
  out.table = std::move(t);
  out.summary = "counterexample-sweep: " + std::string(to_string(f)) + ", " + std::to_string(rows.size()) + " rows" +
                (c.monte_carlo ? " with Monte Carlo columns" : "");
  return out;
}

Outcome probe_question1(const Config& c) {
  const GaussianMixture mu = measure_of(c);
  ProbeOptions o;
  o.budget = budget_of(c);
  if (c.samples > 0) o.samples = c.samples;
  const Question1Record q = question1_probe(mu, c.support, o);
  Outcome out;
  json atoms = json::array();
  auto cols = point_columns("x_", mu.dim());
  cols.insert(cols.begin(), "weight");
  CsvTable t(cols);
  for (const auto& [w, x] : q.p) {
    atoms.push_back({{"w", number(w)}, {"x", to_json(x)}});
    std::vector<double> row{w};
    for (Index k = 0; k < x.size(); ++k) row.push_back(x[k]);
    t.add(row);
  }
  out.result = {{"label", q.label},
                {"status", q.status},
                {"support_size", q.support_size},
                {"p", atoms},
                {"shannon", number(q.shannon)},
                {"fit_cost", number(q.fit_cost)},
                {"w2sq", to_json(q.w2sq)},
                {"w2sq_floor", number(q.w2sq_floor)},
                {"deficit", to_json(q.deficit)},
                {"ratio", number(q.ratio)},
                {"degenerate", q.degenerate},
                {"iterations", q.iterations}};
  out.table = std::move(t);
  out.summary = "probe-question1 (exploratory): support " + std::to_string(q.p.size()) + ", ratio " + format_double(q.ratio) +
                ", status " + q.status;
  return out;
}

Outcome run(const Config& c) {
  if (c.command == "verify-bounds") return verify_bounds(c);
  if (c.command == "simulate-follmer") return simulate_follmer(c);
  if (c.command == "decompose") return decompose(c);
  if (c.command == "transport") return transport(c);
  if (c.command == "counterexample-sweep") return counterexample_sweep(c);
  if (c.command == "probe-question1") return probe_question1(c);
  detail::field_error("command", c.command.empty() ? "missing (give a subcommand)" : "unknown command '" + c.command + "'");
}

std::string with_extension(const std::string& path, const std::string& ext) {
  std::filesystem::path p(path);
  p.replace_extension(ext);
  return p.string();
}

void emit(const Config& c, const Outcome& o) {
  json meta = run_metadata(c.command, c.seed);
  const bool want_json = c.format != "csv", want_csv = c.format != "json" && o.table;
  if (c.format == "csv" && !o.table) fail(ErrorKind::ConfigError, "command has no csv output");
  if (c.out.empty()) {
    if (want_json) std::cout << json_document(meta, o.result);
    if (want_csv) std::cout << o.table->str(meta);
    std::cerr << o.summary << "\n";
    return;
  }
  if (c.format == "both") {
    write_atomic(with_extension(c.out, ".json"), json_document(meta, o.result));
    if (want_csv) write_atomic(with_extension(c.out, ".csv"), o.table->str(meta));
  } else if (want_json) {
    write_atomic(c.out, json_document(meta, o.result));
  } else {
    write_atomic(c.out, o.table->str(meta));
  }
  std::cout << o.summary << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of Gaussian log-Sobolev deficit bounds"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::optional<std::string> config_file, measure, format, out, theorem, family, a_path, b_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, steps;
  std::optional<long> paths, samples, support;
  std::optional<double> quad_tol, epsilon, p, wasserstein_c;
  std::optional<std::vector<double>> ks;
  bool strict = false, monte_carlo = false;

  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "64-bit seed (default 4242424242)");
  app.add_option("--threads", threads, "worker threads (default: all cores)");
  app.add_flag("--strict", strict, "exit 2 when a checked bound fails");
  app.add_option("--out", out, "output path (default: stdout)");
  app.add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));

  auto add_measure = [&](CLI::App* s) { s->add_option("--measure", measure, "mixture JSON, inline or a file path"); };
  auto add_budgets = [&](CLI::App* s) {
    s->add_option("--paths", paths, "simulated paths");
    s->add_option("--steps", steps, "time steps");
    s->add_option("--epsilon", epsilon, "terminal gap of the time grid");
  };

  auto* verify = app.add_subcommand("verify-bounds", "evaluate every bound on one measure");
  add_measure(verify);
  verify->add_option("--samples", samples, "points per sampled Wasserstein estimate");
  verify->add_option("--quad-tol", quad_tol, "quadrature tolerance");
  verify->add_option("--wasserstein-c", wasserstein_c, "constant in the quartic Wasserstein bound (default 0.01)");

  auto* follmer = app.add_subcommand("simulate-follmer", "simulate the bridge and check path identities");
  add_measure(follmer);
  add_budgets(follmer);
  follmer->add_option("--quad-tol", quad_tol, "quadrature tolerance");

  auto* dec = app.add_subcommand("decompose", "build a decomposition from a simulated ensemble");
  add_measure(dec);
  add_budgets(dec);
  dec->add_option("--theorem", theorem, "dim or uncor")->check(CLI::IsMember({"dim", "uncor"}));
  dec->add_option("--samples", samples, "points for the assignment estimate");

  auto* tr = app.add_subcommand("transport", "W_p between two point sets, or a measure and the standard Gaussian");
  tr->add_option("--a", a_path, "CSV file of points")->check(CLI::ExistingFile);
  tr->add_option("--b", b_path, "CSV file of points")->check(CLI::ExistingFile);
  add_measure(tr);
  tr->add_option("--samples", samples, "points drawn when --measure is given");
  tr->add_option("--p", p, "order p >= 1");

  auto* sw = app.add_subcommand("counterexample-sweep", "tabulate a counterexample family");
  sw->add_option("--family", family, "variance_blowup or isotropic")->check(CLI::IsMember({"variance_blowup", "isotropic"}));
  sw->add_option("--k", ks, "family parameters")->delimiter(',');
  sw->add_flag("--monte-carlo", monte_carlo, "add measured deficit and transport columns");
  sw->add_option("--samples", samples, "points per transport estimate");

  auto* probe = app.add_subcommand("probe-question1", "exploratory fit of p * gamma to a measure");
  add_measure(probe);
  probe->add_option("--support", support, "number of atoms (1 to 16)");
  probe->add_option("--samples", samples, "fitting sample size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  Config c;
  try {
    if (config_file) load_config(*config_file, c);
    if (auto* s = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) c.command = s->get_name();
    if (measure) c.measure = json_argument(*measure);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (strict) c.strict = true;
    if (format) c.format = *format;
    if (out) c.out = *out;
    if (paths) c.paths = *paths;
    if (steps) c.steps = *steps;
    if (samples) c.samples = *samples;
    if (quad_tol) c.quad_tol = *quad_tol;
    if (epsilon) c.epsilon = *epsilon;
    if (theorem) c.theorem = *theorem;
    if (family) c.family = *family;
    if (ks) c.ks = *ks;
    if (monte_carlo) c.monte_carlo = true;
    if (support) c.support = *support;
    if (p) c.p = *p;
    if (wasserstein_c) c.wasserstein_c = *wasserstein_c;
    if (a_path) c.a_path = *a_path;
    if (b_path) c.b_path = *b_path;
    validate(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    const Outcome o = run(c);
    emit(c, o);
    if (c.strict && !o.holds) {
      std::cerr << "strict: a checked bound failed\n";
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
