// rhoest: fit, simulate, table and generate subcommands.
//
// Exit codes: 0 success, 1 usage / configuration / I/O error, 2 the requested
// estimator does not exist on the data (fit only).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rhoest/rhoest.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rhoest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNonexistent = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every subcommand and settable from the config file.
struct Experiment {
  std::vector<std::string> scenarios;
  std::vector<std::string> estimators{"rho", "mle", "median", "hinge"};
  std::uint64_t seed = 20240101;
  int replications = 0;
  int quadrature_n = 0;
  int n = 0;
  int threads = 0;
  std::string output_dir = "reports";
  bool timing = false;

  double kappa = kKappa;
  double early_stop = 1.0;
  int max_iters = 100;
  int sup_max_evals = 5000;
  int sup_restarts = 2;
  double sup_sigma0 = 0.3;
  int median_max_evals = 5000;

  std::vector<double> holder_alpha{0.5, 1.0};
  double holder_m = 1.0;
  std::vector<long long> holder_n{250, 500, 1000, 2000};
  int holder_reps = 50;

  SimulationSettings settings() const {
    SimulationSettings st;
    st.seed = seed;
    st.replications = replications;
    st.quadrature_n = quadrature_n;
    st.threads = threads;
    st.rho = rho_config();
    st.median_search.max_evals = median_max_evals;
    return st;
  }

  RhoConfig rho_config() const {
    RhoConfig cfg;
    cfg.kappa = kappa;
    cfg.early_stop = early_stop;
    cfg.max_iters = max_iters;
    cfg.sup_search.max_evals = sup_max_evals;
    cfg.sup_search.restarts = sup_restarts;
    cfg.sup_search.sigma0 = sup_sigma0;
    cfg.seed = seed;
    return cfg;
  }
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Vector& v) {
  json a = json::array();
  for (auto x : v) a.push_back(num(x));
  return a;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void emit(const std::string& out_path, const json& j) {
  if (out_path.empty() || out_path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(out_path, j);
  }
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data;
  std::string scenario;
  std::uint64_t rep = 0;
  std::string estimator = "rho";
  std::string family;
  std::string model;
  int cells = 0;
  double sigma = 1.0;
  std::string out;
};

RegressionModel model_by_name(const std::string& name, int cells, Eigen::Index dim) {
  if (name == "piecewise_constant") {
    if (cells < 1) throw UsageError("--cells is required for the piecewise_constant model");
    if (dim != 1) throw UsageError("piecewise_constant needs one covariate in [0,1]");
    return RegressionModel::piecewise_constant(cells);
  }
  return RegressionModel::from_name(name, static_cast<int>(dim));
}

int cmd_fit(const Experiment& ex, const FitArgs& a) {
  if (a.data.empty() == a.scenario.empty()) throw UsageError("fit: give exactly one of --data or --scenario");
  const Estimator est = estimator_from_string(a.estimator);

  Dataset data;
  std::optional<Scenario> scenario;
  std::string source;
  if (!a.scenario.empty()) {
    scenario = make_scenario(a.scenario);
    if (ex.n > 0) scenario->n = ex.n;
    data = generate(*scenario, ex.seed, a.rep);
    source = a.scenario;
  } else {
    std::ifstream in(a.data);
    if (!in) throw std::runtime_error("cannot open " + a.data);
    data = read_csv(in);
    source = a.data;
  }
  const NaturalExpFamily fam = scenario ? scenario->family
                                        : NaturalExpFamily::from_name(a.family.empty() ? "bernoulli" : a.family, a.sigma);
  const RegressionModel model =
      scenario ? scenario->model
               : (a.model.empty() ? RegressionModel::for_family(fam, static_cast<int>(data.dim()))
                                  : model_by_name(a.model, a.cells, data.dim()));
  if (!estimator_supports(est, fam)) {
    throw UnsupportedError("estimator " + a.estimator + " is not defined for the " + std::string(fam.name()) +
                           " family");
  }
  const std::string id = scenario ? scenario->id : std::string("data");

  json j;
  j["estimator"] = a.estimator;
  j["source"] = source;
  j["family"] = fam.name();
  j["model"] = to_string(model.kind());
  j["n"] = data.size();
  j["seed"] = ex.seed;
  int code = kExitOk;

  auto median_fit = [&]() {
    std::mt19937_64 rng(fit_seed(ex.seed, id, a.rep, Estimator::median));
    OptimizerSettings st;
    st.max_evals = ex.median_max_evals;
    return median_estimate(data, fam, model, st, rng);
  };

  switch (est) {
    case Estimator::mle: {
      const MleResult r = mle(data, fam, model);
      j["exists"] = r.exists;
      j["eta"] = r.exists ? vec(r.eta_hat) : json(nullptr);
      j["eta_last"] = vec(r.eta_last);
      j["log_lik"] = num(r.log_lik);
      j["gradient_norm"] = num(r.gradient_norm);
      j["newton_iters"] = r.newton_iters;
      j["converged"] = r.converged;
      if (!r.exists) code = kExitNonexistent;
      break;
    }
    case Estimator::median: {
      const MedianResult r = median_fit();
      j["exists"] = true;
      j["eta"] = vec(r.eta_hat);
      j["criterion"] = r.criterion;
      j["warm_start_criterion"] = r.warm_start_criterion;
      j["evaluations"] = r.evaluations;
      break;
    }
    case Estimator::hinge: {
      const HingeResult r = hinge_init_detailed(data);
      j["exists"] = true;
      j["eta"] = vec(r.eta);
      j["objective"] = r.objective;
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      break;
    }
    case Estimator::rho: {
      Vector init = fam.kind() == FamilyKind::bernoulli ? hinge_init(data) : median_fit().eta_hat;
      model.search_box().clamp(std::span<double>(init.data(), static_cast<std::size_t>(init.size())));
      RhoConfig cfg = ex.rho_config();
      cfg.seed = fit_seed(ex.seed, id, a.rep, Estimator::rho);
      const RhoFitResult r = rho_estimate(data, fam, model, init, cfg);
      j["exists"] = true;
      j["eta"] = vec(r.eta_hat);
      j["init"] = vec(init);
      j["upsilon"] = r.upsilon_hat;
      j["iterations"] = r.iterations;
      j["certificate"] = r.certificate;
      j["certificate_level"] = cfg.certificate_level();
      j["best_eta"] = vec(r.best_eta);
      j["best_upsilon"] = r.best_upsilon;
      j["evaluations"] = r.evaluations;
      json trace = json::array();
      for (const auto& t : r.trace) {
        trace.push_back({{"iteration", t.iteration},
                         {"upsilon", t.upsilon},
                         {"evaluations", t.evaluations},
                         {"budget_exceeded", t.budget_exceeded},
                         {"eta", vec(t.eta)}});
      }
      j["trace"] = trace;
      break;
    }
  }
  emit(a.out, j);
  if (code == kExitNonexistent) std::cerr << "rhoest: the " << a.estimator << " estimate does not exist on this data\n";
  return code;
}

// ---------------------------------------------------------------------------
// simulate

json report_json(const RiskReport& r, bool timing) {
  json j;
  j["scenario"] = r.scenario;
  j["estimator"] = r.estimator;
  j["n"] = r.n;
  j["normalization"] = "per clean observation";
  j["replications"] = r.replications;
  j["quadrature_n"] = r.quadrature_n;
  j["seed"] = r.seed;
  j["failures"] = r.failures;
  j["risk"] = num(r.risk);
  j["std_error"] = num(r.std_error);
  j["risk_all"] = num(r.risk_all);
  j["std_error_all"] = num(r.std_error_all);
  json ex = json::object();
  for (const auto& [k, v] : r.excess_vs) ex[k] = num(v);
  j["excess_vs"] = ex;
  if (r.estimator == "rho") {
    j["iterations"] = {{"q1", r.iterations.q1}, {"median", r.iterations.median}, {"q3", r.iterations.q3},
                       {"max", r.iterations.max}};
    j["certified_fraction"] = num(r.certified_fraction);
  } else {
    j["iterations"] = nullptr;
    j["certified_fraction"] = nullptr;
  }
  j["mean_seconds"] = timing ? num(r.mean_seconds) : json(nullptr);
  j["approximation_h2"] = num(r.approximation_h2);
  json recs = json::array();
  for (const auto& rec : r.records) {
    json e{{"rep", rec.rep}, {"risk", num(rec.risk)}, {"exists", rec.exists}};
    if (r.estimator == "rho") {
      e["iterations"] = rec.iterations;
      e["upsilon"] = num(rec.upsilon);
      e["certificate"] = rec.certificate;
    }
    if (timing) e["seconds"] = rec.seconds;
    recs.push_back(e);
  }
  j["records"] = recs;
  return j;
}

std::string fmt(double v, int precision) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

int cmd_simulate(const Experiment& ex) {
  if (ex.scenarios.empty()) throw UsageError("simulate: no scenarios configured");
  std::vector<Estimator> requested;
  for (const auto& e : ex.estimators) requested.push_back(estimator_from_string(e));
  std::vector<Scenario> scenarios;
  bool holder = false;
  for (const auto& id : ex.scenarios) {
    if (id == "holder_poisson") {
      holder = true;
      continue;
    }
    Scenario s = make_scenario(id);
    if (ex.n > 0) s.n = ex.n;
    scenarios.push_back(s);
  }
  const fs::path dir(ex.output_dir);
  fs::create_directories(dir);
  const SimulationSettings st = ex.settings();

  std::ofstream csv(dir / "summary.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
  csv << "scenario,estimator,R_n,std_err,excess_vs_rho,iterQ1,iterMed,iterQ3,iterMax,mean_seconds,failures\n";
  bool all_ok = true;
  for (const Scenario& s : scenarios) {
    std::vector<Estimator> ests;
    for (Estimator e : requested) {
      if (estimator_supports(e, s.family)) {
        ests.push_back(e);
      } else {
        std::cerr << "rhoest: skipping " << to_string(e) << " on " << s.id << " (not defined for this family)\n";
      }
    }
    if (ests.empty()) continue;
    std::vector<RiskReport> reports;
    try {
      reports = run_scenario(s, ests, st);
    } catch (const std::exception& e) {
      all_ok = false;
      std::cerr << "rhoest: scenario " << s.id << " failed: " << e.what() << '\n';
      write_json(dir / (s.id + ".error.json"), json{{"scenario", s.id}, {"error", e.what()}});
      continue;
    }
    for (const RiskReport& r : reports) {
      write_json(dir / (r.scenario + "." + r.estimator + ".json"), report_json(r, ex.timing));
      const bool is_rho = r.estimator == "rho";
      const auto it = r.excess_vs.find("rho");
      csv << r.scenario << ',' << r.estimator << ',' << fmt(r.reported_risk(), 10) << ','
          << fmt(r.failures < r.replications ? r.std_error : r.std_error_all, 6) << ','
          << (it == r.excess_vs.end() ? "NA" : fmt(it->second, 6)) << ','
          << (is_rho ? fmt(r.iterations.q1, 6) : "NA") << ',' << (is_rho ? fmt(r.iterations.median, 6) : "NA") << ','
          << (is_rho ? fmt(r.iterations.q3, 6) : "NA") << ',' << (is_rho ? fmt(r.iterations.max, 6) : "NA") << ','
          << (ex.timing ? fmt(r.mean_seconds, 6) : "0") << ',' << r.failures << '\n';
    }
    std::cerr << "rhoest: " << s.id << " done\n";
  }

  if (holder) {
    json hj;
    hj["kind"] = "holder_sweep";
    hj["scenario"] = "holder_poisson";
    hj["M"] = ex.holder_m;
    hj["replications"] = ex.holder_reps;
    hj["seed"] = ex.seed;
    json sweeps = json::array();
    std::ofstream hcsv(dir / "holder_poisson.csv");
    hcsv << "alpha,n,cells,R_n,std_err\n";
    for (double alpha : ex.holder_alpha) {
      const auto pts = holder_sweep(alpha, ex.holder_m, ex.holder_n, ex.holder_reps, ex.seed, ex.rho_config(),
                                    ex.threads);
      json points = json::array();
      for (const auto& p : pts) {
        points.push_back({{"n", p.n}, {"cells", p.cells}, {"risk", num(p.risk)}, {"std_error", num(p.std_error)}});
        hcsv << alpha << ',' << p.n << ',' << p.cells << ',' << fmt(p.risk, 10) << ',' << fmt(p.std_error, 6) << '\n';
      }
      const double slope = pts.size() >= 2 ? log_log_slope(pts) : kNaN;
      sweeps.push_back({{"alpha", alpha},
                        {"slope", num(slope)},
                        {"rate_exponent", -alpha / (1.0 + alpha)},
                        {"points", points}});
    }
    hj["sweeps"] = sweeps;
    write_json(dir / "holder_poisson.json", hj);
    std::cerr << "rhoest: holder_poisson done\n";
  }
  return all_ok ? kExitOk : kExitError;
}

// ---------------------------------------------------------------------------
// table

/// Risks to 4 decimals.
std::string fmt_risk(const json& v) {
  if (!v.is_number()) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v.get<double>();
  return os.str();
}

std::string fmt_excess(const json& report, const std::string& ref) {
  if (!report.contains("excess_vs") || !report["excess_vs"].contains(ref)) return "NA";
  const auto& v = report["excess_vs"][ref];
  return v.is_number() ? format_excess(v.get<double>()) : "NA";
}

void print_row(std::ostream& os, const std::vector<std::string>& cells, const std::vector<std::size_t>& widths) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k == 0) {
      os << std::left << std::setw(static_cast<int>(widths[k])) << cells[k];
    } else {
      os << "  " << std::right << std::setw(static_cast<int>(widths[k])) << cells[k];
    }
  }
  os << '\n';
}

void print_table(std::ostream& os, const std::string& title, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t k = 0; k < header.size(); ++k) {
    widths[k] = header[k].size();
    for (const auto& r : rows) widths[k] = std::max(widths[k], r[k].size());
  }
  os << title << '\n';
  print_row(os, header, widths);
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  os << std::string(total - 2, '-') << '\n';
  for (const auto& r : rows) print_row(os, r, widths);
  os << '\n';
}

int cmd_table(const std::string& dir_name) {
  const fs::path dir(dir_name);
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir_name);
  std::map<std::string, std::map<std::string, json>> by_scenario;
  std::optional<json> holder;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("cannot parse " + p.string() + ": " + e.what());
    }
    if (j.value("kind", "") == "holder_sweep") {
      holder = j;
    } else if (j.contains("scenario") && j.contains("estimator")) {
      by_scenario[j["scenario"].get<std::string>()][j["estimator"].get<std::string>()] = j;
    }
  }
  if (by_scenario.empty() && !holder) {
    std::cerr << "rhoest: no reports in " << dir_name << '\n';
    return kExitError;
  }

  std::vector<std::string> order = scenario_ids();
  for (const auto& [id, _] : by_scenario) {
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
  }
  std::vector<std::vector<std::string>> risk_rows, iter_rows;
  for (const auto& id : order) {
    const auto it = by_scenario.find(id);
    if (it == by_scenario.end()) continue;
    const auto& reps = it->second;
    const json* rho = reps.count("rho") ? &reps.at("rho") : nullptr;
    const json* mle_r = reps.count("mle") ? &reps.at("mle") : nullptr;
    const json* init = reps.count("median") ? &reps.at("median") : (reps.count("hinge") ? &reps.at("hinge") : nullptr);
    std::string risk = "NA";
    if (rho) risk = fmt_risk(rho->value("failures", 0) < rho->value("replications", 0) ? (*rho)["risk"] : (*rho)["risk_all"]);
    std::string mle_fail = "NA";
    if (mle_r) {
      std::ostringstream os;
      os << (*mle_r)["failures"].get<int>() << '/' << (*mle_r)["replications"].get<int>();
      mle_fail = os.str();
    }
    risk_rows.push_back({id, risk, mle_r ? fmt_excess(*mle_r, "rho") : "NA", init ? fmt_excess(*init, "rho") : "NA",
                         init ? (*init)["estimator"].get<std::string>() : "NA", mle_fail});
    if (rho && (*rho)["iterations"].is_object()) {
      const auto& q = (*rho)["iterations"];
      auto g = [&](const char* k) { return q[k].is_number() ? fmt(q[k].get<double>(), 4) : std::string("NA"); };
      const auto& cf = (*rho)["certified_fraction"];
      iter_rows.push_back({id, g("q1"), g("median"), g("q3"), g("max"), cf.is_number() ? fmt(cf.get<double>(), 3) : "NA"});
    }
  }
  if (!risk_rows.empty()) {
    print_table(std::cout, "Risk of the rho-estimator and excess risk of the competitors",
                {"scenario", "R_n(rho)", "E(MLE)", "E(init)", "init", "MLE missing"}, risk_rows);
  }
  if (!iter_rows.empty()) {
    print_table(std::cout, "Iterations of the rho-estimator", {"scenario", "Q1", "median", "Q3", "max", "certified"},
                iter_rows);
  }
  if (holder) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& sw : (*holder)["sweeps"]) {
      const std::string alpha = fmt(sw["alpha"].get<double>(), 3);
      for (const auto& p : sw["points"]) {
        rows.push_back({alpha, std::to_string(p["n"].get<long long>()), std::to_string(p["cells"].get<int>()),
                        fmt_risk(p["risk"]), ""});
      }
      rows.push_back({alpha, "slope", "", sw["slope"].is_number() ? fmt(sw["slope"].get<double>(), 3) : "NA",
                      fmt(sw["rate_exponent"].get<double>(), 3)});
    }
    print_table(std::cout, "Holder sweep, Poisson piecewise-constant fits", {"alpha", "n", "D", "R_n", "-a/(1+a)"},
                rows);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const Experiment& ex, const std::string& id, std::uint64_t rep, const std::string& out) {
  Scenario s = make_scenario(id);
  if (ex.n > 0) s.n = ex.n;
  const Dataset ds = generate(s, ex.seed, rep);
  if (out.empty() || out == "-") {
    write_csv(std::cout, ds);
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    write_csv(os, ds);
  }
  return kExitOk;
}

void add_experiment_options(CLI::App& app, Experiment& ex) {
  const std::string g = "Experiment";
  app.add_option("--scenarios", ex.scenarios, "Scenario ids for simulate")->group(g);
  app.add_option("--estimators", ex.estimators, "Estimators for simulate")->group(g)->capture_default_str();
  app.add_option("--seed", ex.seed, "Master seed")->group(g)->capture_default_str();
  app.add_option("--replications", ex.replications, "Replications per scenario (0: scenario default, 500)")
      ->group(g)
      ->check(CLI::NonNegativeNumber);
  app.add_option("--quadrature-n,--quadrature_n", ex.quadrature_n, "Covariate draws per risk integral (0: 10000)")
      ->group(g)
      ->check(CLI::NonNegativeNumber);
  app.add_option("--n", ex.n, "Clean sample size (0: scenario default, 500)")->group(g)->check(CLI::NonNegativeNumber);
  app.add_option("--threads", ex.threads, "Worker threads (0: all cores); RHOEST_THREADS overrides")
      ->group(g)
      ->check(CLI::NonNegativeNumber);
  app.add_option("--output-dir,--output_dir", ex.output_dir, "Report directory for simulate")
      ->group(g)
      ->capture_default_str();
  app.add_flag("--timing", ex.timing, "Record wall-clock times (reports are then not reproducible)")->group(g);

  const std::string r = "Rho estimator";
  app.add_option("--kappa", ex.kappa, "kappa; kappa/25 must lie in (18, 18.8)")->group(r)->capture_default_str();
  app.add_option("--early-stop,--early_stop", ex.early_stop, "Stop once upsilon <= this")
      ->group(r)
      ->capture_default_str();
  app.add_option("--max-iters,--max_iters", ex.max_iters, "Iteration cap L")->group(r)->capture_default_str();
  app.add_option("--sup-max-evals,--sup_max_evals", ex.sup_max_evals, "CMA-ES budget per upsilon evaluation")
      ->group(r)
      ->capture_default_str();
  app.add_option("--sup-restarts,--sup_restarts", ex.sup_restarts, "CMA-ES runs per upsilon evaluation")
      ->group(r)
      ->capture_default_str();
  app.add_option("--sup-sigma0,--sup_sigma0", ex.sup_sigma0, "Initial CMA-ES step as a fraction of the box")
      ->group(r)
      ->capture_default_str();
  app.add_option("--median-max-evals,--median_max_evals", ex.median_max_evals, "CMA-ES budget of the median fit")
      ->group(r)
      ->capture_default_str();

  const std::string h = "Holder sweep";
  app.add_option("--holder-alpha,--holder_alpha", ex.holder_alpha, "Smoothness levels")->group(h);
  app.add_option("--holder-m,--holder_m", ex.holder_m, "Holder constant M")->group(h)->capture_default_str();
  app.add_option("--holder-n,--holder_n", ex.holder_n, "Sample sizes")->group(h);
  app.add_option("--holder-reps,--holder_reps", ex.holder_reps, "Replications per sample size")
      ->group(h)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust regression in exponential families by rho-estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Configuration file (TOML / INI, flat keys)");

  Experiment ex;
  add_experiment_options(app, ex);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit one estimator to one dataset and print JSON");
  fit->add_option("--data", fa.data, "Dataset CSV (w1,...,wd,y[,flag])");
  fit->add_option("--scenario", fa.scenario, "Draw the data from this scenario instead");
  fit->add_option("--rep", fa.rep, "Replication index for --scenario")->capture_default_str();
  fit->add_option("--estimator,-e", fa.estimator, "rho | mle | median | hinge")->capture_default_str();
  fit->add_option("--family", fa.family, "bernoulli | poisson | exponential | gaussian (with --data)");
  fit->add_option("--model", fa.model, "linear | loglog1pexp | log1pexp | piecewise_constant (with --data)");
  fit->add_option("--cells", fa.cells, "Cells of the piecewise_constant model");
  fit->add_option("--sigma", fa.sigma, "Gaussian standard deviation")->capture_default_str();
  fit->add_option("--out,-o", fa.out, "Output file (default: standard output)");

  auto* sim = app.add_subcommand("simulate", "Run the Monte-Carlo experiments of the configuration");

  std::string table_dir;
  auto* table = app.add_subcommand("table", "Render the reports in a directory as text tables");
  table->add_option("dir", table_dir, "Report directory")->required();

  std::string gen_id, gen_out;
  std::uint64_t gen_rep = 0;
  auto* gen = app.add_subcommand("generate", "Write one replication of a scenario as CSV");
  gen->add_option("--scenario", gen_id, "Scenario id")->required();
  gen->add_option("--rep", gen_rep, "Replication index")->capture_default_str();
  gen->add_option("--out,-o", gen_out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (fit->parsed()) return cmd_fit(ex, fa);
    if (sim->parsed()) return cmd_simulate(ex);
    if (table->parsed()) return cmd_table(table_dir);
    if (gen->parsed()) return cmd_generate(ex, gen_id, gen_rep, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "rhoest: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
