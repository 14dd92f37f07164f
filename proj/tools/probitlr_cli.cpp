#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "probitlr/bounds.hpp"
#include "probitlr/errors.hpp"
#include "probitlr/estimator.hpp"
#include "probitlr/experiments.hpp"
#include "probitlr/gaussian_integrals.hpp"
#include "probitlr/model.hpp"
#include "probitlr/rng.hpp"
#include "probitlr/separability.hpp"

using nlohmann::json;
using namespace probitlr;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON cannot carry inf/nan; encode them as strings.
json jnum(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<BoundRequest> parse_bound_grid(const std::string& text) {
  std::vector<BoundRequest> grid;
  try {
    for (const auto& item : json::parse(text)) {
      BoundRequest r;
      r.lemma = parse_lemma_id(item.at("lemma_id").get<std::string>());
      for (const auto& [k, v] : item.at("params").items()) r.params[k] = v.get<double>();
      if (item.contains("method")) {
        const auto m = item.at("method").get<std::string>();
        if (m == "monte_carlo")
          r.method = EvalMethod::monte_carlo;
        else if (m != "quadrature")
          throw FormatError("unknown method '" + m + "'");
      }
      r.draws = item.value("draws", r.draws);
      r.seed = item.value("seed", r.seed);
      grid.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bound grid: ") + e.what());
  }
  return grid;
}

int cmd_check_bounds(const std::string& grid_path, const std::string& out_path) {
  const std::vector<BoundRequest> grid =
      grid_path.empty() ? default_appendix_grid() : parse_bound_grid(read_file(grid_path));
  const std::vector<BoundReport> reports = check_appendix_bounds(grid);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw FormatError("cannot write " + out_path);
    os = &file;
  }
  *os << "lemma_id,param_json,lower,value,upper,method,holds\n";
  int failures = 0, skipped = 0;
  for (const auto& r : reports) {
    json params = json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    *os << to_string(r.lemma) << ',' << csv_quote(params.dump()) << ',' << num(r.lower) << ','
        << num(r.value) << ',' << num(r.upper) << ',' << to_string(r.method) << ','
        << (r.holds ? "true" : "false") << '\n';
    if (r.skipped) {
      ++skipped;
      std::cerr << "skipped " << to_string(r.lemma) << ' ' << params.dump() << ": " << r.skip_reason << '\n';
    } else if (!r.holds) {
      ++failures;
    }
  }
  std::cerr << reports.size() << " reports, " << failures << " violated, " << skipped << " skipped\n";
  return failures == 0 ? 0 : 1;
}

int cmd_fit(const std::string& data_path, double M, double tol, int max_iter, const std::string& step) {
  std::ifstream is(data_path);
  if (!is) throw FormatError("cannot open " + data_path);
  const Dataset data = read_dataset_csv(is);
  FitConfig cfg;
  cfg.M = M;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  if (step == "fixed")
    cfg.step_rule = StepRule::fixed_inverse_lipschitz;
  else if (step != "backtracking")
    throw FormatError("unknown step rule '" + step + "'");
  const FitResult r = fit(data, cfg);
  json out;
  out["gamma_hat"] = std::vector<double>(r.gamma_hat.data(), r.gamma_hat.data() + r.gamma_hat.size());
  out["tau_hat"] = r.tau_hat;
  if (r.beta_hat)
    out["beta_hat"] = std::vector<double>(r.beta_hat->coords().data(),
                                          r.beta_hat->coords().data() + r.beta_hat->dim());
  else
    out["beta_hat"] = nullptr;
  out["loss"] = jnum(r.loss);
  out["log_loss"] = jnum(r.log_loss);
  out["proj_grad_norm"] = jnum(r.proj_grad_norm);
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["boundary_active"] = r.boundary_active;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_separability(long long n, int p, long long reps, std::uint64_t seed, std::optional<double> sigma) {
  SeparabilityExperiment e{n, p, reps, seed, sigma};
  const SeparabilityTally t = run_separability(e);
  const auto [lo, hi] = wilson_interval(t.separable, t.reps);
  json out;
  out["n"] = n;
  out["p"] = p;
  out["reps"] = reps;
  out["model"] = sigma ? "probit" : "null";
  if (sigma) out["sigma"] = *sigma;
  out["separable"] = t.separable;
  out["indeterminate"] = t.indeterminate;
  out["frequency"] = t.frequency();
  out["ci95"] = {lo, hi};
  if (!sigma) out["cover_probability"] = cover_probability(n, p);
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_simulate(const std::string& config, const std::string& out_path, const std::string& dat_prefix,
                 int threads) {
  ExperimentGrid grid = parse_grid_json(read_file(config));
  if (threads > 0) grid.threads = threads;
  const ExperimentReport rep = run_grid(grid);
  std::ofstream os(out_path);
  if (!os) throw FormatError("cannot write " + out_path);
  write_report_csv(os, rep);
  if (!dat_prefix.empty())
    for (const auto& p : write_dat_files(rep, dat_prefix)) std::cerr << "wrote " << p.string() << '\n';
  for (const auto& c : aggregate(rep)) {
    const RegimeTag tag = classify_regime(c.n, c.p, c.sigma);
    std::cerr << "n=" << c.n << " p=" << c.p << " sigma=" << c.sigma << " [" << to_string(tag.regime)
              << "] beta_err=" << c.beta_err.mean << " tau_err=" << c.tau_err.mean
              << " separable=" << c.separable_freq << " converged=" << c.converged_freq << '\n';
  }
  return 0;
}

int cmd_rates(const std::string& report_path, const std::string& metric, int p, double sigma) {
  std::ifstream is(report_path);
  if (!is) throw FormatError("cannot open " + report_path);
  const ExperimentReport rep = read_report_csv(is);
  const SlopeFit f = rate_slope(rep, parse_metric(metric), p, sigma);
  json out;
  out["metric"] = metric;
  out["p"] = p;
  out["sigma"] = sigma;
  out["slope"] = f.slope;
  out["stderr"] = f.std_error;
  out["intercept"] = f.intercept;
  out["n"] = f.ns;
  out["mean"] = f.means;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_calibrate(std::optional<double> sigma, std::optional<double> tau_star) {
  json out;
  if (sigma) {
    const double t = sigma_to_tau_star(*sigma);
    out["sigma"] = *sigma;
    out["tau_star"] = t;
    out["sigma_tau_star"] = *sigma * t;
    out["wrong_label_prob"] = std::atan(*sigma) / 3.141592653589793;
  } else {
    const double s = tau_star_to_sigma(*tau_star);
    out["tau_star"] = *tau_star;
    out["sigma"] = s;
    out["sigma_tau_star"] = s * *tau_star;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_sample(long long n, int p, double sigma, std::uint64_t seed, bool fixed_beta, const std::string& out_path) {
  RandomStream rs(seed);
  const Direction beta = fixed_beta ? Direction::axis(p, 0) : random_direction(p, rs);
  const Dataset d = sample(ModelSpec(p, sigma, beta), n, rs);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw FormatError("cannot write " + out_path);
    os = &file;
  }
  write_dataset_csv(*os, d);
  std::cerr << "beta_star:";
  for (Eigen::Index j = 0; j < beta.dim(); ++j) std::cerr << ' ' << num(beta.coords()[j]);
  std::cerr << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ball-constrained logistic regression under the probit model"};
  app.require_subcommand(1);

  std::string grid_path, bounds_out;
  auto* cb = app.add_subcommand("check-bounds", "Evaluate the Gaussian moment inequality catalogue");
  cb->add_option("--grid", grid_path, "JSON array of {lemma_id, params} (default: built-in grid)");
  cb->add_option("--out", bounds_out, "CSV output path (default: stdout)");

  std::string data_path, step = "backtracking";
  double M = 1.0, tol = 1e-8;
  int max_iter = 200000;
  auto* fc = app.add_subcommand("fit", "Fit constrained logistic regression to a dataset CSV");
  fc->add_option("--data", data_path, "Dataset CSV (x1,...,xp,y)")->required();
  fc->add_option("--M", M, "Radius of the constraint ball")->required();
  fc->add_option("--tol", tol, "Projected-gradient tolerance");
  fc->add_option("--max-iter", max_iter, "Iteration cap");
  fc->add_option("--step", step, "backtracking or fixed");

  long long sep_n = 0, sep_reps = 1000;
  int sep_p = 0;
  std::uint64_t sep_seed = 0;
  double sep_sigma = 0.0;
  bool sep_null = false;
  auto* sc = app.add_subcommand("separability", "Empirical separability frequency");
  sc->add_option("--n", sep_n)->required();
  sc->add_option("--p", sep_p)->required();
  sc->add_option("--reps", sep_reps);
  sc->add_option("--seed", sep_seed);
  auto* sigma_opt = sc->add_option("--sigma", sep_sigma, "Probit noise level");
  auto* null_opt = sc->add_flag("--null", sep_null, "Labels independent of covariates");
  sigma_opt->excludes(null_opt);

  std::string config, sim_out, dat_prefix;
  int threads = 0;
  auto* sim = app.add_subcommand("simulate", "Run an experiment grid");
  sim->add_option("--config", config)->required();
  sim->add_option("--out", sim_out)->required();
  sim->add_option("--dat-prefix", dat_prefix, "Also write per-(p, sigma) .dat files");
  sim->add_option("--threads", threads);

  std::string report_path, metric = "beta_err";
  int rp = 0;
  double rsigma = 0.0;
  auto* rt = app.add_subcommand("rates", "Log-log rate slope from a report");
  rt->add_option("--report", report_path)->required();
  rt->add_option("--metric", metric);
  rt->add_option("--p", rp)->required();
  rt->add_option("--sigma", rsigma)->required();

  double cal_sigma = 0.0, cal_tau = 0.0;
  auto* cal = app.add_subcommand("calibrate", "Convert between sigma and tau*");
  auto* cs = cal->add_option("--sigma", cal_sigma);
  auto* ct = cal->add_option("--tau-star", cal_tau);
  cs->excludes(ct);

  long long smp_n = 100;
  int smp_p = 2;
  double smp_sigma = 0.5;
  std::uint64_t smp_seed = 0;
  bool smp_fixed = false;
  std::string smp_out;
  auto* smp = app.add_subcommand("sample", "Draw a probit dataset as CSV");
  smp->add_option("--n", smp_n);
  smp->add_option("--p", smp_p);
  smp->add_option("--sigma", smp_sigma);
  smp->add_option("--seed", smp_seed);
  smp->add_flag("--fixed-beta", smp_fixed, "Use beta* = e1");
  smp->add_option("--out", smp_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cb->parsed()) return cmd_check_bounds(grid_path, bounds_out);
    if (fc->parsed()) return cmd_fit(data_path, M, tol, max_iter, step);
    if (sc->parsed()) {
      if (!sep_null && sigma_opt->count() == 0) throw FormatError("separability: give --sigma or --null");
      return cmd_separability(sep_n, sep_p, sep_reps, sep_seed,
                              sep_null ? std::nullopt : std::optional<double>(sep_sigma));
    }
    if (sim->parsed()) return cmd_simulate(config, sim_out, dat_prefix, threads);
    if (rt->parsed()) return cmd_rates(report_path, metric, rp, rsigma);
    if (cal->parsed()) {
      if (cs->count() == 0 && ct->count() == 0) throw FormatError("calibrate: give --sigma or --tau-star");
      return cmd_calibrate(cs->count() ? std::optional<double>(cal_sigma) : std::nullopt,
                           ct->count() ? std::optional<double>(cal_tau) : std::nullopt);
    }
    if (smp->parsed()) return cmd_sample(smp_n, smp_p, smp_sigma, smp_seed, smp_fixed, smp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
