#include "probitlr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "probitlr/errors.hpp"
#include "probitlr/estimator.hpp"
#include "probitlr/gaussian_integrals.hpp"
#include "probitlr/geometry.hpp"
#include "probitlr/model.hpp"
#include "probitlr/rng.hpp"
#include "probitlr/separability.hpp"

namespace probitlr {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SummaryStats summarize(std::vector<double> v) {
  SummaryStats s;
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) {
    s.mean = s.median = s.stddev = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return s;
}

double metric_of(const ReplicateRecord& r, Metric m) {
  switch (m) {
    case Metric::beta_err: return r.beta_err;
    case Metric::tau_err: return r.tau_err;
    case Metric::d_star: return r.d_star;
  }
  return r.beta_err;
}

}  // namespace

void ExperimentGrid::validate() const {
  if (cells.empty()) throw DomainError("grid: no cells");
  if (replicates < 1) throw DomainError("grid: replicates must be >= 1");
  for (const auto& c : cells) {
    if (c.p < 1 || c.n < c.p) throw DomainError("grid: cells need n >= p >= 1");
    if (!(c.sigma > 0.0)) throw DomainError("grid: sigma must be > 0");
    if (c.M && !(*c.M > 0.0)) throw DomainError("grid: M must be > 0");
  }
  if (fit_tol && !(*fit_tol > 0.0)) throw DomainError("grid: fit.tol must be > 0");
  if (fit_max_iter && *fit_max_iter < 1) throw DomainError("grid: fit.max_iter must be >= 1");
}

ExperimentGrid parse_grid_json(std::string_view text) {
  using nlohmann::json;
  ExperimentGrid g;
  try {
    const json j = json::parse(text);
    for (const auto& c : j.at("cells")) {
      GridCell cell;
      cell.n = c.at("n").get<long long>();
      cell.p = c.at("p").get<int>();
      cell.sigma = c.at("sigma").get<double>();
      if (c.contains("M") && !c.at("M").is_null()) cell.M = c.at("M").get<double>();
      g.cells.push_back(cell);
    }
    g.replicates = j.value("replicates", 1);
    g.master_seed = j.value("master_seed", std::uint64_t{0});
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      if (f.contains("tol")) g.fit_tol = f.at("tol").get<double>();
      if (f.contains("max_iter")) g.fit_max_iter = f.at("max_iter").get<int>();
    }
    g.fixed_beta = j.value("fixed_beta", false);
    g.warm_start = j.value("warm_start", true);
    g.threads = j.value("threads", 0);
  } catch (const json::exception& e) {
    throw FormatError(std::string("grid config: ") + e.what());
  }
  g.validate();
  return g;
}

double default_radius(long long n, int p, double sigma) {
  const double nn = static_cast<double>(n);
  return std::max(10.0 * sigma_to_tau_star(sigma), nn / (p * std::log(nn)));
}

ReplicateRecord run_replicate(const ExperimentGrid& grid, std::size_t cell_index, int rep,
                              double tau_star) {
  const auto t0 = std::chrono::steady_clock::now();
  const GridCell& cell = grid.cells.at(cell_index);
  ReplicateRecord r;
  r.n = cell.n;
  r.p = cell.p;
  r.sigma = cell.sigma;
  r.M = cell.M ? *cell.M : default_radius(cell.n, cell.p, cell.sigma);
  r.rep = rep;
  r.seed = derive_stream_seed(grid.master_seed, cell_index, static_cast<std::uint64_t>(rep));
  r.tau_star = tau_star;

  RandomStream stream(r.seed);
  const Direction beta_star = grid.fixed_beta ? Direction::axis(cell.p, 0) : random_direction(cell.p, stream);
  const ModelSpec spec(cell.p, cell.sigma, beta_star);
  const Dataset data = sample(spec, cell.n, stream);

  const Eigen::VectorXd clean = data.X * beta_star.coords();
  long long flips = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) flips += data.y[i] != sign_label(clean[i]);
  r.wrong_label_frac = static_cast<double>(flips) / static_cast<double>(data.n());

  try {
    r.separable = is_separable(data).separable;
  } catch (const IndeterminateError&) {
    r.separable = false;
  }

  FitConfig cfg;
  cfg.M = r.M;
  if (grid.fit_tol) cfg.tol = *grid.fit_tol;
  if (grid.fit_max_iter) cfg.max_iter = *grid.fit_max_iter;
  std::optional<Eigen::VectorXd> init;
  if (r.separable && grid.warm_start) {
    const Eigen::MatrixXd Z = data.y.asDiagonal() * data.X;
    const MinNormPoint mnp = min_norm_point(Z);
    const double nw = mnp.point.norm();
    if (nw > 0.0 && (Z * mnp.point).minCoeff() > 0.0) init = Eigen::VectorXd(mnp.point * (r.M / nw));
  }
  const FitResult fr = fit(data, cfg, init);
  r.tau_hat = fr.tau_hat;
  r.tau_err = std::abs(fr.tau_hat - tau_star);
  if (fr.beta_hat) {
    r.beta_err = (fr.beta_hat->coords() - beta_star.coords()).norm();
    r.d_star = d_star(StarGeometry(tau_star), beta_star, fr.gamma_hat);
  } else {
    r.beta_err = r.d_star = std::numeric_limits<double>::quiet_NaN();
  }
  r.loss = fr.loss;
  r.iters = fr.iterations;
  r.converged = fr.converged;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ExperimentReport run_grid(const ExperimentGrid& grid) {
  grid.validate();
  std::vector<double> tau_star(grid.cells.size());
  for (std::size_t c = 0; c < grid.cells.size(); ++c) tau_star[c] = sigma_to_tau_star(grid.cells[c].sigma);

  const std::size_t R = static_cast<std::size_t>(grid.replicates);
  const std::size_t total = grid.cells.size() * R;
  ExperimentReport report;
  report.rows.resize(total);

  unsigned threads = grid.threads > 0 ? static_cast<unsigned>(grid.threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      try {
        report.rows[job] = run_replicate(grid, job / R, static_cast<int>(job % R), tau_star[job / R]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

std::string report_schema_hash() {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : kReportColumns) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_report_csv(std::ostream& os, const ExperimentReport& report) {
  os << "# probitlr-report v1 schema=" << report_schema_hash() << '\n' << kReportColumns << '\n';
  char wall[32];
  for (const auto& r : report.rows) {
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
    os << r.n << ',' << r.p << ',' << fmt(r.sigma) << ',' << fmt(r.M) << ',' << r.rep << ',' << r.seed
       << ',' << fmt(r.tau_star) << ',' << fmt(r.beta_err) << ',' << fmt(r.tau_hat) << ','
       << fmt(r.tau_err) << ',' << fmt(r.d_star) << ',' << (r.separable ? 1 : 0) << ','
       << fmt(r.wrong_label_frac) << ',' << fmt(r.loss) << ',' << r.iters << ','
       << (r.converged ? 1 : 0) << ',' << wall << '\n';
  }
}

ExperimentReport read_report_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("report csv: empty input");
  const std::string expected = "# probitlr-report v1 schema=" + report_schema_hash();
  if (line != expected) throw FormatError("report csv: missing or mismatched schema header");
  if (!std::getline(is, line) || line != kReportColumns)
    throw FormatError("report csv: unexpected column header");
  ExperimentReport rep;
  std::size_t lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 17) throw FormatError("report csv: wrong column count on line " + std::to_string(lineno));
    try {
      ReplicateRecord r;
      r.n = std::stoll(f[0]);
      r.p = std::stoi(f[1]);
      r.sigma = std::stod(f[2]);
      r.M = std::stod(f[3]);
      r.rep = std::stoi(f[4]);
      r.seed = std::stoull(f[5]);
      r.tau_star = std::stod(f[6]);
      r.beta_err = std::stod(f[7]);
      r.tau_hat = std::stod(f[8]);
      r.tau_err = std::stod(f[9]);
      r.d_star = std::stod(f[10]);
      r.separable = f[11] == "1";
      r.wrong_label_frac = std::stod(f[12]);
      r.loss = std::stod(f[13]);
      r.iters = std::stoi(f[14]);
      r.converged = f[15] == "1";
      r.wall_ms = std::stod(f[16]);
      rep.rows.push_back(r);
    } catch (const std::exception&) {
      throw FormatError("report csv: bad value on line " + std::to_string(lineno));
    }
  }
  return rep;
}

std::vector<CellStats> aggregate(const ExperimentReport& report) {
  std::vector<CellStats> out;
  std::vector<std::vector<const ReplicateRecord*>> members;
  for (const auto& r : report.rows) {
    std::size_t k = 0;
    for (; k < out.size(); ++k)
      if (out[k].n == r.n && out[k].p == r.p && out[k].sigma == r.sigma && out[k].M == r.M) break;
    if (k == out.size()) {
      CellStats c;
      c.n = r.n;
      c.p = r.p;
      c.sigma = r.sigma;
      c.M = r.M;
      c.tau_star = r.tau_star;
      out.push_back(c);
      members.emplace_back();
    }
    members[k].push_back(&r);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    CellStats& c = out[k];
    const auto& rows = members[k];
    c.count = static_cast<int>(rows.size());
    std::vector<double> be, te, ds, th;
    double sep = 0, wl = 0, conv = 0, wall = 0;
    c.min_tau_hat = std::numeric_limits<double>::infinity();
    for (const auto* r : rows) {
      be.push_back(r->beta_err);
      te.push_back(r->tau_err);
      ds.push_back(r->d_star);
      th.push_back(r->tau_hat);
      c.min_tau_hat = std::min(c.min_tau_hat, r->tau_hat);
      sep += r->separable;
      wl += r->wrong_label_frac;
      conv += r->converged;
      wall += r->wall_ms;
    }
    const double cnt = static_cast<double>(rows.size());
    c.beta_err = summarize(be);
    c.tau_err = summarize(te);
    c.d_star = summarize(ds);
    c.tau_hat = summarize(th);
    c.separable_freq = sep / cnt;
    c.wrong_label_freq = wl / cnt;
    c.converged_freq = conv / cnt;
    c.mean_wall_ms = wall / cnt;
  }
  return out;
}

Metric parse_metric(std::string_view name) {
  if (name == "beta_err") return Metric::beta_err;
  if (name == "tau_err") return Metric::tau_err;
  if (name == "d_star") return Metric::d_star;
  throw FormatError("unknown metric '" + std::string(name) + "'");
}

SlopeFit rate_slope(const ExperimentReport& report, Metric metric, int p, double sigma) {
  std::map<long long, std::pair<double, int>> by_n;
  for (const auto& r : report.rows) {
    if (r.p != p || std::abs(r.sigma - sigma) > 1e-12 * std::abs(sigma)) continue;
    const double v = metric_of(r, metric);
    if (!std::isfinite(v)) continue;
    auto& acc = by_n[r.n];
    acc.first += v;
    acc.second += 1;
  }
  if (by_n.size() < 4) throw DomainError("rate_slope: need at least four distinct n at the given (p, sigma)");
  SlopeFit fitres;
  std::vector<double> xs, ys;
  for (const auto& [n, acc] : by_n) {
    const double mean = acc.first / acc.second;
    if (!(mean > 0.0)) throw DomainError("rate_slope: non-positive mean metric");
    fitres.ns.push_back(static_cast<double>(n));
    fitres.means.push_back(mean);
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(mean));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fitres.slope = sxy / sxx;
  fitres.intercept = my - fitres.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fitres.intercept - fitres.slope * xs[i];
    ssr += e * e;
  }
  fitres.std_error = std::sqrt(ssr / (k - 2.0) / sxx);
  return fitres;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::large_noise: return "large_noise";
    case Regime::small_noise: return "small_noise";
    case Regime::boundary: return "boundary";
  }
  return "boundary";
}

RegimeTag classify_regime(long long n, int p, double sigma) {
  if (n < 2) throw DomainError("classify_regime: n must be >= 2");
  if (p < 1) throw DomainError("classify_regime: p must be >= 1");
  const double nn = static_cast<double>(n);
  const double t = p * std::log(nn) / nn;
  Regime reg = Regime::boundary;
  if (sigma > 2.0 * t)
    reg = Regime::large_noise;
  else if (sigma < 0.5 * t)
    reg = Regime::small_noise;
  return {reg, t};
}

std::vector<std::filesystem::path> write_dat_files(const ExperimentReport& report,
                                                   const std::filesystem::path& prefix) {
  const std::vector<CellStats> stats = aggregate(report);
  std::map<std::pair<int, double>, std::vector<const CellStats*>> slices;
  for (const auto& c : stats) slices[{c.p, c.sigma}].push_back(&c);
  std::vector<std::filesystem::path> written;
  for (auto& [key, cells] : slices) {
    std::sort(cells.begin(), cells.end(), [](auto* a, auto* b) { return a->n < b->n; });
    char name[96];
    std::snprintf(name, sizeof name, "_p%d_sigma%g.dat", key.first, key.second);
    std::filesystem::path path = prefix;
    path += name;
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path.string());
    os << "# n mean_beta_err mean_tau_err mean_d_star separable_freq sqrt_sigma_plogn_over_n plogn_over_n\n";
    for (const auto* c : cells) {
      const double nn = static_cast<double>(c->n);
      const double t = c->p * std::log(nn) / nn;
      os << c->n << ' ' << fmt(c->beta_err.mean) << ' ' << fmt(c->tau_err.mean) << ' ' << fmt(c->d_star.mean)
         << ' ' << fmt(c->separable_freq) << ' ' << fmt(std::sqrt(c->sigma * t)) << ' ' << fmt(t) << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace probitlr
