#pragma once

// Monte Carlo harness over (n, p, sigma, M) grids: per-replicate fits,
// aggregated cell statistics, log-log rate slopes and regime tags.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probitlr {

struct GridCell {
  long long n = 0;
  int p = 0;
  double sigma = 0.0;
  std::optional<double> M;  // default: max(10 tau*, n / (p log n))
};

struct ExperimentGrid {
  std::vector<GridCell> cells;
  int replicates = 1;
  std::uint64_t master_seed = 0;
  std::optional<double> fit_tol;
  std::optional<int> fit_max_iter;
  bool fixed_beta = false;  // beta* = e1 instead of a uniform draw
  bool warm_start = true;   // start separable fits from the max-margin direction
  int threads = 0;          // 0: hardware concurrency

  void validate() const;
};

/// Parses {cells:[{n,p,sigma,M?}], replicates, master_seed, fit:{tol,max_iter}, fixed_beta?}.
ExperimentGrid parse_grid_json(std::string_view text);

/// max(10 tau*(sigma), n / (p log n)).
double default_radius(long long n, int p, double sigma);

struct ReplicateRecord {
  long long n = 0;
  int p = 0;
  double sigma = 0.0;
  double M = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  double tau_star = 0.0;
  double beta_err = 0.0;
  double tau_hat = 0.0;
  double tau_err = 0.0;
  double d_star = 0.0;
  bool separable = false;
  double wrong_label_frac = 0.0;
  double loss = 0.0;
  int iters = 0;
  bool converged = false;
  double wall_ms = 0.0;
};

struct ExperimentReport {
  std::vector<ReplicateRecord> rows;  // cell-major, replicate-minor
};

/// Runs every (cell, replicate); row order and every column except wall_ms are
/// independent of the thread count.
ExperimentReport run_grid(const ExperimentGrid& grid);

/// Runs one replicate with its derived stream.
ReplicateRecord run_replicate(const ExperimentGrid& grid, std::size_t cell_index, int rep,
                              double tau_star);

inline constexpr std::string_view kReportColumns =
    "n,p,sigma,M,rep,seed,tau_star,beta_err,tau_hat,tau_err,d_star,separable,"
    "wrong_label_frac,loss,iters,converged,wall_ms";

/// FNV-1a (64 bit) of the column list, as 16 hex digits.
std::string report_schema_hash();

/// First line "# probitlr-report v1 schema=<hash>", then the column header and rows.
void write_report_csv(std::ostream& os, const ExperimentReport& report);
ExperimentReport read_report_csv(std::istream& is);

struct SummaryStats {
  double mean = 0.0, median = 0.0, stddev = 0.0;
};

struct CellStats {
  long long n = 0;
  int p = 0;
  double sigma = 0.0;
  double M = 0.0;
  int count = 0;
  double tau_star = 0.0;
  SummaryStats beta_err, tau_err, d_star, tau_hat;
  double min_tau_hat = 0.0;
  double separable_freq = 0.0;
  double wrong_label_freq = 0.0;
  double converged_freq = 0.0;
  double mean_wall_ms = 0.0;
};

/// One entry per distinct (n, p, sigma, M), in order of first appearance.
std::vector<CellStats> aggregate(const ExperimentReport& report);

enum class Metric { beta_err, tau_err, d_star };
Metric parse_metric(std::string_view name);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::vector<double> ns, means;
};

/// OLS of log(mean metric) on log n over the rows with the given p and sigma;
/// needs at least four distinct n.
SlopeFit rate_slope(const ExperimentReport& report, Metric metric, int p, double sigma);

enum class Regime { large_noise, small_noise, boundary };
std::string_view to_string(Regime r);

struct RegimeTag {
  Regime regime;
  double threshold;  // p log n / n
};

/// large_noise if sigma > 2 t, small_noise if sigma < t / 2, boundary otherwise,
/// with t = p log n / n.
RegimeTag classify_regime(long long n, int p, double sigma);

/// Writes "<prefix>_p<p>_sigma<sigma>.dat" per (p, sigma) slice with columns
/// n, mean beta_err, mean tau_err, mean d_star, separable freq,
/// sqrt(sigma p log n / n), p log n / n. Returns the written paths.
std::vector<std::filesystem::path> write_dat_files(const ExperimentReport& report,
                                                   const std::filesystem::path& prefix);

}  // namespace probitlr
