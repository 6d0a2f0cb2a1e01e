#pragma once

// Config ingestion, subcommand dispatch and report/table/plot output for
// the hardy-fundsol tool.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hardy/analysis.hpp"
#include "hardy/potential.hpp"
#include "hardy/radial_engine.hpp"

namespace hardy::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kArtifactVersion = "0.1.0";

struct PotentialConfig {
  std::string kind = "inverse_square";
  double rho = 1.0;     // vrho
  double varrho = 0.5;  // damped_inverse_square
  double c5 = 0.5;      // subcritical_perturbed
};

struct GridConfig {
  double r_min = 1e-6;
  double r_max = 1e6;
  std::size_t nodes = 4001;
};

struct Tolerances {
  double tol_ode = 1e-10;
  double tol_bvp = 1e-8;
  double tol_min = 1e-8;
  double tol_fp = 1e-7;
  double tol_cert = 1e-7;
  double tol_bisect = 1e-10;
};

struct ScheduleConfig {
  double base = 10.0;
  double step = 0.5;  // R_j = base^{step j}
  int count = 120;
};

struct PicardBlock {
  GridConfig grid{1e-6, 1e12, 6001};
  int max_iters = 20000;
  double divergence_factor = 1e12;
};

struct ThresholdBlock {
  double lo = 1.0;
  double hi = 9.0;
  int max_evaluations = 200;
};

struct CertificateBlock {
  std::optional<double> mu_prime;
  std::optional<double> beta;
  std::optional<double> epsilon;  // absent: optimized
  std::optional<double> c5;       // barrier check only when present
  std::optional<double> varrho;   // critical certificate; default: V r^2 at infinity
  int search_budget = 60;
};

struct VerifyBlock {
  std::string input = "minimal";  // minimal | phi_mu | gamma_mu
  std::vector<double> radii{0.5, 1.0, 2.0};
};

struct ExponentBlock {
  std::string input = "minimal";
  std::vector<std::pair<double, double>> windows{{1e-6, 1e-4}, {1e3, 1e5}};
  bool allow_log = true;
};

struct ExperimentConfig {
  int N = 3;
  double mu = 0.0;
  bool mu_is_mu0 = false;
  PotentialConfig potential;
  GridConfig grid;
  Tolerances tol;
  ScheduleConfig schedule;
  double k = 1.0;
  double probe_r = 1.0;
  PicardBlock picard;
  ThresholdBlock threshold;
  CertificateBlock certificate;
  VerifyBlock verify;
  ExponentBlock exponent;

  MuParams params() const;
  PotentialSpec potential_spec() const;
  LogGrid log_grid() const;
  LogGrid picard_grid() const;
  std::vector<double> radius_schedule() const;
  EngineConfig engine() const;
  ClassifyConfig classify() const;
};

/// Throws ConfigInvalid naming the offending field path.
ExperimentConfig parse_config(const Json& j);
/// Throws IoError when unreadable, ConfigInvalid on bad JSON or schema.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Resolved config, defaults included.
Json to_json(const ExperimentConfig& cfg);

/// Stable key order, doubles at 17 significant digits.
std::string serialize(const Json& j, int indent = 2);
std::string format_double(double x);

/// FNV-1a over the grid's (r_min, r_max, nodes) bytes, as 16 hex digits.
std::string grid_hash(const LogGrid& grid);

/// Worker count: HARDY_FUNDSOL_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Maps fn over items on up to worker_count() threads; results keep input order.
template <class T, class F>
auto parallel_map(const std::vector<T>& items, F fn) -> std::vector<decltype(fn(items[0]))> {
  using R = decltype(fn(items[0]));
  std::vector<std::optional<R>> slots(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(items.size())));
  auto run = [&](unsigned w) {
    for (std::size_t i = w; i < items.size(); i += workers) {
      try {
        slots[i].emplace(fn(items[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& t : pool) t.join();
  std::vector<R> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

struct Table {
  std::vector<double> r, u, phi, gamma;
};

struct PlotSeries {
  std::string label;
  std::vector<double> r, y;
};

struct RunResult {
  Json report;
  int exit_code = 0;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  std::optional<Table> table;
  std::vector<PlotSeries> plot;
};

struct RunOptions {
  std::optional<double> beta_override;
};

/// Runs one subcommand; library errors propagate as hardy::Error.
RunResult run_subcommand(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opts = {});

std::string csv_table(const Table& t);
std::string svg_loglog(const std::vector<PlotSeries>& series, const std::string& title);

/// Full command line: `<subcommand> --config <path> [--out <dir>] [--plots] [--beta b]`.
/// Exit codes: 0 success, 2 undetermined, 1 error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hardy::cli
