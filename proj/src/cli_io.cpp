#include "hardy/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "hardy/error.hpp"
#include "hardy/green_ops.hpp"
#include "hardy/verifier.hpp"

namespace hardy::cli {

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ConfigInvalid, path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Schema-checked access to one JSON object.
class Block {
 public:
  Block(const Json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) invalid(path_.empty() ? "$" : path_, "expected an object");
    for (const auto& [key, _] : j.items()) {
      if (!allowed.count(key)) invalid(join(path_, key), "unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const Json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return require_number(key);
  }
  double require_number(const std::string& key) const {
    if (!has(key)) invalid(path(key), "missing required field");
    const auto& v = j_.at(key);
    if (!v.is_number()) invalid(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) invalid(path(key), "expected a finite number");
    return x;
  }
  std::optional<double> optional_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return require_number(key);
  }
  double positive(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) invalid(path(key), "must be > 0");
    return x;
  }
  long integer(const std::string& key, long fallback, long lo, long hi) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) invalid(path(key), "expected an integer");
    const long x = v.get<long>();
    if (x < lo || x > hi) invalid(path(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
  }
  std::string string(const std::string& key, const std::string& fallback, std::set<std::string> choices) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) invalid(path(key), "expected a string");
    const auto s = v.get<std::string>();
    if (!choices.count(s)) invalid(path(key), "unsupported value '" + s + "'");
    return s;
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) invalid(path(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

 private:
  const Json& j_;
  std::string path_;
};

GridConfig parse_grid(const Json& j, const std::string& path, GridConfig g) {
  Block b(j, path, {"r_min", "r_max", "nodes"});
  g.r_min = b.positive("r_min", g.r_min);
  g.r_max = b.positive("r_max", g.r_max);
  g.nodes = static_cast<std::size_t>(b.integer("nodes", static_cast<long>(g.nodes), 16, 10'000'000));
  if (!(g.r_min < g.r_max)) invalid(join(path, "r_max"), "must exceed r_min");
  return g;
}

Json grid_json(const GridConfig& g) {
  Json j;
  j["r_min"] = g.r_min;
  j["r_max"] = g.r_max;
  j["nodes"] = g.nodes;
  return j;
}

void write_value(const Json& j, std::string& out, int indent, int depth);

void write_scalar(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case Json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case Json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    default:
      out += j.dump();
  }
}

bool scalar_array(const Json& j) {
  for (const auto& v : j) {
    if (v.is_structured()) return false;
  }
  return true;
}

void write_value(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, v] : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad + Json(key).dump() + ": ";
      write_value(v, out, indent, depth + 1);
    }
    out += "\n" + close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (scalar_array(j)) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        write_scalar(j[i], out);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad;
      write_value(j[i], out, indent, depth + 1);
    }
    out += "\n" + close + "]";
  } else {
    write_scalar(j, out);
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs fn and records its wall time under `stage`.
template <class F>
auto timed(RunResult& res, const std::string& stage, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<decltype(fn())>) {
    fn();
    res.timings.emplace_back(stage, seconds_since(t0));
  } else {
    auto v = fn();
    res.timings.emplace_back(stage, seconds_since(t0));
    return v;
  }
}

Json error_json(const Error& e) {
  Json j;
  j["error"] = std::string(to_string(e.kind()));
  j["message"] = e.what();
  return j;
}

Json fit_json(const ExponentFit& f) {
  Json j;
  j["r_lo"] = f.r_lo;
  j["r_hi"] = f.r_hi;
  j["exponent"] = f.exponent;
  j["log_slope_residual"] = f.log_slope_residual;
  j["log_correction"] = f.log_correction;
  return j;
}

Json minimal_json(const MinimalSolutionResult& ms) {
  Json j;
  j["radii_used"] = ms.radii_used.size();
  j["R_final"] = ms.radii_used.empty() ? 0.0 : ms.radii_used.back();
  j["probe_point"] = ms.probe_point;
  j["probe_trace"] = ms.probe_trace;
  j["probe_monotone"] = ms.monotone;
  j["regular_multiplier"] = ms.regular_multiplier;
  if (const auto* b = std::get_if<PositivityBreakdown>(&ms.verdict)) j["R_fail"] = b->R_fail;
  return j;
}

std::string minimal_verdict(const MinimalSolutionResult& ms) {
  if (ms.converged()) return "Converged";
  if (ms.diverged()) return "Diverged";
  return "PositivityBreakdown";
}

Table make_table(const RadialFunction& u, const MuParams& p) {
  Table t;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u.r(i);
    t.r.push_back(r);
    t.u.push_back(u.values[i]);
    t.phi.push_back(phi_mu(p, r));
    t.gamma.push_back(gamma_mu(p, r));
  }
  return t;
}

std::vector<PlotSeries> model_series(const Table& t) {
  return {{"u", t.r, t.u}, {"phi_mu", t.r, t.phi}, {"gamma_mu", t.r, t.gamma}};
}

struct Input {
  std::optional<RadialFunction> u;
  Json info;
};

// The function a verify/exponent run works on.
Input resolve_input(const std::string& which, const ExperimentConfig& cfg, RunResult& res) {
  const auto p = cfg.params();
  const auto grid = cfg.log_grid();
  Input in;
  in.info["input"] = which;
  if (which == "phi_mu") {
    in.u = RadialFunction::sample(grid, [&](double r) { return cfg.k * phi_mu(p, r); });
  } else if (which == "gamma_mu") {
    in.u = RadialFunction::sample(grid, [&](double r) { return cfg.k * gamma_mu(p, r); });
  } else {
    const auto V = cfg.potential_spec();
    const auto R = cfg.radius_schedule();
    try {
      const auto ms = timed(res, "minimal_solution",
                            [&] { return minimal_solution(V, p, cfg.k, R, cfg.probe_r, grid, cfg.engine()); });
      in.info["minimal_solution"] = minimal_verdict(ms);
      if (ms.converged()) in.u = std::get<Converged>(ms.verdict).u;
    } catch (const ScheduleTooShortError& e) {
      in.info["minimal_solution"] = "Undetermined";
      in.info["reason"] = e.what();
    }
  }
  return in;
}

RunResult run_solve(const ExperimentConfig& cfg) {
  RunResult res;
  const auto p = cfg.params();
  const auto V = cfg.potential_spec();
  const auto grid = cfg.log_grid();
  const auto R = cfg.radius_schedule();
  Json out;
  out["tau_minus"] = p.taus.tau_minus;
  out["tau_plus"] = p.taus.tau_plus;
  out["c_mu"] = p.c_mu;
  std::optional<MinimalSolutionResult> ms;
  try {
    ms = timed(res, "minimal_solution", [&] { return minimal_solution(V, p, cfg.k, R, cfg.probe_r, grid, cfg.engine()); });
  } catch (const ScheduleTooShortError& e) {
    out["verdict"] = "Undetermined";
    out["reason"] = e.what();
    out["probe_trace"] = e.trace();
    res.report = out;
    res.exit_code = 2;
    return res;
  }
  out["verdict"] = minimal_verdict(*ms);
  out["minimal_solution"] = minimal_json(*ms);
  if (!ms->converged()) {
    res.report = out;
    return res;
  }
  const auto& u = std::get<Converged>(ms->verdict).u;
  timed(res, "bounds", [&] {
    try {
      const auto lim = origin_ratio_limit(u, p);
      out["origin_ratio_limit"] = lim.limit;
    } catch (const Error& e) {
      out["origin_ratio_limit"] = error_json(e);
    }
    try {
      const auto m = distributional_mass(u, V, p, bump(1.0));
      out["k_estimate"] = m.k_estimate;
      out["mass_error_estimate"] = m.quadrature_error_estimate;
    } catch (const Error& e) {
      out["k_estimate"] = error_json(e);
    }
    Json ex;
    const double r_lo = grid.r_min(), r_hi = grid.r_max();
    for (auto [name, lo, hi] : {std::tuple{"origin", r_lo, r_lo * 100.0}, std::tuple{"infinity", r_hi / 100.0, r_hi}}) {
      try {
        ex[name] = fit_json(fit_exponent(u, lo, hi, p.critical()));
      } catch (const Error& e) {
        ex[name] = error_json(e);
      }
    }
    out["exponents"] = ex;
    out["lower_bound_holds"] = check_lower_bound(u, p, cfg.k);
    const double alpha = V.infinity_limit();
    const double mu_prime = cfg.certificate.mu_prime.value_or(0.5 * (std::max(alpha, 1.0) * p.mu + p.dim.mu0));
    if (mu_prime > p.mu && mu_prime < p.dim.mu0) {
      const auto env = check_envelope(u, p, cfg.k, mu_prime);
      Json e;
      e["mu_prime"] = mu_prime;
      e["holds"] = env.holds;
      e["c1_est"] = env.c1_est;
      out["envelope"] = e;
      const auto pp = make_mu_params(mu_prime, p.dim.N);
      PlotSeries s{"c1 phi_mu'", {}, {}};
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (u.r(i) < 1.0) continue;
        s.r.push_back(u.r(i));
        s.y.push_back(env.c1_est * phi_mu(pp, u.r(i)));
      }
      res.plot.push_back(std::move(s));
    }
  });
  res.table = make_table(u, p);
  auto series = model_series(*res.table);
  res.plot.insert(res.plot.begin(), series.begin(), series.end());
  res.report = out;
  return res;
}

RunResult run_verify(const ExperimentConfig& cfg) {
  RunResult res;
  const auto p = cfg.params();
  const auto V = cfg.potential_spec();
  auto in = resolve_input(cfg.verify.input, cfg, res);
  Json out = in.info;
  out["c_mu"] = p.c_mu;
  if (!in.u) {
    out["verdict"] = "Undetermined";
    res.report = out;
    res.exit_code = 2;
    return res;
  }
  const bool allow_sign = cfg.verify.input != "minimal";
  const auto masses = timed(res, "distributional_mass", [&] {
    return parallel_map(cfg.verify.radii, [&](double R) { return distributional_mass(*in.u, V, p, bump(R), allow_sign); });
  });
  Json arr = Json::array();
  bool sign_change = false;
  for (const auto& m : masses) {
    Json j;
    j["test_function"] = m.test_function_id;
    j["integral_value"] = m.integral_value;
    j["k_estimate"] = m.k_estimate;
    j["quadrature_error_estimate"] = m.quadrature_error_estimate;
    j["sign_changing_input"] = m.sign_changing_input;
    sign_change = sign_change || m.sign_changing_input;
    arr.push_back(j);
  }
  out["masses"] = arr;
  if (sign_change) out["note"] = "input changes sign inside a test-function support; identity evaluated verbatim";
  if (!p.critical()) {
    out["lemma22"] = timed(res, "lemma22", [&] { return lemma22_check(p); });
  } else {
    out["lemma22"] = nullptr;
    out["lemma22_note"] = "identity requires mu < mu0";
  }
  out["verdict"] = "Verified";
  res.table = make_table(*in.u, p);
  res.plot = model_series(*res.table);
  res.report = out;
  return res;
}

RunResult run_exponent(const ExperimentConfig& cfg) {
  RunResult res;
  const auto p = cfg.params();
  auto in = resolve_input(cfg.exponent.input, cfg, res);
  Json out = in.info;
  out["tau_minus"] = p.taus.tau_minus;
  out["tau_plus"] = p.taus.tau_plus;
  if (!in.u) {
    out["verdict"] = "Undetermined";
    res.report = out;
    res.exit_code = 2;
    return res;
  }
  const auto fits = timed(res, "fit_exponent", [&] {
    return parallel_map(cfg.exponent.windows,
                        [&](const std::pair<double, double>& w) {
                          return fit_exponent(*in.u, w.first, w.second, cfg.exponent.allow_log);
                        });
  });
  Json arr = Json::array();
  for (const auto& f : fits) arr.push_back(fit_json(f));
  out["fits"] = arr;
  out["verdict"] = "Fitted";
  res.table = make_table(*in.u, p);
  res.plot = model_series(*res.table);
  res.report = out;
  return res;
}

RunResult run_certify_exist(const ExperimentConfig& cfg) {
  RunResult res;
  const auto p = cfg.params();
  const auto V = cfg.potential_spec();
  const auto grid = cfg.log_grid();
  Json out;
  try {
    if (!p.critical()) {
      const double alpha = V.infinity_limit();
      const double mu_prime = cfg.certificate.mu_prime.value_or(0.5 * (alpha * p.mu + p.dim.mu0));
      const auto c = timed(res, "supersolution_certificate",
                           [&] { return supersolution_certificate(V, p, mu_prime, cfg.tol.tol_cert, grid); });
      Json j;
      j["mu_prime"] = c.mu_prime;
      j["k_star"] = c.k_star;
      j["k0"] = c.constants.k0;
      j["k1"] = c.constants.k1;
      j["r_prime"] = c.constants.r_prime;
      j["iota"] = c.constants.iota;
      j["iota_prime"] = c.constants.iota_prime;
      j["alpha_prime"] = c.constants.alpha_prime;
      j["grid_min_residual"] = c.grid_min_residual;
      j["attempts"] = c.attempts;
      j["valid"] = c.valid;
      out["supersolution_certificate"] = j;
    } else {
      const double varrho = cfg.certificate.varrho.value_or(V.infinity_limit());
      const auto c = timed(res, "critical_supersolution", [&] {
        return critical_supersolution(p, V, varrho, cfg.tol.tol_cert, grid, cfg.certificate.search_budget);
      });
      Json j;
      j["varrho"] = c.varrho;
      j["varrho_prime"] = c.varrho1;
      j["varrho_double_prime"] = c.varrho2;
      j["r_prime"] = c.r_prime;
      j["K1"] = c.K1;
      j["K2"] = c.K2;
      j["k_prime"] = c.k1;
      j["k_double_prime"] = c.k2;
      j["region_min_residual"] = {c.region_min[0], c.region_min[1], c.region_min[2]};
      j["grid_min_residual"] = c.grid_min_residual;
      j["valid"] = c.valid;
      out["critical_supersolution"] = j;
    }
    out["verdict"] = "Existence";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::CertificateFailed) throw;
    out["verdict"] = "Undetermined";
    out["reason"] = e.what();
    res.exit_code = 2;
  }
  if (cfg.certificate.c5) {
    const double c5 = *cfg.certificate.c5;
    const auto bp = barrier_params(p, c5);
    const auto chk = timed(res, "barrier", [&] { return check_barrier(p, c5, V, 1e-8); });
    Json b;
    b["c5"] = c5;
    b["t"] = bp.t;
    b["r_t"] = bp.r_t;
    b["samples"] = chk.samples;
    b["max_scaled_residual"] = chk.max_scaled_residual;
    b["passes"] = chk.passes;
    out["barrier"] = b;
  }
  res.report = out;
  return res;
}

RunResult run_certify_nonexist(const ExperimentConfig& cfg, const RunOptions& opts) {
  RunResult res;
  const auto p = cfg.params();
  double beta = 0.0;
  if (opts.beta_override) {
    beta = *opts.beta_override;
  } else if (cfg.certificate.beta) {
    beta = *cfg.certificate.beta;
  } else {
    beta = cfg.potential_spec().infinity_limit();
  }
  const auto c = timed(res, "nonexistence_certificate", [&] {
    return cfg.certificate.epsilon ? nonexistence_certificate(p.dim, p.mu, beta, *cfg.certificate.epsilon)
                                   : optimized_nonexistence_certificate(p.dim, p.mu, beta);
  });
  Json out;
  out["beta"] = c.beta;
  out["epsilon"] = c.epsilon;
  out["epsilon_policy"] = cfg.certificate.epsilon ? "fixed" : "optimized";
  out["theta"] = c.theta;
  out["sigma_lb"] = c.sigma_lb;
  out["amplification"] = c.amplification;
  out["verdict"] = to_string(c.verdict);
  res.exit_code = c.verdict == NonexistenceVerdict::Nonexistence ? 0 : 2;
  res.report = out;
  return res;
}

Json classification_json(const RhoClassification& c) {
  Json j;
  j["rho"] = c.rho;
  j["classification"] = to_string(c.verdict);
  j["evidence"] = c.evidence;
  j["detail"] = c.detail;
  j["diverged"] = c.diverged;
  return j;
}

RunResult run_threshold(const ExperimentConfig& cfg) {
  RunResult res;
  const auto p = cfg.params();
  const auto rep = timed(res, "estimate_rho_star", [&] {
    return estimate_rho_star(p, cfg.threshold.lo, cfg.threshold.hi, cfg.tol.tol_bisect, cfg.classify(),
                             cfg.threshold.max_evaluations);
  });
  Json out;
  out["mu0_over_mu"] = p.dim.mu0 / p.mu;
  out["rho_lo"] = rep.rho_lo;
  out["rho_hi"] = rep.rho_hi;
  out["bracket_width"] = rep.bracket_width;
  if (rep.band_lo) {
    out["undetermined_band"] = {*rep.band_lo, *rep.band_hi};
  } else {
    out["undetermined_band"] = nullptr;
  }
  out["budget_exhausted"] = rep.budget_exhausted;
  out["monotone"] = classifications_monotone(rep.evaluations);
  Json arr = Json::array();
  for (const auto& e : rep.evaluations) arr.push_back(classification_json(e));
  out["evaluations"] = arr;
  out["verdict"] = "Bracketed";
  res.report = out;
  return res;
}

RunResult run_iterate(const ExperimentConfig& cfg) {
  RunResult res;
  const auto p = cfg.params();
  PicardConfig pc;
  pc.tol_fp = cfg.tol.tol_fp;
  pc.max_iters = cfg.picard.max_iters;
  pc.divergence_factor = cfg.picard.divergence_factor;
  pc.probe_r = cfg.probe_r;
  const auto tr = timed(res, "picard_iterate",
                        [&] { return picard_iterate(cfg.potential_spec(), p, cfg.k, cfg.picard_grid(), pc); });
  Json out;
  out["verdict"] = to_string(tr.verdict);
  out["iterations"] = tr.residuals.size();
  out["monotone"] = tr.monotone;
  out["probe_r"] = cfg.probe_r;
  out["probe_values"] = tr.probe_values;
  out["residuals"] = tr.residuals;
  res.exit_code = tr.verdict == PicardVerdict::MaxIters ? 2 : 0;
  res.table = make_table(tr.last, p);
  res.plot = model_series(*res.table);
  res.report = out;
  return res;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace

MuParams ExperimentConfig::params() const {
  const auto d = make_dimension(N);
  return make_mu_params(mu_is_mu0 ? d.mu0 : mu, N);
}

PotentialSpec ExperimentConfig::potential_spec() const {
  const auto& k = potential.kind;
  if (k == "inverse_square") return PotentialSpec::inverse_square();
  if (k == "vrho") return PotentialSpec::v_rho(potential.rho);
  if (k == "damped_inverse_square") return PotentialSpec::damped_inverse_square(potential.varrho);
  if (k == "log_perturbed") return PotentialSpec::log_perturbed();
  return PotentialSpec::subcritical_perturbed(potential.c5);
}

LogGrid ExperimentConfig::log_grid() const { return LogGrid::from_radii(grid.r_min, grid.r_max, grid.nodes); }

LogGrid ExperimentConfig::picard_grid() const {
  return LogGrid::from_radii(picard.grid.r_min, picard.grid.r_max, picard.grid.nodes);
}

std::vector<double> ExperimentConfig::radius_schedule() const {
  std::vector<double> R;
  for (int j = 1; j <= schedule.count; ++j) R.push_back(std::pow(schedule.base, schedule.step * j));
  return R;
}

EngineConfig ExperimentConfig::engine() const {
  EngineConfig e;
  e.tol_ode = tol.tol_ode;
  e.tol_bvp = tol.tol_bvp;
  e.tol_min = tol.tol_min;
  return e;
}

ClassifyConfig ExperimentConfig::classify() const {
  ClassifyConfig c;
  c.engine = engine();
  c.grid = log_grid();
  c.R_schedule = radius_schedule();
  c.probe_r = probe_r;
  c.k = k;
  c.picard.tol_fp = tol.tol_fp;
  c.picard.max_iters = picard.max_iters;
  c.picard.divergence_factor = picard.divergence_factor;
  c.picard.probe_r = probe_r;
  c.picard_grid = picard_grid();
  c.tol_cert = tol.tol_cert;
  return c;
}

ExperimentConfig parse_config(const Json& j) {
  Block top(j, "", {"N", "mu", "potential", "grid", "tolerances", "R_schedule", "k", "probe_r", "picard", "threshold",
                    "certificate", "verify", "exponent"});
  ExperimentConfig c;
  if (!top.has("N")) invalid("N", "missing required field");
  c.N = static_cast<int>(top.integer("N", 3, 3, 64));
  const auto dim = make_dimension(c.N);
  if (!top.has("mu")) invalid("mu", "missing required field");
  if (top.at("mu").is_string()) {
    if (top.at("mu").get<std::string>() != "mu0") invalid("mu", "expected a number or \"mu0\"");
    c.mu_is_mu0 = true;
    c.mu = dim.mu0;
  } else {
    c.mu = top.require_number("mu");
    if (!(c.mu > 0.0 && c.mu <= dim.mu0)) invalid("mu", "must lie in (0, mu0] with mu0 = " + format_double(dim.mu0));
  }

  if (!top.has("potential")) invalid("potential", "missing required field");
  {
    Block b(top.at("potential"), "potential", {"kind", "rho", "varrho", "c5"});
    if (!b.has("kind")) invalid("potential.kind", "missing required field");
    c.potential.kind = b.string("kind", "inverse_square",
                                {"inverse_square", "vrho", "damped_inverse_square", "log_perturbed", "subcritical_perturbed"});
    const auto& k = c.potential.kind;
    if (k == "vrho") {
      c.potential.rho = b.require_number("rho");
      if (!(c.potential.rho >= 1.0)) invalid("potential.rho", "must be >= 1");
    } else if (b.has("rho")) {
      invalid("potential.rho", "only used by kind vrho");
    }
    if (k == "damped_inverse_square") {
      c.potential.varrho = b.require_number("varrho");
      if (!(c.potential.varrho >= 0.0 && c.potential.varrho <= 1.0)) invalid("potential.varrho", "must lie in [0, 1]");
    } else if (b.has("varrho")) {
      invalid("potential.varrho", "only used by kind damped_inverse_square");
    }
    if (k == "subcritical_perturbed") {
      c.potential.c5 = b.require_number("c5");
      if (!(c.potential.c5 > 0.0 && c.potential.c5 < 1.0)) invalid("potential.c5", "must lie in (0, 1)");
    } else if (b.has("c5")) {
      invalid("potential.c5", "only used by kind subcritical_perturbed");
    }
  }
  if (top.has("grid")) c.grid = parse_grid(top.at("grid"), "grid", c.grid);
  if (top.has("tolerances")) {
    Block b(top.at("tolerances"), "tolerances", {"tol_ode", "tol_bvp", "tol_min", "tol_fp", "tol_cert", "tol_bisect"});
    c.tol.tol_ode = b.positive("tol_ode", c.tol.tol_ode);
    c.tol.tol_bvp = b.positive("tol_bvp", c.tol.tol_bvp);
    c.tol.tol_min = b.positive("tol_min", c.tol.tol_min);
    c.tol.tol_fp = b.positive("tol_fp", c.tol.tol_fp);
    c.tol.tol_cert = b.positive("tol_cert", c.tol.tol_cert);
    c.tol.tol_bisect = b.positive("tol_bisect", c.tol.tol_bisect);
  }
  if (top.has("R_schedule")) {
    Block b(top.at("R_schedule"), "R_schedule", {"base", "step", "count"});
    c.schedule.base = b.positive("base", c.schedule.base);
    c.schedule.step = b.positive("step", c.schedule.step);
    c.schedule.count = static_cast<int>(b.integer("count", c.schedule.count, 1, 100000));
    if (!(c.schedule.base > 1.0)) invalid("R_schedule.base", "must exceed 1");
  }
  c.k = top.positive("k", c.k);
  c.probe_r = top.positive("probe_r", c.probe_r);
  if (top.has("picard")) {
    Block b(top.at("picard"), "picard", {"grid", "max_iters", "divergence_factor"});
    if (b.has("grid")) c.picard.grid = parse_grid(b.at("grid"), "picard.grid", c.picard.grid);
    c.picard.max_iters = static_cast<int>(b.integer("max_iters", c.picard.max_iters, 1, 100'000'000));
    c.picard.divergence_factor = b.positive("divergence_factor", c.picard.divergence_factor);
  }
  if (top.has("threshold")) {
    Block b(top.at("threshold"), "threshold", {"lo", "hi", "max_evaluations"});
    c.threshold.lo = b.number("lo", c.threshold.lo);
    c.threshold.hi = b.number("hi", c.threshold.hi);
    c.threshold.max_evaluations = static_cast<int>(b.integer("max_evaluations", c.threshold.max_evaluations, 2, 100000));
    if (!(c.threshold.lo >= 1.0)) invalid("threshold.lo", "must be >= 1");
  }
  if (top.has("certificate")) {
    Block b(top.at("certificate"), "certificate", {"mu_prime", "beta", "epsilon", "c5", "varrho", "search_budget"});
    c.certificate.mu_prime = b.optional_number("mu_prime");
    c.certificate.beta = b.optional_number("beta");
    if (b.has("epsilon")) {
      if (b.at("epsilon").is_string()) {
        if (b.at("epsilon").get<std::string>() != "optimize") invalid("certificate.epsilon", "expected a number or \"optimize\"");
      } else {
        c.certificate.epsilon = b.require_number("epsilon");
      }
    }
    c.certificate.c5 = b.optional_number("c5");
    if (c.certificate.c5 && !(*c.certificate.c5 >= 0.0)) invalid("certificate.c5", "must be >= 0");
    c.certificate.varrho = b.optional_number("varrho");
    c.certificate.search_budget = static_cast<int>(b.integer("search_budget", c.certificate.search_budget, 1, 10000));
  }
  if (top.has("verify")) {
    Block b(top.at("verify"), "verify", {"input", "radii"});
    c.verify.input = b.string("input", c.verify.input, {"minimal", "phi_mu", "gamma_mu"});
    if (b.has("radii")) {
      const auto& a = b.at("radii");
      if (!a.is_array() || a.empty()) invalid("verify.radii", "expected a nonempty array");
      c.verify.radii.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string path = "verify.radii[" + std::to_string(i) + "]";
        if (!a[i].is_number() || !(a[i].get<double>() > 0.0)) invalid(path, "expected a positive number");
        c.verify.radii.push_back(a[i].get<double>());
      }
    }
  }
  if (top.has("exponent")) {
    Block b(top.at("exponent"), "exponent", {"input", "windows", "allow_log"});
    c.exponent.input = b.string("input", c.exponent.input, {"minimal", "phi_mu", "gamma_mu"});
    c.exponent.allow_log = b.boolean("allow_log", c.exponent.allow_log);
    if (b.has("windows")) {
      const auto& a = b.at("windows");
      if (!a.is_array() || a.empty()) invalid("exponent.windows", "expected a nonempty array");
      c.exponent.windows.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string path = "exponent.windows[" + std::to_string(i) + "]";
        const auto& w = a[i];
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
          invalid(path, "expected [r_lo, r_hi]");
        }
        const double lo = w[0].get<double>(), hi = w[1].get<double>();
        if (!(lo > 0.0 && lo < hi)) invalid(path, "need 0 < r_lo < r_hi");
        c.exponent.windows.emplace_back(lo, hi);
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    invalid("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["N"] = c.N;
  if (c.mu_is_mu0) {
    j["mu"] = "mu0";
  } else {
    j["mu"] = c.mu;
  }
  Json pot;
  pot["kind"] = c.potential.kind;
  if (c.potential.kind == "vrho") pot["rho"] = c.potential.rho;
  if (c.potential.kind == "damped_inverse_square") pot["varrho"] = c.potential.varrho;
  if (c.potential.kind == "subcritical_perturbed") pot["c5"] = c.potential.c5;
  j["potential"] = pot;
  j["grid"] = grid_json(c.grid);
  Json t;
  t["tol_ode"] = c.tol.tol_ode;
  t["tol_bvp"] = c.tol.tol_bvp;
  t["tol_min"] = c.tol.tol_min;
  t["tol_fp"] = c.tol.tol_fp;
  t["tol_cert"] = c.tol.tol_cert;
  t["tol_bisect"] = c.tol.tol_bisect;
  j["tolerances"] = t;
  j["R_schedule"] = {{"base", c.schedule.base}, {"step", c.schedule.step}, {"count", c.schedule.count}};
  j["k"] = c.k;
  j["probe_r"] = c.probe_r;
  j["picard"] = {{"grid", grid_json(c.picard.grid)},
                 {"max_iters", c.picard.max_iters},
                 {"divergence_factor", c.picard.divergence_factor}};
  j["threshold"] = {{"lo", c.threshold.lo}, {"hi", c.threshold.hi}, {"max_evaluations", c.threshold.max_evaluations}};
  Json cert;
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  cert["mu_prime"] = opt(c.certificate.mu_prime);
  cert["beta"] = opt(c.certificate.beta);
  cert["epsilon"] = c.certificate.epsilon ? Json(*c.certificate.epsilon) : Json("optimize");
  cert["c5"] = opt(c.certificate.c5);
  cert["varrho"] = opt(c.certificate.varrho);
  cert["search_budget"] = c.certificate.search_budget;
  j["certificate"] = cert;
  j["verify"] = {{"input", c.verify.input}, {"radii", c.verify.radii}};
  Json wins = Json::array();
  for (const auto& [lo, hi] : c.exponent.windows) wins.push_back({lo, hi});
  j["exponent"] = {{"input", c.exponent.input}, {"windows", wins}, {"allow_log", c.exponent.allow_log}};
  return j;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "\"NaN\"";
  if (std::isinf(x)) return x > 0 ? "\"Infinity\"" : "\"-Infinity\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string serialize(const Json& j, int indent) {
  std::string out;
  write_value(j, out, indent, 0);
  return out;
}

std::string grid_hash(const LogGrid& grid) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const double a = grid.r_min(), b = grid.r_max();
  const std::uint64_t n = grid.size();
  feed(&a, sizeof a);
  feed(&b, sizeof b);
  feed(&n, sizeof n);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HARDY_FUNDSOL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

RunResult run_subcommand(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opts) {
  RunResult res;
  if (name == "solve") {
    res = run_solve(cfg);
  } else if (name == "verify") {
    res = run_verify(cfg);
  } else if (name == "exponent") {
    res = run_exponent(cfg);
  } else if (name == "certify-exist") {
    res = run_certify_exist(cfg);
  } else if (name == "certify-nonexist") {
    res = run_certify_nonexist(cfg, opts);
  } else if (name == "threshold") {
    res = run_threshold(cfg);
  } else if (name == "iterate") {
    res = run_iterate(cfg);
  } else {
    throw Error(ErrorKind::PreconditionViolated, "unknown subcommand " + name);
  }
  Json report;
  report["subcommand"] = name;
  report["config"] = to_json(cfg);
  report["results"] = res.report;
  report["exit_code"] = res.exit_code;
  Json prov;
  prov["artifact_version"] = kArtifactVersion;
  prov["grid_hash"] = grid_hash(cfg.log_grid());
  report["provenance"] = prov;
  res.report = std::move(report);
  return res;
}

std::string csv_table(const Table& t) {
  std::string out = "r,u,phi_mu,gamma_mu,ratio_u_phi\n";
  char buf[128];
  for (std::size_t i = 0; i < t.r.size(); ++i) {
    for (double v : {t.r[i], t.u[i], t.phi[i], t.gamma[i], t.u[i] / t.phi[i]}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      out += ',';
    }
    out.back() = '\n';
  }
  return out;
}

std::string svg_loglog(const std::vector<PlotSeries>& series, const std::string& title) {
  const double W = 800, H = 520, L = 80, R = 160, T = 40, B = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.r.size(); ++i) {
      const double y = std::abs(s.y[i]);
      if (!(s.r[i] > 0 && y > 0 && std::isfinite(y))) continue;
      xmin = std::min(xmin, std::log10(s.r[i]));
      xmax = std::max(xmax, std::log10(s.r[i]));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto X = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto Y = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int xstep = std::max(1, static_cast<int>((xmax - xmin) / 8));
  for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); d += xstep) {
    os << "<text x=\"" << X(d) << "\" y=\"" << H - B + 20 << "\" font-size=\"11\" text-anchor=\"middle\">1e" << d
       << "</text>\n";
  }
  const int ystep = std::max(1, static_cast<int>((ymax - ymin) / 8));
  for (int d = static_cast<int>(std::ceil(ymin)); d <= static_cast<int>(std::floor(ymax)); d += ystep) {
    os << "<text x=\"" << L - 8 << "\" y=\"" << Y(d) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e" << d
       << "</text>\n";
  }
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 5] << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t stride = std::max<std::size_t>(1, s.r.size() / 800);
    for (std::size_t i = 0; i < s.r.size(); i += stride) {
      const double y = std::abs(s.y[i]);
      if (!(s.r[i] > 0 && y > 0 && std::isfinite(y))) continue;
      os << X(std::log10(s.r[i])) << ',' << Y(std::log10(y)) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 20 + 18 * k << "\" font-size=\"12\" fill=\"" << colors[k % 5]
       << "\">" << s.label << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" font-size=\"12\" text-anchor=\"middle\">r</text>\n";
  os << "</svg>\n";
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fundamental solutions of -Δ - μV with inverse-square-type V", "hardy-fundsol"};
  app.require_subcommand(1);
  std::string config, out_dir = "out";
  bool plots = false;
  std::optional<double> beta;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"solve", "minimal positive solution, bounds and mass"},
      {"verify", "distributional identity and the Newtonian-potential identity"},
      {"exponent", "power-law exponent fits"},
      {"certify-exist", "super-solution certificates"},
      {"certify-nonexist", "amplification certificate for nonexistence"},
      {"threshold", "bisection for the existence threshold of V_rho"},
      {"iterate", "Picard iteration trace"},
  };
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", config, "JSON config")->required();
    s->add_option("--out", out_dir, "output directory");
    s->add_flag("--plots", plots, "write SVG plots");
    if (name == "certify-nonexist") s->add_option("--beta", beta, "liminf of V r^2 at infinity");
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = load_config(config);
    RunOptions opts;
    opts.beta_override = beta;
    auto res = run_subcommand(name, cfg, opts);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "report.json", serialize(res.report) + "\n");
    Json tj;
    for (const auto& [stage, secs] : res.timings) tj[stage] = secs;
    write_file(dir / "timings.json", serialize(tj) + "\n");
    if (res.table) write_file(dir / "data.csv", csv_table(*res.table));
    if (plots && !res.plot.empty()) write_file(dir / "plot.svg", svg_loglog(res.plot, name));
    const auto& verdict = res.report["results"].contains("verdict") ? res.report["results"]["verdict"] : Json("n/a");
    out << name << ": " << verdict.get<std::string>() << " (report " << (dir / "report.json").string() << ")\n";
    return res.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hardy::cli
