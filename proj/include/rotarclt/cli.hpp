#pragma once

// Command-line front end: argument parsing into a validated RunConfig,
// dispatch to the library, and CSV / JSON emission.
//
// Exit codes: 0 success, 1 numeric or I/O failure, 2 an audited inequality
// failed, 64 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "rotarclt/conditions.hpp"
#include "rotarclt/dist_model.hpp"
#include "rotarclt/errors.hpp"
#include "rotarclt/monte_carlo.hpp"
#include "rotarclt/random_index.hpp"
#include "rotarclt/rates.hpp"

namespace rotarclt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitAuditFailed = 2;
inline constexpr int kExitUsage = 64;

enum class Subcommand { kConditions, kSimulate, kRates, kCfCheck, kAudit };
enum class OutputFormat { kCsv, kJson };
enum class RateMode { kLargeO, kSmallO };

inline std::string_view to_string(Subcommand s) {
  switch (s) {
    case Subcommand::kConditions: return "conditions";
    case Subcommand::kSimulate: return "simulate";
    case Subcommand::kRates: return "rates";
    case Subcommand::kCfCheck: return "cf-check";
    case Subcommand::kAudit: return "audit";
  }
  return "?";
}

struct RunConfig {
  Subcommand subcommand = Subcommand::kConditions;
  std::string family = SummandFamily::rademacher().spec();
  std::string index = "det";
  std::vector<std::int64_t> n_grid{10, 100, 1000};
  std::vector<double> epsilon{0.5};
  std::vector<double> delta{1.0};
  std::int64_t trials = 100000;
  std::uint64_t seed = 0;
  double quad_tol = 1e-10;
  std::string fn = "sin";
  std::optional<double> alpha;
  std::vector<double> t_grid{0.0, 0.5, 1.0, 2.0, 4.0};
  RotarScale rotar_scale = RotarScale::kVariance;
  RateMode mode = RateMode::kLargeO;
  OutputFormat format = OutputFormat::kCsv;
  std::string out = "-";

  bool operator==(const RunConfig&) const = default;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --help was requested; what() holds the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest of %.15g / %.17g that reads back as the same double.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_floating_point_v<T>) {
      out << format_number(values[i]);
    } else {
      out << values[i];
    }
  }
  return out.str();
}

inline void validate(RunConfig& cfg) {
  try {
    cfg.family = parse_family(cfg.family).spec();
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--family: ") + e.what());
  }
  try {
    cfg.index = parse_index(cfg.index).spec();
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--index: ") + e.what());
  }
  if (cfg.n_grid.empty()) throw UsageError("--n-grid: needs at least one value");
  for (auto n : cfg.n_grid) {
    if (n < 1) throw UsageError("--n-grid: values must be >= 1");
  }
  if (cfg.epsilon.empty()) throw UsageError("--epsilon: needs at least one value");
  for (double e : cfg.epsilon) {
    if (!(e > 0.0) || !std::isfinite(e)) throw UsageError("--epsilon: values must be finite and > 0");
  }
  if (cfg.delta.empty()) throw UsageError("--delta: needs at least one value");
  for (double d : cfg.delta) {
    if (!(d > 0.0 && d <= 1.0)) throw UsageError("--delta: values must lie in (0, 1]");
  }
  if (cfg.trials < 1) throw UsageError("--trials: must be >= 1");
  if (!(cfg.quad_tol > 0.0 && cfg.quad_tol <= 1e-4)) throw UsageError("--quad-tol: must lie in (0, 1e-4]");
  if (cfg.alpha && !(*cfg.alpha > 0.0 && *cfg.alpha <= 1.0)) throw UsageError("--alpha: must lie in (0, 1]");
  try {
    test_functions::by_id(cfg.fn);
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--fn: ") + e.what());
  }
  if (cfg.t_grid.empty()) throw UsageError("--t-grid: needs at least one value");
}

}  // namespace detail

/// Parses argv (without the program name). Throws UsageError or HelpRequested.
inline RunConfig parse_args(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"Numerical checks of CLT conditions for random sums", "rotarclt"};
  app.require_subcommand(1, 1);

  std::optional<std::int64_t> single_n;
  std::optional<double> alpha;
  std::string format;
  std::string mode = "large-o";
  std::string rotar_scale = "variance";

  const std::vector<std::pair<Subcommand, std::string>> commands{
      {Subcommand::kConditions, "Evaluate the condition functionals"},
      {Subcommand::kSimulate, "Monte Carlo Kolmogorov distance sweep"},
      {Subcommand::kRates, "Smooth-metric rate audit"},
      {Subcommand::kCfCheck, "Characteristic-function identity for normal summands"},
      {Subcommand::kAudit, "Check the implication inequalities"}};
  std::vector<CLI::App*> subs;
  for (const auto& [kind, help] : commands) {
    auto* sub = app.add_subcommand(std::string(to_string(kind)), help);
    sub->add_option("--family", cfg.family, "family=<kind>[,sigma=..][,ratio=..]");
    sub->add_option("--index", cfg.index, "index=<kind>[:<param>]");
    sub->add_option("--n", single_n, "single outer n");
    sub->add_option("--n-grid", cfg.n_grid, "comma-separated outer n values")->delimiter(',');
    sub->add_option("--epsilon", cfg.epsilon, "comma-separated epsilon values")->delimiter(',');
    sub->add_option("--delta", cfg.delta, "comma-separated Lyapunov delta values")->delimiter(',');
    sub->add_option("--trials", cfg.trials, "Monte Carlo trials");
    sub->add_option("--seed", cfg.seed, "RNG seed (default 0)");
    sub->add_option("--quad-tol", cfg.quad_tol, "absolute quadrature tolerance");
    sub->add_option("--fn", cfg.fn, "test function: sin, cos2, clamp, bump");
    sub->add_option("--alpha", alpha, "Lipschitz order override");
    sub->add_option("--t-grid", cfg.t_grid, "comma-separated t values")->delimiter(',');
    sub->add_option("--rotar-scale", rotar_scale, "variance (1/B^2) or deviation (1/B)")
        ->check(CLI::IsMember({"variance", "deviation"}));
    sub->add_option("--mode", mode, "large-o or small-o")->check(CLI::IsMember({"large-o", "small-o"}));
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", cfg.out, "output path, '-' for stdout");
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) cfg.subcommand = commands[i].first;
  }
  if (single_n) cfg.n_grid = {*single_n};
  cfg.alpha = alpha;
  cfg.mode = mode == "small-o" ? RateMode::kSmallO : RateMode::kLargeO;
  cfg.rotar_scale = rotar_scale == "deviation" ? RotarScale::kDeviation : RotarScale::kVariance;
  if (format.empty()) {
    cfg.format = cfg.subcommand == Subcommand::kAudit ? OutputFormat::kJson : OutputFormat::kCsv;
  } else {
    cfg.format = format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  }
  detail::validate(cfg);
  return cfg;
}

/// Flags that reproduce `cfg` under parse_args.
inline std::vector<std::string> config_args(const RunConfig& cfg) {
  std::vector<std::string> a{std::string(to_string(cfg.subcommand)),
                             "--family", cfg.family,
                             "--index", cfg.index,
                             "--n-grid", detail::join(cfg.n_grid),
                             "--epsilon", detail::join(cfg.epsilon),
                             "--delta", detail::join(cfg.delta),
                             "--trials", std::to_string(cfg.trials),
                             "--seed", std::to_string(cfg.seed),
                             "--quad-tol", detail::format_number(cfg.quad_tol),
                             "--fn", cfg.fn,
                             "--t-grid", detail::join(cfg.t_grid),
                             "--rotar-scale", std::string(to_string(cfg.rotar_scale)),
                             "--mode", cfg.mode == RateMode::kSmallO ? "small-o" : "large-o",
                             "--format", cfg.format == OutputFormat::kJson ? "json" : "csv",
                             "--out", cfg.out};
  if (cfg.alpha) {
    a.push_back("--alpha");
    a.push_back(detail::format_number(*cfg.alpha));
  }
  return a;
}

inline std::string print_config(const RunConfig& cfg) {
  std::string line;
  for (const auto& arg : config_args(cfg)) {
    if (!line.empty()) line += ' ';
    line += arg;
  }
  return line;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Writes to a temporary file next to `path` and renames it into place.
inline void write_atomically(const std::string& path, const std::string& content) {
  if (path == "-" || path.empty()) {
    std::cout << content << std::flush;
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path temp = target;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream file(temp, std::ios::binary | std::ios::trunc);
    if (!file) throw std::ios_base::failure("cannot open '" + temp.string() + "' for writing");
    file << content;
    file.flush();
    if (!file) throw std::ios_base::failure("write to '" + temp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(temp, target, ec);
  if (ec) {
    std::filesystem::remove(temp);
    throw std::ios_base::failure("cannot rename onto '" + path + "': " + ec.message());
  }
}

namespace detail {

inline std::string csv_number(double v) { return format_number(v); }

inline std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

inline nlohmann::ordered_json to_json(const ConditionReport& r) {
  nlohmann::ordered_json j;
  j["condition"] = std::string(to_string(r.condition));
  j["n"] = r.n;
  j["epsilon"] = r.epsilon ? nlohmann::ordered_json(*r.epsilon) : nlohmann::ordered_json(nullptr);
  j["delta"] = r.delta ? nlohmann::ordered_json(*r.delta) : nlohmann::ordered_json(nullptr);
  j["value"] = r.value;
  j["error_bound"] = r.error_bound;
  return j;
}

inline nlohmann::ordered_json to_json(const InequalityCheck& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["statement"] = c.statement;
  j["lhs"] = c.lhs;
  j["rhs"] = c.rhs;
  j["lhs_error"] = c.lhs_error;
  j["rhs_error"] = c.rhs_error;
  j["slack"] = c.slack;
  j["passed"] = c.passed;
  return j;
}

inline ConditionOptions condition_options(const RunConfig& cfg) {
  ConditionOptions o;
  o.quadrature.abs_tol = cfg.quad_tol;
  o.rotar_scale = cfg.rotar_scale;
  return o;
}

inline int run_conditions(const RunConfig& cfg, std::string& out) {
  const auto family = parse_family(cfg.family);
  const auto index = parse_index(cfg.index);
  const auto opts = condition_options(cfg);
  std::vector<ConditionReport> rows;
  for (auto n : cfg.n_grid) {
    const auto model = index.model_for(n);
    for (double d : cfg.delta) rows.push_back(lyapunov(family, n, d, opts));
    rows.push_back(feller(family, n));
    for (double e : cfg.epsilon) {
      rows.push_back(lindeberg(family, n, e, opts));
      rows.push_back(infinitesimality(family, n, e, opts));
      rows.push_back(rotar(family, n, e, opts));
    }
    // Randomized rows are labelled with the outer n of the sweep.
    auto labelled = [n](ConditionReport r) {
      r.n = n;
      return r;
    };
    rows.push_back(labelled(random_feller(family, model, opts)));
    for (double e : cfg.epsilon) {
      rows.push_back(labelled(random_lindeberg(family, model, e, opts)));
      rows.push_back(labelled(random_rotar(family, model, e, opts)));
    }
  }
  if (cfg.format == OutputFormat::kJson) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) j.push_back(to_json(r));
    out = j.dump(2) + "\n";
  } else {
    out = "condition,n,epsilon,delta,value,error_bound\n";
    for (const auto& r : rows) {
      out += std::string(to_string(r.condition)) + ',' + std::to_string(r.n) + ',' + optional_number(r.epsilon) +
             ',' + optional_number(r.delta) + ',' + csv_number(r.value) + ',' + csv_number(r.error_bound) + '\n';
    }
  }
  return kExitOk;
}

inline int run_simulate(const RunConfig& cfg, std::string& out) {
  const auto family = parse_family(cfg.family);
  const auto index = parse_index(cfg.index);
  const auto sweep = clt_sweep(family, index, cfg.n_grid, cfg.trials, cfg.seed);
  if (cfg.format == OutputFormat::kJson) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& p : sweep) {
      j.push_back({{"n", p.n},
                   {"trials", cfg.trials},
                   {"seed", cfg.seed},
                   {"d_hat", p.estimate.d_hat},
                   {"dkw_band", p.estimate.dkw_band},
                   {"ks_p_value", p.estimate.p_value},
                   {"mean", p.moments.mean},
                   {"variance", p.moments.variance}});
    }
    out = j.dump(2) + "\n";
  } else {
    out = "n,trials,seed,d_hat,dkw_band\n";
    for (const auto& p : sweep) {
      out += std::to_string(p.n) + ',' + std::to_string(cfg.trials) + ',' + std::to_string(cfg.seed) + ',' +
             csv_number(p.estimate.d_hat) + ',' + csv_number(p.estimate.dkw_band) + '\n';
    }
  }
  return kExitOk;
}

inline int run_rates(const RunConfig& cfg, std::string& out) {
  const auto family = parse_family(cfg.family);
  const auto index = parse_index(cfg.index);
  const auto f = test_functions::by_id(cfg.fn);
  RateCurve curve;
  if (cfg.mode == RateMode::kLargeO) {
    curve = large_o_audit(family, index, f, cfg.n_grid, cfg.trials, cfg.seed, cfg.alpha);
  } else {
    curve = small_o_audit(family, index, f, cfg.n_grid, cfg.epsilon, cfg.trials, cfg.seed, {},
                          condition_options(cfg));
  }
  if (cfg.format == OutputFormat::kJson) {
    nlohmann::ordered_json j;
    j["mode"] = cfg.mode == RateMode::kSmallO ? "small-o" : "large-o";
    j["fn"] = f.id;
    auto nan_safe = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
    j["fitted_order"] = nan_safe(curve.fitted_order);
    j["fit_residual"] = nan_safe(curve.fit_residual);
    j["bound_order"] = nan_safe(curve.bound_order);
    j["fitted_constant"] = curve.fitted_constant;
    j["within_bound"] = curve.within_bound;
    j["decreasing"] = curve.decreasing;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : curve.points) {
      nlohmann::ordered_json q{{"n", p.n},           {"metric", p.metric},       {"mc_stderr", p.mc_stderr},
                               {"bound", p.bound},   {"ratio", p.ratio},         {"m1_prefix", nan_safe(p.m1_prefix)},
                               {"m2_prefix", nan_safe(p.m2_prefix)}};
      q["theorem_bound"] = p.theorem_bound ? nlohmann::ordered_json(*p.theorem_bound) : nlohmann::ordered_json(nullptr);
      q["majorants"] = nlohmann::ordered_json::array();
      for (const auto& m : p.majorants) q["majorants"].push_back({{"epsilon", m.epsilon}, {"value", m.value}});
      j["points"].push_back(q);
    }
    out = j.dump(2) + "\n";
  } else {
    out = "n,metric,mc_stderr,bound,ratio\n";
    for (const auto& p : curve.points) {
      out += std::to_string(p.n) + ',' + csv_number(p.metric) + ',' + csv_number(p.mc_stderr) + ',' +
             csv_number(p.bound) + ',' + csv_number(p.ratio) + '\n';
    }
  }
  return kExitOk;
}

inline int run_cf_check(const RunConfig& cfg, std::string& out, std::ostream& diag) {
  const auto family = parse_family(cfg.family);
  const auto index = parse_index(cfg.index);
  double worst = 0.0;
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  std::string csv = "n,t,mixture,target,deviation\n";
  for (auto n : cfg.n_grid) {
    const auto check = cf_identity_check(family, index.model_for(n), cfg.t_grid);
    worst = std::max(worst, check.max_deviation);
    for (const auto& p : check.points) {
      csv += std::to_string(n) + ',' + csv_number(p.t) + ',' + csv_number(p.mixture) + ',' + csv_number(p.target) +
             ',' + csv_number(p.deviation) + '\n';
      j.push_back({{"n", n}, {"t", p.t}, {"mixture", p.mixture}, {"target", p.target}, {"deviation", p.deviation}});
    }
  }
  out = cfg.format == OutputFormat::kJson ? j.dump(2) + "\n" : csv;
  diag << "max_deviation " << format_number(worst) << '\n';
  return kExitOk;
}

inline int run_audit(const RunConfig& cfg, std::string& out) {
  const auto family = parse_family(cfg.family);
  const auto index = parse_index(cfg.index);
  const auto opts = condition_options(cfg);
  nlohmann::ordered_json j;
  j["family"] = cfg.family;
  j["index"] = cfg.index;
  j["rotar_scale"] = std::string(to_string(cfg.rotar_scale));
  j["quad_tol"] = cfg.quad_tol;
  j["audits"] = nlohmann::ordered_json::array();
  std::string csv = "n,epsilon,delta,check,lhs,rhs,slack,passed\n";
  bool all_passed = true;
  for (auto n : cfg.n_grid) {
    const auto model = index.model_for(n);
    for (double e : cfg.epsilon) {
      for (double d : cfg.delta) {
        const auto audit = implication_audit(family, model, n, e, d, opts);
        all_passed = all_passed && audit.passed();
        nlohmann::ordered_json a;
        a["n"] = n;
        a["index_model"] = audit.index;
        a["epsilon"] = e;
        a["delta"] = d;
        a["passed"] = audit.passed();
        a["reports"] = nlohmann::ordered_json::array();
        for (const auto& r : audit.reports) a["reports"].push_back(to_json(r));
        a["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : audit.checks) {
          a["checks"].push_back(to_json(c));
          csv += std::to_string(n) + ',' + csv_number(e) + ',' + csv_number(d) + ',' + c.id + ',' +
                 csv_number(c.lhs) + ',' + csv_number(c.rhs) + ',' + csv_number(c.slack) + ',' +
                 (c.passed ? "true" : "false") + '\n';
        }
        j["audits"].push_back(a);
      }
    }
  }
  j["passed"] = all_passed;
  out = cfg.format == OutputFormat::kJson ? j.dump(2) + "\n" : csv;
  return all_passed ? kExitOk : kExitAuditFailed;
}

}  // namespace detail

/// Executes a validated config. Output goes to cfg.out; messages to diag.
inline int run(const RunConfig& cfg, std::ostream& diag = std::cerr) {
  std::string out;
  int status = kExitOk;
  try {
    switch (cfg.subcommand) {
      case Subcommand::kConditions: status = detail::run_conditions(cfg, out); break;
      case Subcommand::kSimulate: status = detail::run_simulate(cfg, out); break;
      case Subcommand::kRates: status = detail::run_rates(cfg, out); break;
      case Subcommand::kCfCheck: status = detail::run_cf_check(cfg, out, diag); break;
      case Subcommand::kAudit: status = detail::run_audit(cfg, out); break;
    }
    write_atomically(cfg.out, out);
  } catch (const ConfigError& e) {
    diag << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    diag << "numeric error: " << e.what() << " (partial value " << detail::format_number(e.partial_value())
         << ")\n";
    return kExitFailure;
  } catch (const DomainError& e) {
    diag << "domain error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::ios_base::failure& e) {
    diag << "I/O error: " << e.what() << '\n';
    return kExitFailure;
  }
  if (status == kExitAuditFailed) diag << "audit failed: at least one inequality is violated\n";
  return status;
}

/// Full entry point: parse, optionally print the config, run.
inline int main(int argc, const char* const* argv, std::ostream& diag = std::cerr) {
  std::vector<std::string> args;
  bool print = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]) == "--print-config") {
      print = true;
    } else {
      args.emplace_back(argv[i]);
    }
  }
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    diag << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (print) {
    std::cout << print_config(cfg) << '\n';
    return kExitOk;
  }
  return run(cfg, diag);
}

}  // namespace rotarclt::cli
