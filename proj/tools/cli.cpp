#include "cli.hpp"

#include "dpdtest/dpdtest.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace dpdtest::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

// Flag values as given on the command line; only flags that were actually
// passed override the config file.
struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::string hypothesis;
  double tau = 0.0;
  double gamma = 0.0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string delta;
  double sigma = 0.0;
  std::string beta;
  std::string grid;
  int index = 1;
  int component = 1;
  std::string quantity;
  double t_min = 0.0;
  double t_max = 0.0;
  int steps = 0;
  int reps = 0;
  unsigned threads = 0;
  std::string mode;
  std::string n;
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("cannot read '" + item + "' in " + what);
    }
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Vector list_setting(const json& s, const std::string& key) {
  const json& v = s.at(key);
  if (v.is_string()) return to_vector(parse_list(v.get<std::string>(), key));
  return to_vector(v.get<std::vector<double>>());
}

template <typename T>
T setting(const json& s, const std::string& key, T fallback) {
  return s.contains(key) ? s.at(key).get<T>() : fallback;
}

std::string required(const json& s, const std::string& key) {
  if (!s.contains(key)) throw UsageError("missing required setting '" + key + "'");
  return s.at(key).get<std::string>();
}

Restriction parse_hypothesis(const std::string& spec, Index p) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("hypothesis must be first:... or linear:...");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "first") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos) throw UsageError("expected first:r:v1,..,vr");
    int r = 0;
    try {
      r = std::stoi(rest.substr(0, c2));
    } catch (const std::logic_error&) {
      throw UsageError("bad r in hypothesis '" + spec + "'");
    }
    const Vector l0 = to_vector(parse_list(rest.substr(c2 + 1), "hypothesis values"));
    if (l0.size() != r) throw UsageError("hypothesis lists " + std::to_string(l0.size()) +
                                         " values for r = " + std::to_string(r));
    return Restriction::first_components(l0, p);
  }
  if (kind == "linear") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos) throw UsageError("expected linear:LFILE:l0FILE");
    const Matrix l = load_matrix_csv(rest.substr(0, c2));
    const Matrix l0m = load_matrix_csv(rest.substr(c2 + 1));
    const Vector l0 = Eigen::Map<const Vector>(l0m.data(), l0m.size());
    if (l.rows() != p) {
      throw UsageError("L has " + std::to_string(l.rows()) + " rows, the design has " +
                       std::to_string(p) + " columns");
    }
    return Restriction::linear(l, l0);
  }
  throw UsageError("unknown hypothesis kind '" + kind + "'");
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write '" + path.string() + "'");
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path output_dir(const json& s) {
  const fs::path dir = setting<std::string>(s, "out", ".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& settings,
                    double seconds, json extra = json::object()) {
  json m = {{"command", command},
            {"version", kVersion},
            {"settings", settings},
            {"timestamp", timestamp()},
            {"wall_time_seconds", seconds}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_json(dir / "manifest.json", m);
}

struct Problem {
  ObservationSet data;
  std::unique_ptr<NormalLinearModel> model;
};

Problem load_problem(const json& s) {
  Problem p;
  p.data = load_dataset_csv(required(s, "data"));
  p.model = std::make_unique<NormalLinearModel>(*p.data.x);
  return p;
}

double tau_of(const json& s) {
  const double tau = setting<double>(s, "tau", 0.0);
  if (!(tau >= 0.0)) throw UsageError("tau must be >= 0");
  return tau;
}

double gamma_of(const json& s) {
  const double gamma = setting<double>(s, "gamma", tau_of(s));
  if (!(gamma >= 0.0)) throw UsageError("gamma must be >= 0");
  return gamma;
}

double alpha_of(const json& s) {
  const double alpha = setting<double>(s, "alpha", 0.05);
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  return alpha;
}

void cmd_fit(const json& s, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem prob = load_problem(s);
  const double tau = tau_of(s);
  const FitResult hat = mdpde_fit(*prob.model, prob.data, tau);
  std::optional<FitResult> tilde;
  if (s.contains("hypothesis")) {
    const Restriction h0 = parse_hypothesis(s.at("hypothesis").get<std::string>(),
                                            prob.model->num_coefficients());
    tilde = rmdpde_fit(*prob.model, prob.data, tau, h0);
  }

  const fs::path dir = output_dir(s);
  json report = {{"command", "fit"}, {"tau", round12(tau)}, {"mdpde", to_json(hat)}};
  if (tilde) report["rmdpde"] = to_json(*tilde);
  write_json(dir / "report.json", report);

  std::ostringstream csv;
  csv << "parameter,mdpde" << (tilde ? ",rmdpde" : "") << "\n";
  const Index p = prob.model->num_coefficients();
  for (Index k = 0; k <= p; ++k) {
    csv << (k < p ? "beta" + std::to_string(k + 1) : std::string("sigma")) << ','
        << format_number(hat.theta_hat.theta()(k));
    if (tilde) csv << ',' << format_number(tilde->theta_hat.theta()(k));
    csv << "\n";
  }
  write_text(dir / "results.csv", csv.str());
  write_manifest(dir, "fit", s, std::chrono::duration<double>(Clock::now() - t0).count());

  out << csv.str();
  if (!hat.converged || (tilde && !tilde->converged)) {
    throw NumericalError("fit did not converge: " +
                         (hat.converged ? tilde->diagnostics : hat.diagnostics));
  }
}

void cmd_test(const json& s, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem prob = load_problem(s);
  const Restriction h0 =
      parse_hypothesis(required(s, "hypothesis"), prob.model->num_coefficients());
  const TestReport rep = run_test(*prob.model, prob.data, h0, tau_of(s), gamma_of(s), alpha_of(s));

  const fs::path dir = output_dir(s);
  write_json(dir / "report.json", to_json(rep));
  std::ostringstream csv;
  csv << "statistic,critical_value,p_value,reject,tau,gamma,alpha\n"
      << format_number(rep.statistic) << ',' << format_number(rep.critical_value) << ','
      << format_number(rep.p_value) << ',' << (rep.reject ? 1 : 0) << ','
      << format_number(rep.tau) << ',' << format_number(rep.gamma) << ','
      << format_number(rep.alpha) << "\n";
  write_text(dir / "results.csv", csv.str());
  write_manifest(dir, "test", s, std::chrono::duration<double>(Clock::now() - t0).count());

  out << "DPD test  tau = " << format_number(rep.tau) << "  gamma = " << format_number(rep.gamma)
      << "\n"
      << std::left << std::setw(18) << "statistic" << format_number(rep.statistic) << "\n"
      << std::setw(18) << "null law" << format_number(rep.null_dist.weights(0)) << " * chi2("
      << rep.null_dist.r() << ")" << (rep.null_dist.equal_weights() ? "" : " (mixture)") << "\n"
      << std::setw(18) << "critical value" << format_number(rep.critical_value) << "\n"
      << std::setw(18) << "p-value" << format_number(rep.p_value) << "\n"
      << std::setw(18) << "decision" << (rep.reject ? "reject H0" : "do not reject H0") << "\n";
}

void cmd_power(const json& s, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem prob = load_problem(s);
  const Restriction h0 =
      parse_hypothesis(required(s, "hypothesis"), prob.model->num_coefficients());
  const double tau = tau_of(s);
  const double gamma = gamma_of(s);
  const double alpha = alpha_of(s);
  if (!s.contains("delta")) throw UsageError("missing required setting 'delta'");
  const Vector delta = list_setting(s, "delta");
  if (delta.size() != prob.model->num_coefficients()) {
    throw UsageError("delta needs one entry per coefficient");
  }
  double sigma0 = setting<double>(s, "sigma", 0.0);
  if (!(sigma0 > 0.0)) sigma0 = rmdpde_fit(*prob.model, prob.data, tau, h0).theta_hat.sigma();
  const Vector grid = s.contains("grid") ? list_setting(s, "grid") : Vector::Ones(1);

  const Matrix& x = prob.model->design();
  const double crit =
      mixture_quantile(null_distribution_lrm(x, sigma0, h0.l(), tau, gamma), alpha);
  std::ostringstream csv;
  csv << "multiplier,power\n";
  json rows = json::array();
  for (Index k = 0; k < grid.size(); ++k) {
    const double power = contiguous_power(x, sigma0, h0.l(), tau, gamma, grid(k) * delta, alpha);
    csv << format_number(grid(k)) << ',' << format_number(power) << "\n";
    rows.push_back({{"multiplier", round12(grid(k))}, {"power", round12(power)}});
  }
  const fs::path dir = output_dir(s);
  write_json(dir / "report.json", {{"command", "power"},
                                   {"tau", round12(tau)},
                                   {"gamma", round12(gamma)},
                                   {"alpha", round12(alpha)},
                                   {"sigma0", round12(sigma0)},
                                   {"delta", to_json(delta)},
                                   {"critical_value", round12(crit)},
                                   {"rows", rows}});
  write_text(dir / "results.csv", csv.str());
  write_manifest(dir, "power", s, std::chrono::duration<double>(Clock::now() - t0).count());
  out << csv.str();
}

void cmd_influence(const json& s, std::ostream& out) {
  const auto t0 = Clock::now();
  const Problem prob = load_problem(s);
  const Restriction h0 =
      parse_hypothesis(required(s, "hypothesis"), prob.model->num_coefficients());
  const double tau = tau_of(s);
  const double gamma = gamma_of(s);
  const double alpha = alpha_of(s);
  const Matrix& x = prob.model->design();
  const Index n = x.rows();
  const Index p = x.cols();

  ParamPoint theta0;
  if (s.contains("beta") && s.contains("sigma")) {
    theta0 = ParamPoint::regression(list_setting(s, "beta"), s.at("sigma").get<double>());
  } else {
    theta0 = rmdpde_fit(*prob.model, prob.data, tau, h0).theta_hat;
  }
  if (theta0.dim() != p + 1) throw UsageError("beta needs one entry per coefficient");

  const std::string quantity = setting<std::string>(s, "quantity", "if2");
  const int index = setting<int>(s, "index", 1);
  const int component = setting<int>(s, "component", 1);
  if (index < 1 || index > n) throw UsageError("index must lie in 1..n");
  if (component < 1 || component > p) throw UsageError("component must lie in 1..p");
  // Default sweep: ten error scales either side of the null mean of y_index.
  const double centre = x.row(index - 1).dot(theta0.beta());
  const double t_min = setting<double>(s, "t_min", centre - 10.0 * theta0.sigma());
  const double t_max = setting<double>(s, "t_max", centre + 10.0 * theta0.sigma());
  const int steps = setting<int>(s, "steps", 101);
  if (steps < 2 || !(t_max > t_min)) throw UsageError("need steps >= 2 and t_max > t_min");
  Vector delta = Vector::Zero(p);
  if (quantity == "pif") {
    if (!s.contains("delta")) throw UsageError("pif needs 'delta'");
    delta = list_setting(s, "delta");
    if (delta.size() != p) throw UsageError("delta needs one entry per coefficient");
  }

  const auto k = static_cast<Index>(component - 1);
  auto evaluate = [&](const Vector& t) -> double {
    if (quantity == "if_beta") return if_mdpde_lrm(x, theta0, t, tau).beta(k);
    if (quantity == "if_sigma") return if_mdpde_lrm(x, theta0, t, tau).sigma;
    if (quantity == "rif_beta") return if_rmdpde_lrm(x, theta0, t, tau, h0).beta(k);
    if (quantity == "rif_sigma") return if_rmdpde_lrm(x, theta0, t, tau, h0).sigma;
    if (quantity == "d_beta") return d_tau_beta(x, theta0, t, tau, h0)(k);
    if (quantity == "if2") return if2_statistic_lrm(x, theta0, t, tau, gamma, h0);
    if (quantity == "pif") return pif(x, theta0, t, tau, gamma, h0, delta, alpha);
    if (quantity == "lif") return lif(x, theta0, t, tau, gamma, h0, alpha);
    throw UsageError("unknown quantity '" + quantity +
                     "' (if_beta, if_sigma, rif_beta, rif_sigma, d_beta, if2, pif, lif)");
  };

  // Every other contamination point sits at its fitted mean (zero residual).
  Vector t = x * theta0.beta();
  std::ostringstream csv;
  csv << "t,value\n";
  json rows = json::array();
  for (int j = 0; j < steps; ++j) {
    const double tv = t_min + (t_max - t_min) * j / (steps - 1);
    t(index - 1) = tv;
    const double v = evaluate(t);
    csv << format_number(tv) << ',' << format_number(v) << "\n";
    rows.push_back({round12(tv), round12(v)});
  }
  const fs::path dir = output_dir(s);
  write_json(dir / "report.json", {{"command", "influence"},
                                   {"quantity", quantity},
                                   {"index", index},
                                   {"tau", round12(tau)},
                                   {"gamma", round12(gamma)},
                                   {"theta0", to_json(theta0)},
                                   {"curve", rows}});
  write_text(dir / "results.csv", csv.str());
  write_manifest(dir, "influence", s, std::chrono::duration<double>(Clock::now() - t0).count());
  out << csv.str();
}

void cmd_simulate(const json& s, std::ostream& out) {
  json keys = s;
  if (keys.contains("n") && keys.at("n").is_string()) keys.erase("n");
  SimConfig config = sim_config_from_json(keys);
  if (s.contains("tau")) config.tau_gamma = {s.at("tau").get<double>()};
  if (s.contains("seed")) config.master_seed = s.at("seed").get<std::uint64_t>();
  if (s.contains("n") && s.at("n").is_string()) {
    config.sample_sizes.clear();
    for (double v : parse_list(s.at("n").get<std::string>(), "n")) {
      config.sample_sizes.push_back(static_cast<Index>(v));
    }
  }
  config.validate();
  const SimRun run = empirical_size_power(config);

  const fs::path dir = output_dir(s);
  std::ostringstream csv;
  write_sim_csv(csv, run.results);
  write_text(dir / "results.csv", csv.str());
  json results = json::array();
  json cell_times = json::array();
  json flagged = json::array();
  for (const auto& r : run.results) {
    results.push_back(to_json(r));
    cell_times.push_back({{"n", r.n}, {"tau", r.tau}, {"e_err", r.e_err}, {"e_x", r.e_x},
                          {"wall_time_seconds", r.wall_time_seconds}});
    if (r.flagged) flagged.push_back(to_json(r));
  }
  write_json(dir / "report.json", {{"command", "simulate"}, {"results", results}});
  write_manifest(dir, "simulate", s, run.wall_time_seconds,
                 {{"config", to_json(config)},
                  {"master_seed", config.master_seed},
                  {"threads_used", run.threads_used},
                  {"cell_wall_times", cell_times},
                  {"flagged_cells", flagged}});
  out << csv.str();
}

void add_common(CLI::App* sub, Flags& f, bool data_needed) {
  sub->add_option("--config", f.config, "JSON config; flags override its keys");
  if (data_needed) sub->add_option("--data", f.data, "CSV dataset with header y,x1..xp");
  sub->add_option("--tau", f.tau, "estimation tuning parameter (>= 0)");
  sub->add_option("--gamma", f.gamma, "divergence index of the statistic (default: tau)");
  sub->add_option("--alpha", f.alpha, "test level in (0, 1)");
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--out", f.out, "output directory");
  if (data_needed) {
    sub->add_option("--hypothesis", f.hypothesis, "first:r:v1,..,vr or linear:LFILE:l0FILE");
  }
}

// Config file first, then every flag the user actually typed.
json merged_settings(CLI::App* sub, const Flags& f) {
  json s = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot open config '" + f.config + "'");
    try {
      s = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!s.is_object()) throw UsageError("config must be a JSON object");
  }
  auto take = [&](const char* flag, const char* key, const json& value) {
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) s[key] = value;
  };
  take("--data", "data", f.data);
  take("--out", "out", f.out);
  take("--hypothesis", "hypothesis", f.hypothesis);
  take("--tau", "tau", f.tau);
  take("--gamma", "gamma", f.gamma);
  take("--alpha", "alpha", f.alpha);
  take("--seed", "seed", f.seed);
  take("--delta", "delta", f.delta);
  take("--sigma", "sigma", f.sigma);
  take("--beta", "beta", f.beta);
  take("--grid", "grid", f.grid);
  take("--index", "index", f.index);
  take("--component", "component", f.component);
  take("--quantity", "quantity", f.quantity);
  take("--t-min", "t_min", f.t_min);
  take("--t-max", "t_max", f.t_max);
  take("--steps", "steps", f.steps);
  take("--reps", "reps", f.reps);
  take("--threads", "threads", f.threads);
  take("--mode", "mode", f.mode);
  take("--n", "n", f.n);
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust density power divergence tests for linear regression", "dpdtest"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags f;

  auto* fit = app.add_subcommand("fit", "minimum DPD estimates (restricted too with --hypothesis)");
  add_common(fit, f, true);
  auto* test = app.add_subcommand("test", "DPD test of a linear hypothesis");
  add_common(test, f, true);
  auto* power = app.add_subcommand("power", "asymptotic power at contiguous alternatives");
  add_common(power, f, true);
  power->add_option("--delta", f.delta, "direction Delta_1, comma separated");
  power->add_option("--sigma", f.sigma, "error scale (default: restricted fit)");
  power->add_option("--grid", f.grid, "multipliers of Delta_1, comma separated");
  auto* influence = app.add_subcommand("influence", "influence curves over a t sweep");
  add_common(influence, f, true);
  influence->add_option("--quantity", f.quantity,
                        "if_beta, if_sigma, rif_beta, rif_sigma, d_beta, if2, pif, lif");
  influence->add_option("--index", f.index, "observation whose point is swept (1-based)");
  influence->add_option("--component", f.component, "coefficient for vector quantities (1-based)");
  influence->add_option("--t-min", f.t_min, "sweep start");
  influence->add_option("--t-max", f.t_max, "sweep end");
  influence->add_option("--steps", f.steps, "number of sweep points");
  influence->add_option("--delta", f.delta, "Delta_1 for pif");
  influence->add_option("--beta", f.beta, "null coefficients (default: restricted fit)");
  influence->add_option("--sigma", f.sigma, "null error scale (default: restricted fit)");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo size and power");
  add_common(simulate, f, false);
  simulate->add_option("--reps", f.reps, "replications per cell");
  simulate->add_option("--threads", f.threads, "worker threads (0: all cores)");
  simulate->add_option("--mode", f.mode, "size or power");
  simulate->add_option("--n", f.n, "sample sizes, comma separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const json settings = merged_settings(sub, f);
    const std::string name = sub->get_name();
    if (name == "fit") cmd_fit(settings, out);
    if (name == "test") cmd_test(settings, out);
    if (name == "power") cmd_power(settings, out);
    if (name == "influence") cmd_influence(settings, out);
    if (name == "simulate") cmd_simulate(settings, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: bad setting: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << "\n";
    return kComputation;
  }
  return kOk;
}

}  // namespace dpdtest::cli
