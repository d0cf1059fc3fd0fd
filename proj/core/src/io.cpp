#include "dpdtest/io.hpp"

#include "dpdtest/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpdtest {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t row, const std::string& column) {
  if (s.empty()) throw ParseError("empty field", row, column);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("'" + s + "' is not a number", row, column);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite value", row, column);
  return v;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return in;
}

}  // namespace

ObservationSet load_dataset_csv(const std::string& path) {
  auto in = open(path);
  return parse_dataset_csv(in);
}

ObservationSet parse_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1, "");
  const std::vector<std::string> header = split(line);
  if (header.empty() || header[0] != "y") {
    throw ParseError("first column must be named 'y'", 1, header.empty() ? "" : header[0]);
  }
  if (header.size() < 2) throw ParseError("no covariate columns", 1, "x1");
  for (std::size_t j = 1; j < header.size(); ++j) {
    const std::string expected = "x" + std::to_string(j);
    if (header[j] != expected) {
      throw ParseError("expected column '" + expected + "'", 1, header[j]);
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line);
    if (fields.size() < header.size()) {
      throw ParseError("missing value", row, header[fields.size()]);
    }
    if (fields.size() > header.size()) {
      throw ParseError("too many fields", row, "column " + std::to_string(fields.size()));
    }
    std::vector<double> values;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      values.push_back(parse_number(fields[j], row, header[j]));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("no data rows", 2, "y");

  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(header.size() - 1);
  ObservationSet data;
  data.y.resize(n);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    data.y(i) = r[0];
    for (Index j = 0; j < p; ++j) x(i, j) = r[static_cast<std::size_t>(j + 1)];
  }
  data.x = std::move(x);
  return data;
}

Matrix load_matrix_csv(const std::string& path) {
  auto in = open(path);
  return parse_matrix_csv(in);
}

Matrix parse_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line);
    std::vector<double> values;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      values.push_back(parse_number(fields[j], row, std::to_string(j + 1)));
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw ParseError("ragged row", row, std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("empty matrix file", 1, "1");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_number(v).c_str(), nullptr);
}

nlohmann::json to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(round12(v(i)));
  return j;
}

nlohmann::json to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) j.push_back(to_json(Vector(m.row(i).transpose())));
  return j;
}

nlohmann::json to_json(const ParamPoint& p) {
  if (p.dim() == 0) return nullptr;
  return {{"beta", to_json(p.beta())}, {"sigma", round12(p.sigma())}, {"restricted", p.restricted()}};
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j = {{"theta_hat", to_json(fit.theta_hat)},
                      {"objective_value", round12(fit.objective_value)},
                      {"gradient_norm", round12(fit.gradient_norm)},
                      {"iterations", fit.iterations},
                      {"converged", fit.converged},
                      {"restricted", fit.restricted}};
  j["asymp_cov"] = fit.asymp_cov ? to_json(*fit.asymp_cov) : nlohmann::json(nullptr);
  if (!fit.diagnostics.empty()) j["diagnostics"] = fit.diagnostics;
  return j;
}

nlohmann::json to_json(const ChiSqMixture& mix) {
  return {{"weights", to_json(mix.weights)}, {"ncp", to_json(mix.ncp)}, {"r", mix.r()}};
}

nlohmann::json to_json(const TestReport& report) {
  return {{"statistic", round12(report.statistic)},
          {"gamma", round12(report.gamma)},
          {"tau", round12(report.tau)},
          {"null_dist", to_json(report.null_dist)},
          {"critical_value", round12(report.critical_value)},
          {"alpha", round12(report.alpha)},
          {"p_value", round12(report.p_value)},
          {"reject", report.reject},
          {"theta_hat", to_json(report.theta_hat)},
          {"theta_tilde", to_json(report.theta_tilde)},
          {"fit_hat", to_json(report.fit_hat)},
          {"fit_tilde", to_json(report.fit_tilde)}};
}

nlohmann::json to_json(const SimConfig& c) {
  return {{"sample_sizes", c.sample_sizes},
          {"reps", c.reps},
          {"beta0", to_json(c.beta0)},
          {"sigma_true", round12(c.sigma_true)},
          {"tau_gamma", c.tau_gamma},
          {"e_err", c.e_err},
          {"e_x", c.e_x},
          {"alpha", c.alpha},
          {"master_seed", c.master_seed},
          {"mode", to_string(c.mode)},
          {"design_scale", c.design_scale == DesignScale::variance ? "variance" : "sd"},
          {"threads", c.threads}};
}

nlohmann::json to_json(const SimResult& r) {
  return {{"n", r.n},
          {"tau", r.tau},
          {"e_err", r.e_err},
          {"e_x", r.e_x},
          {"mode", to_string(r.mode)},
          {"rejection_rate", round12(r.rejection_rate)},
          {"mc_stderr", round12(r.mc_stderr)},
          {"reps", r.reps},
          {"failures", r.failures},
          {"flagged", r.flagged}};
}

SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig c) {
  try {
    if (j.contains("sample_sizes")) c.sample_sizes = j["sample_sizes"].get<std::vector<Index>>();
    if (j.contains("n")) c.sample_sizes = {j["n"].get<Index>()};
    if (j.contains("reps")) c.reps = j["reps"].get<int>();
    if (j.contains("beta0")) {
      const auto b = j["beta0"].get<std::vector<double>>();
      c.beta0 = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
    }
    if (j.contains("sigma_true")) c.sigma_true = j["sigma_true"].get<double>();
    if (j.contains("tau_gamma")) c.tau_gamma = j["tau_gamma"].get<std::vector<double>>();
    if (j.contains("e_err")) c.e_err = j["e_err"].get<std::vector<double>>();
    if (j.contains("e_x")) c.e_x = j["e_x"].get<std::vector<double>>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("mode")) c.mode = sim_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("design_scale")) {
      const auto s = j["design_scale"].get<std::string>();
      if (s == "variance") {
        c.design_scale = DesignScale::variance;
      } else if (s == "sd") {
        c.design_scale = DesignScale::sd;
      } else {
        throw UsageError("design_scale must be 'variance' or 'sd'");
      }
    }
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad simulation config: ") + e.what());
  }
  return c;
}

void write_sim_csv(std::ostream& out, const std::vector<SimResult>& results) {
  out << "n,tau,e_err,e_x,mode,rejection_rate,mc_stderr,failures\n";
  for (const auto& r : results) {
    out << r.n << ',' << format_number(r.tau) << ',' << format_number(r.e_err) << ','
        << format_number(r.e_x) << ',' << to_string(r.mode) << ','
        << format_number(r.rejection_rate) << ',' << format_number(r.mc_stderr) << ','
        << r.failures << '\n';
  }
}

}  // namespace dpdtest
