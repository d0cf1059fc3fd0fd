#pragma once

#include "dpdtest/chisq_mixture.hpp"
#include "dpdtest/dpd_test.hpp"
#include "dpdtest/estimators.hpp"
#include "dpdtest/simulation.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace dpdtest {

/// Regression data with header `y,x1,...,xp`. Rows are 1-based in errors,
/// counting the header as row 1.
ObservationSet load_dataset_csv(const std::string& path);
ObservationSet parse_dataset_csv(std::istream& in);

/// Headerless numeric CSV, one matrix row per line.
Matrix load_matrix_csv(const std::string& path);
Matrix parse_matrix_csv(std::istream& in);

/// 12 significant digits, the precision of every number this library writes.
std::string format_number(double v);
/// `v` rounded to 12 significant digits, so JSON output carries no more.
double round12(double v);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const ParamPoint& p);
nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const ChiSqMixture& mix);
nlohmann::json to_json(const TestReport& report);
nlohmann::json to_json(const SimConfig& config);
nlohmann::json to_json(const SimResult& result);

/// Reads the keys present in `j` over the defaults in `config`.
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig config = {});

/// n,tau,e_err,e_x,mode,rejection_rate,mc_stderr,failures
void write_sim_csv(std::ostream& out, const std::vector<SimResult>& results);

}  // namespace dpdtest
