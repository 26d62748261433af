#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plap/grid.hpp"

namespace plap {

inline constexpr int kSchemaVersion = 1;

// 17 significant digits: round-trips doubles and keeps CSV bodies byte-stable.
std::string format_double(double v);

// One verified inequality: left side, named right-side terms and the implied
// constant lhs / sum(rhs).
struct EstimateReport {
    enum class Kind { energy_uniform, sobolev_uniform, sobolev_local, negative_norm };
    Kind which = Kind::energy_uniform;
    double lhs = 0.0;
    std::vector<std::pair<std::string, double>> rhs_terms;
    double implied_constant = 0.0;
    bool degenerate = false;
    bool converged = true;
    std::vector<std::pair<std::string, double>> parameters;

    double rhs_total() const;
    nlohmann::json to_json() const;
};

std::string estimate_kind_name(EstimateReport::Kind k);

EstimateReport make_estimate_report(EstimateReport::Kind which, double lhs,
                                    std::vector<std::pair<std::string, double>> rhs_terms,
                                    std::vector<std::pair<std::string, double>> parameters);

// Values of one quantity across grid refinements, finest last.
struct RefinementStudy {
    std::vector<std::pair<double, double>> levels;  // (h, value), decreasing h

    void add(double h, double value) { levels.emplace_back(h, value); }
};

struct OrderResult {
    double order = 0.0;
    bool warning = false;  // non-monotone errors / vanishing increments
};

// Observed convergence order. With a reference value, averages
// log(e_k/e_{k+1}) / log(h_k/h_{k+1}); without one, uses successive
// increments (Aitken style).
OrderResult observed_order(const RefinementStudy& study,
                           std::optional<double> reference = std::nullopt);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

FitResult linear_fit(const std::vector<std::pair<double, double>>& points);
FitResult loglog_fit(const std::vector<std::pair<double, double>>& points);

// CSV writing: fixed header, one row per record, every float via
// format_double so that repeated runs produce byte-identical bodies.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& vals);
    void add_row(std::vector<std::string> vals);
    std::string body() const;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Node-per-row field dump: columns x1..xN,value.
void write_field_csv(const ScalarField& field, const std::string& path);

void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace plap
