#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plap/grid.hpp"
#include "plap/plaplace.hpp"
#include "plap/report.hpp"

namespace plap {

// Exact source term of the radial power profile U = |x|^{-alpha}:
//   -div(|grad U|^{p-2} grad U) = coefficient * |x|^{-exponent}
struct RadialSource {
    double alpha = 0.0;
    double exponent = 0.0;     // (alpha+1)(p-1)+1
    double coefficient = 0.0;  // alpha |alpha|^{p-2} (N - exponent)
    bool degenerate = false;   // p-harmonic power: zero source

    FieldSpec as_field_spec() const;
};

RadialSource source_of_radial_power(int dim, double p, double alpha);

struct SharpnessSpec {
    int dim = 3;
    double p = 3.0;
    double s = 0.2;                 // regularity exponent used in the f-check
    std::vector<double> alphas;     // exponents of U = |x|^{-alpha}
    std::vector<double> delta_ladder;  // decreasing inner radii (defaults to R/2..R/16)
    std::vector<double> spacings;      // refinement levels (defaults depend on dim)
    double half_width = 1.0;
    double outer_radius_factor = 0.9;  // R = factor * half_width

    double alpha_tilde() const { return (dim - 2.0) / p - 1.0; }
    double alpha_s() const { return dim / p - (s + 1.0) / (p - 1.0) - 1.0; }
};

struct SweepRow {
    double alpha = 0.0;
    double delta = 0.0;
    int level = 0;
    double annulus_integral = 0.0;
    double fitted_exponent = 0.0;   // log-log slope of shell increments in 1/delta
    double loglog_r_squared = 0.0;  // of the integral against log(1/delta)
    std::string verdict;            // bounded | log | power-divergent
    double analytic_exponent = 0.0;  // N - 2 - (alpha+1) p
};

struct SweepResult {
    SharpnessSpec spec;
    std::vector<SweepRow> rows;

    CsvTable to_csv() const;
    nlohmann::json metadata() const;
};

SweepResult sharpness_sweep(const SharpnessSpec& spec);

// Verdict rule shared by the sweep: bounded when the final shell increment is
// below 5% of the total, log for a good linear-in-log fit with a flat
// increment slope, otherwise power-divergent.
std::string divergence_verdict(const std::vector<std::pair<double, double>>& delta_integral,
                               double* fitted_exponent, double* r_squared);

struct ScalingCheckSpec {
    int dim = 2;
    double p = 4.0;
    double s = 0.9;
    double r = 0.5;
    double R = 0.9;
    double half_width = 1.0;
    double spacing = 0.015625;  // 2^-6
    std::vector<double> lambdas{2.0};
    std::int64_t node_budget = kDefaultNodeBudget;  // lambda grids must stay inside
    std::int64_t pair_budget = 4'000'000'000;       // seminorm of f on the finest lambda grid
    FieldSpec solution;  // U
    FieldSpec source;    // f with -div(|grad U|^{p-2} grad U) = f
};

ScalingCheckSpec radial_scaling_case();

struct ScalingReport {
    struct Row {
        double lambda = 1.0;
        double lhs = 0.0;
        double rhs1 = 0.0;
        double rhs2 = 0.0;
        double implied_constant = 0.0;
    };
    std::vector<Row> rows;
    double predicted_power = 0.0;  // 2 - N

    nlohmann::json to_json() const;
};

ScalingReport scaling_invariance_check(const ScalingCheckSpec& spec);

// --- configuration-driven runs -----------------------------------------

struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int threads = 0;
    std::map<std::string, std::string> params;

    bool operator==(const RunConfig&) const = default;
};

// key = value blocks under [command] sections; '#' starts a comment.
RunConfig parse_config_text(const std::string& text, const std::string& command);
RunConfig parse_config_file(const std::string& path, const std::string& command);
std::string serialize_config(const RunConfig& cfg);

// Dispatches a validated config; writes the JSON summary and CSV artifacts
// under cfg.out_dir and returns a process exit status.
int run_config(const RunConfig& cfg);

}  // namespace plap
