#include "plap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "plap/dualnorm.hpp"
#include "plap/kfunctional.hpp"
#include "plap/parallel.hpp"

namespace plap {

FieldSpec RadialSource::as_field_spec() const {
    FieldSpec s;
    const double c = coefficient;
    const double m = exponent;
    s.eval = [c, m](const Point& x, int dim) {
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) r2 += x[d] * x[d];
        return c * std::pow(std::sqrt(r2), -m);
    };
    s.policy = SingularityPolicy::clip_first_shell;
    return s;
}

RadialSource source_of_radial_power(int dim, double p, double alpha) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (!(p > 2.0)) throw std::invalid_argument("p must exceed 2");
    if (alpha == 0.0) throw std::invalid_argument("alpha must be nonzero");
    RadialSource src;
    src.alpha = alpha;
    src.exponent = (alpha + 1.0) * (p - 1.0) + 1.0;
    src.coefficient = alpha * std::pow(std::abs(alpha), p - 2.0) * (dim - src.exponent);
    src.degenerate = std::abs(dim - src.exponent) < 1e-14;
    return src;
}

namespace {

// Shell sums of sum_j |d_j V|^2 over the delta ladder in one pass over faces:
// a face contributes to every annulus whose inner radius lies below both cell
// centers. Cross-checked against v_face_derivative_sq in the tests.
std::vector<double> annulus_integrals(const VectorField& V, double outer_radius,
                                      const std::vector<double>& deltas) {
    const GridSpec& g = V.grid;
    const double vol = g.cell_volume();
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    std::vector<double> ladder = deltas;  // decreasing
    std::vector<double> acc(ladder.size(), 0.0);

    for (int axis = 0; axis < g.dim; ++axis) {
        struct Partial {
            std::vector<double> acc;
        };
        Partial init;
        init.acc.assign(ladder.size(), 0.0);
        Partial sum = parallel_reduce(
            0, g.cell_count(), init,
            [&](std::int64_t lo, std::int64_t hi) {
                Partial a;
                a.acc.assign(ladder.size(), 0.0);
                for (std::int64_t cl = lo; cl < hi; ++cl) {
                    Index c = g.cell_unlinear(cl);
                    Index cn = c;
                    cn[axis] += 1;
                    if (!g.cell_in_range(cn)) continue;
                    Point xa = g.cell_point(c), xb = g.cell_point(cn);
                    double ra = 0.0, rb = 0.0;
                    for (int d = 0; d < g.dim; ++d) {
                        ra += xa[d] * xa[d];
                        rb += xb[d] * xb[d];
                    }
                    ra = std::sqrt(ra);
                    rb = std::sqrt(rb);
                    const double rmin = std::min(ra, rb), rmax = std::max(ra, rb);
                    if (rmax > outer_radius) continue;
                    double s = 0.0;
                    for (int d = 0; d < g.dim; ++d) {
                        const double dv = V.comp[d].values[static_cast<std::size_t>(
                                              g.cell_linear(cn))] -
                                          V.comp[d].values[static_cast<std::size_t>(cl)];
                        s += dv * dv;
                    }
                    const double contrib = s * inv_h2 * vol;
                    for (std::size_t k = 0; k < ladder.size(); ++k)
                        if (rmin > ladder[k]) a.acc[k] += contrib;
                }
                return a;
            },
            [&](Partial a, Partial b) {
                for (std::size_t k = 0; k < a.acc.size(); ++k) a.acc[k] += b.acc[k];
                return a;
            });
        for (std::size_t k = 0; k < ladder.size(); ++k) acc[k] += sum.acc[k];
    }
    return acc;
}

}  // namespace

std::string divergence_verdict(const std::vector<std::pair<double, double>>& delta_integral,
                               double* fitted_exponent, double* r_squared) {
    if (delta_integral.size() < 3)
        throw std::invalid_argument("verdict needs at least 3 ladder points");
    // last four ladder points (deltas decreasing)
    const std::size_t n = delta_integral.size();
    const std::size_t from = n > 4 ? n - 4 : 0;
    std::vector<std::pair<double, double>> pts(delta_integral.begin() +
                                                   static_cast<std::ptrdiff_t>(from),
                                               delta_integral.end());

    double fit_exp = 0.0, r2 = 0.0;
    const double last = pts.back().second;
    const double prev = pts[pts.size() - 2].second;

    // integral against log(1/delta)
    bool fits_ok = true;
    try {
        std::vector<std::pair<double, double>> ip;
        for (const auto& [d, v] : pts) ip.emplace_back(std::log(1.0 / d), v);
        r2 = linear_fit(ip).r_squared;
    } catch (const std::exception&) {
        fits_ok = false;
    }
    // shell increments against delta: the additive regular part cancels and
    // the slope estimates the delta-exponent of the integral, comparable with
    // the analytic prediction N - 2 - (alpha+1) p
    try {
        std::vector<std::pair<double, double>> inc;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double dmid = std::sqrt(pts[i].first * pts[i + 1].first);
            const double dv = pts[i + 1].second - pts[i].second;
            if (dv > 0.0) inc.emplace_back(dmid, dv);
        }
        if (inc.size() >= 2) {
            std::vector<std::pair<double, double>> lp;
            for (const auto& [x, y] : inc) lp.emplace_back(std::log(x), std::log(y));
            fit_exp = linear_fit(lp).slope;
        } else {
            fits_ok = false;
        }
    } catch (const std::exception&) {
        fits_ok = false;
    }
    if (fitted_exponent) *fitted_exponent = fit_exp;
    if (r_squared) *r_squared = r2;

    // fast-converging or flat ladders are bounded outright
    if (!(last > 0.0) || last - prev < 0.05 * last) return "bounded";
    if (!fits_ok) return "bounded";
    // the shell slope separates the phases: decaying shells mean the integral
    // converges, flat shells mean logarithmic growth
    if (fit_exp > 0.05) return "bounded";
    if (fit_exp >= -0.05 && r2 >= 0.98) return "log";
    return "power-divergent";
}

CsvTable SweepResult::to_csv() const {
    CsvTable t;
    t.header = {"alpha", "delta",           "level",          "annulus_integral",
                "fitted_exponent", "loglog_r_squared", "analytic_exponent", "verdict"};
    for (const auto& r : rows) {
        std::vector<std::string> row{format_double(r.alpha),
                                     format_double(r.delta),
                                     std::to_string(r.level),
                                     format_double(r.annulus_integral),
                                     format_double(r.fitted_exponent),
                                     format_double(r.loglog_r_squared),
                                     format_double(r.analytic_exponent),
                                     r.verdict};
        t.add_row(std::move(row));
    }
    return t;
}

nlohmann::json SweepResult::metadata() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["dimension"] = spec.dim;
    j["p"] = spec.p;
    j["s"] = spec.s;
    j["alpha_tilde"] = spec.alpha_tilde();
    j["alpha_s"] = spec.alpha_s();
    j["sharpness_threshold"] = (spec.p - 2.0) / spec.p;
    j["outer_radius"] = spec.outer_radius_factor * spec.half_width;
    j["alphas"] = spec.alphas;
    j["delta_ladder"] = spec.delta_ladder;
    j["spacings"] = spec.spacings;
    return j;
}

SweepResult sharpness_sweep(const SharpnessSpec& spec_in) {
    SharpnessSpec spec = spec_in;
    if (spec.alphas.empty()) throw std::invalid_argument("alpha list must be nonempty");
    const double membership = spec.dim / spec.p - 1.0;
    for (double a : spec.alphas)
        if (!(a < membership))
            throw std::invalid_argument("alpha out of range: U is not W^{1,p}_loc unless alpha < N/p - 1 = " +
                                        std::to_string(membership));
    const double R = spec.outer_radius_factor * spec.half_width;
    if (spec.delta_ladder.empty())
        spec.delta_ladder = {R / 2.0, R / 4.0, R / 8.0, R / 16.0};
    for (std::size_t i = 1; i < spec.delta_ladder.size(); ++i)
        if (!(spec.delta_ladder[i] < spec.delta_ladder[i - 1]))
            throw std::invalid_argument("delta ladder must be strictly decreasing");
    if (spec.spacings.empty()) {
        // finest defaults that resolve the verdict phase boundary at alpha_tilde
        if (spec.dim == 3)
            spec.spacings = {1.0 / 128.0};
        else if (spec.dim == 2)
            spec.spacings = {1.0 / 256.0};
        else
            spec.spacings = {1.0 / 512.0};
    }

    SweepResult out;
    out.spec = spec;
    for (std::size_t lvl = 0; lvl < spec.spacings.size(); ++lvl) {
        const GridSpec grid = build_grid(spec.dim, spec.half_width, spec.spacings[lvl]);
        for (double alpha : spec.alphas) {
            ScalarField U = sample_field(grid, radial_power_spec(alpha), covered_box(grid));
            VectorField V = v_field(U, spec.p);
            std::vector<double> ints = annulus_integrals(V, R, spec.delta_ladder);
            std::vector<std::pair<double, double>> pts;
            for (std::size_t k = 0; k < spec.delta_ladder.size(); ++k)
                pts.emplace_back(spec.delta_ladder[k], ints[k]);
            double fexp = 0.0, r2 = 0.0;
            const std::string verdict = divergence_verdict(pts, &fexp, &r2);
            const double analytic = spec.dim - 2.0 - (alpha + 1.0) * spec.p;
            for (std::size_t k = 0; k < spec.delta_ladder.size(); ++k) {
                SweepRow row;
                row.alpha = alpha;
                row.delta = spec.delta_ladder[k];
                row.level = static_cast<int>(lvl);
                row.annulus_integral = ints[k];
                row.fitted_exponent = fexp;
                row.loglog_r_squared = r2;
                row.verdict = verdict;
                row.analytic_exponent = analytic;
                out.rows.push_back(row);
            }
        }
    }
    return out;
}

ScalingCheckSpec radial_scaling_case() {
    // radial p-Laplace profile with f = 1: U(r) = (p-1)/p N^{-1/(p-1)} (R0^{p'} - r^{p'})
    ScalingCheckSpec spec;
    const double p = spec.p;
    const int dim = spec.dim;
    const double R0 = spec.R;
    spec.solution.eval = [p, dim, R0](const Point& x, int d) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) r2 += x[k] * x[k];
        const double r = std::sqrt(r2);
        const double pp = p / (p - 1.0);
        const double c = (p - 1.0) / p * std::pow(static_cast<double>(dim), -1.0 / (p - 1.0));
        return c * (std::pow(R0, pp) - std::pow(r, pp));
    };
    spec.source = constant_spec(1.0);
    return spec;
}

nlohmann::json ScalingReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["predicted_power"] = predicted_power;
    nlohmann::json rowsj = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json rj;
        rj["lambda"] = r.lambda;
        rj["lhs"] = r.lhs;
        rj["rhs1"] = r.rhs1;
        rj["rhs2"] = r.rhs2;
        rj["implied_constant"] = r.implied_constant;
        rowsj.push_back(rj);
    }
    j["rows"] = rowsj;
    return j;
}

ScalingReport scaling_invariance_check(const ScalingCheckSpec& spec) {
    ScalingReport rep;
    rep.predicted_power = 2.0 - spec.dim;
    std::vector<double> lambdas{1.0};
    for (double l : spec.lambdas)
        if (l != 1.0) lambdas.push_back(l);

    for (double lambda : lambdas) {
        const GridSpec grid =
            build_grid(spec.dim, spec.half_width, spec.spacing / lambda, spec.node_budget);
        FieldSpec Ul;
        const FieldSpec& base_u = spec.solution;
        Ul.policy = base_u.policy;
        Ul.eval = [&base_u, lambda](const Point& x, int dim) {
            Point y;
            for (int d = 0; d < 3; ++d) y[d] = lambda * x[d];
            return base_u.eval(y, dim) / lambda;
        };
        FieldSpec fl;
        const FieldSpec& base_f = spec.source;
        fl.policy = base_f.policy;
        fl.eval = [&base_f, lambda](const Point& x, int dim) {
            Point y;
            for (int d = 0; d < 3; ++d) y[d] = lambda * x[d];
            return lambda * base_f.eval(y, dim);
        };
        ScalarField U = sample_field(grid, Ul, covered_box(grid));
        ScalarField f = sample_field(grid, fl, covered_box(grid));
        SobolevEstimateOptions opts;
        opts.pairs.pair_budget = spec.pair_budget;
        EstimateReport est = verify_sobolev_estimate(U, f, spec.p, spec.s, spec.r / lambda,
                                                     spec.R / lambda, 0.0, opts);
        ScalingReport::Row row;
        row.lambda = lambda;
        row.lhs = est.lhs;
        row.rhs1 = est.rhs_terms.at(0).second;
        row.rhs2 = est.rhs_terms.at(1).second;
        row.implied_constant = est.implied_constant;
        rep.rows.push_back(row);
    }
    return rep;
}

// --- configuration ------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& command) {
    RunConfig cfg;
    cfg.command = command;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("malformed section header at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("empty key at line " + std::to_string(lineno));
        if (section.empty()) {
            if (key == "command") {
                if (!cfg.command.empty() && cfg.command != value)
                    throw std::invalid_argument("config command '" + value +
                                                "' conflicts with requested command '" +
                                                cfg.command + "'");
                cfg.command = value;
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "out") {
                cfg.out_dir = value;
            } else if (key == "threads") {
                cfg.threads = std::stoi(value);
            } else {
                throw std::invalid_argument("unknown top-level key '" + key + "'");
            }
            continue;
        }
        if (section == cfg.command) {
            if (cfg.params.count(key))
                throw std::invalid_argument("duplicate key '" + key + "' in [" + section + "]");
            cfg.params[key] = value;
        }
        // blocks for other commands are allowed and ignored
    }
    if (cfg.command.empty()) throw std::invalid_argument("no command given");
    return cfg;
}

RunConfig parse_config_file(const std::string& path, const std::string& command) {
    return parse_config_text(read_text_file(path), command);
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    out += "command = " + cfg.command + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    out += "out = " + cfg.out_dir + "\n";
    out += "threads = " + std::to_string(cfg.threads) + "\n";
    out += "\n[" + cfg.command + "]\n";
    for (const auto& [k, v] : cfg.params) out += k + " = " + v + "\n";
    return out;
}

// --- run dispatch ---------------------------------------------------------

namespace {

class ParamReader {
  public:
    ParamReader(const RunConfig& cfg) : cfg_(cfg) {}

    bool has(const std::string& key) const { return cfg_.params.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        consumed_.insert(key);
        auto it = cfg_.params.find(key);
        return it == cfg_.params.end() ? fallback : it->second;
    }
    std::string require_string(const std::string& key) {
        consumed_.insert(key);
        auto it = cfg_.params.find(key);
        if (it == cfg_.params.end())
            throw std::invalid_argument("missing required key '" + key + "' in [" + cfg_.command +
                                        "]");
        return it->second;
    }
    double get_double(const std::string& key, double fallback) {
        consumed_.insert(key);
        auto it = cfg_.params.find(key);
        return it == cfg_.params.end() ? fallback : std::stod(it->second);
    }
    double require_double(const std::string& key) { return std::stod(require_string(key)); }
    int get_int(const std::string& key, int fallback) {
        consumed_.insert(key);
        auto it = cfg_.params.find(key);
        return it == cfg_.params.end() ? fallback : std::stoi(it->second);
    }
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) {
        consumed_.insert(key);
        auto it = cfg_.params.find(key);
        if (it == cfg_.params.end()) return fallback;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (!tok.empty()) out.push_back(std::stod(tok));
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : cfg_.params)
            if (!consumed_.count(k))
                throw std::invalid_argument("unknown key '" + k + "' in [" + cfg_.command + "]");
    }

  private:
    const RunConfig& cfg_;
    std::set<std::string> consumed_;
};

FieldSpec parse_field_spec(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = colon == std::string::npos ? text : text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto argval = [&](double fallback) { return arg.empty() ? fallback : std::stod(arg); };
    if (name == "constant") return constant_spec(argval(1.0));
    if (name == "radial-power") return radial_power_spec(argval(0.5));
    if (name == "hat") return hat_spec(argval(1.0));
    if (name == "bump") return bump_spec(argval(1.0));
    if (name == "gaussian") return gaussian_spec(argval(0.3));
    throw std::invalid_argument("unknown field spec '" + text +
                                "' (expected constant|radial-power|hat|bump|gaussian)");
}

GridSpec grid_from(ParamReader& pr) {
    const int dim = pr.get_int("dimension", 1);
    const double L = pr.get_double("half_width", 1.0);
    const double h = pr.require_double("spacing");
    return build_grid(dim, L, h);
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

void run_solve(const RunConfig& cfg) {
    ParamReader pr(cfg);
    GridSpec grid = grid_from(pr);
    DirichletProblem prob;
    prob.grid = grid;
    prob.ball = Region::ball(pr.get_double("ball_radius", 0.9 * grid.half_width));
    prob.params.p = pr.require_double("p");
    prob.params.eps = pr.get_double("epsilon", 1e-8);
    prob.rhs = sample_field(grid, parse_field_spec(pr.get_string("rhs", "constant:1")), prob.ball);
    prob.boundary =
        sample_field(grid, parse_field_spec(pr.get_string("boundary", "constant:0")),
                     covered_box(grid));
    prob.mollify_radius = pr.get_double("mollify_radius", -1.0);
    SolveSettings st;
    st.tol = pr.get_double("tolerance", 1e-9);
    st.max_iter = pr.get_int("max_iter", 200);
    pr.finish();

    SolveReport rep = solve_dirichlet(prob, st);
    write_field_csv(rep.u_eps, out_path(cfg, "solution.csv").string());
    nlohmann::json j = rep.to_json();
    j["p"] = prob.params.p;
    j["epsilon"] = prob.params.eps;
    j["ball_radius"] = prob.ball.radius;
    j["grid_spacing"] = grid.spacing;
    j["dimension"] = grid.dim;
    write_json_file(j, out_path(cfg, "solve.json").string());
}

void run_seminorm(const RunConfig& cfg) {
    ParamReader pr(cfg);
    GridSpec grid = grid_from(pr);
    const std::string family = pr.require_string("family");
    const double beta = pr.require_double("beta");
    const double q = pr.get_double("q", 2.0);
    const double support_radius = pr.get_double("support_radius", 0.75 * grid.half_width);
    ScalarField u = sample_field(grid, parse_field_spec(pr.get_string("field", "hat:" +
                                                                                   format_double(support_radius))),
                                 Region::ball(support_radius));
    SeminormParams prm;
    prm.beta = beta;
    prm.q = q;
    const double cap = pr.get_double("shift_cap", grid.covered_half_width());
    PairSumSettings pairs;
    pairs.pair_budget = static_cast<std::int64_t>(pr.get_double("pair_budget", 4e8));
    const double region_radius = pr.get_double("region_radius", 0.0);
    pr.finish();

    const Region region =
        region_radius > 0.0 ? Region::ball(region_radius) : covered_box(grid);
    double value = 0.0;
    std::int64_t pair_count = 0;
    if (family == "nikolskii") {
        prm.family = SeminormFamily::nikolskii;
        prm.shifts = dyadic_shift_ladder(grid, cap);
        value = nikolskii_seminorm(u, prm);
    } else if (family == "besov") {
        prm.family = SeminormFamily::besov;
        prm.shifts = dyadic_shift_ladder(grid, cap);
        value = besov_seminorm(u, prm);
    } else if (family == "slobodeckii") {
        prm.family = SeminormFamily::slobodeckii;
        validate_seminorm_params(prm);
        pair_count = slobodeckii_pair_count(u, region);
        value = slobodeckii_seminorm(u, prm, region, pairs);
    } else {
        throw std::invalid_argument("unknown family '" + family +
                                    "' (expected nikolskii|besov|slobodeckii)");
    }

    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["family"] = family;
    j["beta"] = beta;
    j["q"] = q;
    j["region"] = region.describe();
    j["value"] = value;
    nlohmann::json ladder = nlohmann::json::array();
    for (const auto& s : prm.shifts)
        ladder.push_back({s.offset[0], s.offset[1], s.offset[2]});
    j["shift_ladder"] = ladder;
    j["pair_count"] = pair_count;
    j["grid_spacing"] = grid.spacing;
    write_json_file(j, out_path(cfg, "seminorm.json").string());
}

void run_dualnorm(const RunConfig& cfg) {
    ParamReader pr(cfg);
    GridSpec grid = grid_from(pr);
    const double sigma = pr.get_double("sigma", 1.0);
    const double r = pr.require_double("r");
    const Region ball = Region::ball(pr.get_double("ball_radius", 0.8 * grid.half_width));
    const std::string form = pr.get_string("form", "density");
    ScalarField f =
        sample_field(grid, parse_field_spec(pr.get_string("field", "constant:1")), ball);
    DualSolveSettings st;
    st.restarts = pr.get_int("restarts", 5);
    st.max_iter = pr.get_int("max_iter", 200);
    st.seed = cfg.seed == 0 ? st.seed : cfg.seed;
    const int axis = pr.get_int("axis", 1) - 1;
    pr.finish();

    Functional F = form == "derivative" ? weak_derivative_functional(f, axis)
                                        : Functional::from_density(f);
    DualNormResult res = dual_seminorm(F, sigma, r, ball, st);
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["value"] = res.value;
    j["sigma"] = sigma;
    j["r"] = r;
    j["ball"] = ball.describe();
    j["converged"] = res.converged;
    j["iterations"] = res.iterations;
    j["restarts"] = st.restarts;
    write_json_file(j, out_path(cfg, "dualnorm.json").string());
}

void run_kfunc(const RunConfig& cfg) {
    ParamReader pr(cfg);
    GridSpec grid = grid_from(pr);
    InterpolationParams prm;
    prm.theta = pr.require_double("theta");
    prm.q = pr.get_double("q", 2.0);
    prm.ball = Region::ball(pr.get_double("ball_radius", 0.8 * grid.half_width));
    const std::string couple = pr.get_string("couple", "d10");
    if (couple == "d10")
        prm.couple = CoupleKind::lq_d10;
    else if (couple == "w1q")
        prm.couple = CoupleKind::lq_w1q;
    else
        throw std::invalid_argument("unknown couple '" + couple + "' (expected d10|w1q)");
    ScalarField u = sample_field(
        grid, parse_field_spec(pr.get_string("field", "hat:" + format_double(prm.ball.radius))),
        prm.ball);
    const int t_count = pr.get_int("t_count", 40);
    pr.finish();

    const std::vector<double> tg = default_t_grid(prm.ball.radius, t_count);
    KProfile prof = interpolation_profile(u, prm, tg);

    CsvTable t;
    t.header = {"t", "K", "part_x_norm", "part_y_norm", "converged"};
    for (const auto& kp : prof.points) {
        std::vector<std::string> row{format_double(kp.t), format_double(kp.k_value),
                                     format_double(kp.part_x_norm),
                                     format_double(kp.part_y_norm),
                                     kp.converged ? "1" : "0"};
        t.add_row(std::move(row));
    }
    write_text_file(out_path(cfg, "kprofile.csv").string(), t.body());

    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["theta"] = prm.theta;
    j["q"] = prm.q;
    j["couple"] = couple;
    j["ball"] = prm.ball.describe();
    j["profile_integral"] = prof.profile_integral;
    j["quadrature_part"] = prof.quadrature_part;
    j["head_part"] = prof.head_part;
    j["tail_part"] = prof.tail_part;
    write_json_file(j, out_path(cfg, "kfunc.json").string());
}

void run_verify_energy(const RunConfig& cfg) {
    ParamReader pr(cfg);
    GridSpec grid = grid_from(pr);
    DirichletProblem prob;
    prob.grid = grid;
    prob.ball = Region::ball(pr.get_double("ball_radius", 0.9 * grid.half_width));
    prob.params.p = pr.require_double("p");
    prob.params.eps = pr.get_double("epsilon", 1e-8);
    prob.rhs = sample_field(grid, parse_field_spec(pr.get_string("rhs", "constant:1")), prob.ball);
    ScalarField U = sample_field(grid, parse_field_spec(pr.get_string("exact", "constant:0")),
                                 covered_box(grid));
    prob.boundary = U;
    prob.mollify_radius = pr.get_double("mollify_radius", -1.0);
    SolveSettings st;
    st.tol = pr.get_double("tolerance", 1e-9);
    pr.finish();

    SolveReport rep = solve_dirichlet(prob, st);
    EstimateReport est = verify_energy_estimate(rep, U, prob);
    write_json_file(est.to_json(), out_path(cfg, "verify_energy.json").string());
}

void run_verify_sobolev(const RunConfig& cfg) {
    ParamReader pr(cfg);
    GridSpec grid = grid_from(pr);
    const double p = pr.require_double("p");
    const double s = pr.require_double("s");
    const double rr = pr.get_double("r_inner", 0.5);
    const double RR = pr.get_double("r_outer", 0.9);
    const double eps = pr.get_double("epsilon", 0.0);
    ScalarField u = sample_field(grid, parse_field_spec(pr.require_string("u")),
                                 covered_box(grid));
    ScalarField f = sample_field(grid, parse_field_spec(pr.require_string("f")),
                                 covered_box(grid));
    SobolevEstimateOptions opts;
    opts.pairs.pair_budget = static_cast<std::int64_t>(pr.get_double("pair_budget", 4e8));
    pr.finish();

    EstimateReport est = verify_sobolev_estimate(u, f, p, s, rr, RR, eps, opts);
    write_json_file(est.to_json(), out_path(cfg, "verify_sobolev.json").string());
}

void run_sweep(const RunConfig& cfg) {
    ParamReader pr(cfg);
    SharpnessSpec spec;
    spec.dim = pr.get_int("dimension", 3);
    spec.p = pr.require_double("p");
    spec.s = pr.get_double("s", 0.2);
    spec.half_width = pr.get_double("half_width", 1.0);
    spec.outer_radius_factor = pr.get_double("outer_radius_factor", 0.9);
    if (pr.has("alphas")) {
        spec.alphas = pr.get_doubles("alphas", {});
    } else {
        const double at = spec.alpha_tilde();
        const double step = pr.get_double("alpha_step", 0.05);
        const double lo = pr.get_double("alpha_min", at - 3.0 * step);
        const double hi = pr.get_double("alpha_max", at + 2.0 * step);
        for (double a = lo; a <= hi + 1e-12; a += step) spec.alphas.push_back(a);
    }
    spec.spacings = pr.get_doubles("spacings", {});
    spec.delta_ladder = pr.get_doubles("deltas", {});
    pr.finish();

    SweepResult res = sharpness_sweep(spec);
    write_text_file(out_path(cfg, "sweep.csv").string(), res.to_csv().body());
    write_json_file(res.metadata(), out_path(cfg, "sweep.json").string());

    // plot-ready log-log data: shell increments per alpha at the finest level
    CsvTable plot;
    plot.header = {"x", "y"};
    const int last_level = static_cast<int>(res.spec.spacings.size()) - 1;
    for (double alpha : res.spec.alphas) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : res.rows)
            if (row.level == last_level && row.alpha == alpha)
                pts.emplace_back(row.delta, row.annulus_integral);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const double dv = pts[i + 1].second - pts[i].second;
            if (dv > 0.0)
                plot.add_row(
                    std::vector<double>{std::sqrt(pts[i].first * pts[i + 1].first), dv});
        }
    }
    write_text_file(out_path(cfg, "sweep_loglog.csv").string(), plot.body());
}

void run_check_scaling(const RunConfig& cfg) {
    ParamReader pr(cfg);
    ScalingCheckSpec spec = radial_scaling_case();
    spec.dim = pr.get_int("dimension", spec.dim);
    spec.p = pr.get_double("p", spec.p);
    spec.s = pr.get_double("s", spec.s);
    spec.r = pr.get_double("r_inner", spec.r);
    spec.R = pr.get_double("r_outer", spec.R);
    spec.spacing = pr.get_double("spacing", spec.spacing);
    spec.half_width = pr.get_double("half_width", spec.half_width);
    spec.lambdas = pr.get_doubles("lambdas", spec.lambdas);
    pr.finish();

    ScalingReport rep = scaling_invariance_check(spec);
    write_json_file(rep.to_json(), out_path(cfg, "scaling.json").string());
}

}  // namespace

int run_config(const RunConfig& cfg) {
    if (cfg.threads > 0) set_thread_count(cfg.threads);
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.command == "solve")
        run_solve(cfg);
    else if (cfg.command == "seminorm")
        run_seminorm(cfg);
    else if (cfg.command == "dualnorm")
        run_dualnorm(cfg);
    else if (cfg.command == "kfunc")
        run_kfunc(cfg);
    else if (cfg.command == "verify-energy")
        run_verify_energy(cfg);
    else if (cfg.command == "verify-sobolev")
        run_verify_sobolev(cfg);
    else if (cfg.command == "sweep-sharpness")
        run_sweep(cfg);
    else if (cfg.command == "check-scaling")
        run_check_scaling(cfg);
    else
        throw std::invalid_argument("unknown command '" + cfg.command + "'");
    return 0;
}

}  // namespace plap
