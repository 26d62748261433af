#include "plap/plaplace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "plap/newton.hpp"

namespace plap {

void validate_energy_params(const EnergyParams& prm, bool for_solve) {
    if (!(prm.p > 2.0)) throw std::invalid_argument("p must exceed 2");
    if (!(prm.eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
    if (for_solve && !(prm.eps > 0.0))
        throw std::invalid_argument("Newton solves require eps > 0");
}

namespace {

struct Discretization {
    std::vector<std::int64_t> dofs;        // interior nodes touching an active cell
    std::vector<std::int64_t> cells;       // cells with center in the ball
    std::vector<double> pinned;            // boundary values on the full node lattice
    std::vector<double> load;              // f_eps * h^N per dof
    ScalarField f_eps;
};

Discretization discretize(const DirichletProblem& prob) {
    const GridSpec& g = prob.grid;
    if (!(prob.rhs.grid == g) || !(prob.boundary.grid == g))
        throw std::invalid_argument("problem fields must live on the problem grid");
    if (!prob.ball.inside(covered_box(g), g.dim))
        throw std::invalid_argument("ball escapes the grid box");

    Discretization d;
    // every cell with a free corner enters the discrete energy; this ties each
    // boundary node to the pinned ring and keeps energy/residual consistent
    d.dofs = interior_nodes(g, prob.ball);
    d.cells = cells_touching_dofs(g, d.dofs);
    d.pinned = prob.boundary.values;

    double rho = prob.mollify_radius;
    if (rho < 0.0) rho = 3.0 * g.spacing;
    if (rho > 0.0) {
        d.f_eps = mollify(prob.rhs, MollifierSpec::standard(rho));
    } else {
        d.f_eps = prob.rhs;
    }
    const double vol = g.cell_volume();
    d.load.reserve(d.dofs.size());
    for (std::int64_t lin : d.dofs)
        d.load.push_back(d.f_eps.values[static_cast<std::size_t>(lin)] * vol);
    return d;
}

CellEnergyProblem build_cell_problem(const DirichletProblem& prob, const Discretization& d) {
    GradientEnergyTerm term;
    term.exponent = prob.params.p;
    term.reg = prob.params.eps;
    term.coeff = 1.0;
    return CellEnergyProblem(prob.grid, d.dofs, d.cells, d.pinned, d.load, term);
}

std::vector<double> dof_values(const std::vector<std::int64_t>& dofs, const ScalarField& u) {
    std::vector<double> x;
    x.reserve(dofs.size());
    for (std::int64_t lin : dofs) x.push_back(u.values[static_cast<std::size_t>(lin)]);
    return x;
}

}  // namespace

ScalarField problem_rhs_eps(const DirichletProblem& prob) { return discretize(prob).f_eps; }

double energy(const ScalarField& u, const DirichletProblem& prob) {
    validate_energy_params(prob.params, false);
    Discretization d = discretize(prob);
    d.pinned = u.values;  // evaluate the functional at u's own nodal values
    CellEnergyProblem cp = build_cell_problem(prob, d);
    return cp.energy(dof_values(d.dofs, u));
}

ScalarField residual(const ScalarField& u, const DirichletProblem& prob) {
    validate_energy_params(prob.params, false);
    Discretization d = discretize(prob);
    // pin the non-dof values to u's own values so the nodal gradient matches
    // the energy evaluated along u
    Discretization du = d;
    du.pinned = u.values;
    CellEnergyProblem cp = build_cell_problem(prob, du);
    std::vector<double> x = dof_values(d.dofs, u);
    std::vector<double> grad(x.size());
    cp.gradient(x, grad);
    ScalarField out = make_field(prob.grid, prob.ball, Centering::node);
    const double inv_vol = 1.0 / prob.grid.cell_volume();
    for (std::size_t i = 0; i < d.dofs.size(); ++i)
        out.values[static_cast<std::size_t>(d.dofs[i])] = grad[i] * inv_vol;
    return out;
}

nlohmann::json SolveReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["iterations"] = iterations;
    j["residual_norm"] = residual_norm;
    j["energy"] = energy;
    j["converged"] = converged;
    j["gradient_fallback"] = gradient_fallback;
    j["energy_trace"] = energy_trace;
    return j;
}

SolveReport solve_dirichlet(const DirichletProblem& prob, const SolveSettings& settings) {
    validate_energy_params(prob.params, true);
    if (!(settings.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    Discretization d = discretize(prob);
    CellEnergyProblem cp = build_cell_problem(prob, d);

    std::vector<double> x;
    if (settings.init) {
        if (!(settings.init->grid == prob.grid))
            throw std::invalid_argument("initial guess lives on the wrong grid");
        x = dof_values(d.dofs, *settings.init);
    } else {
        x = dof_values(d.dofs, prob.boundary);
    }

    NewtonSettings ns;
    ns.tol = settings.tol;
    ns.max_iter = settings.max_iter;
    ns.cg_max_iter = settings.cg_max_iter;

    SolveReport rep;
    rep.f_eps = d.f_eps;
    int total_iters = 0;
    bool fallback = false;
    std::vector<double> trace;

    if (settings.continuation && prob.params.eps < 1e-2) {
        // decreasing-eps ladder: warm starts keep Newton in its basin
        double eps_stage = 1e-2;
        GradientEnergyTerm term = cp.term();
        while (eps_stage > prob.params.eps) {
            term.reg = eps_stage;
            cp.set_term(term);
            NewtonSettings loose = ns;
            loose.tol = std::max(settings.tol, 1e-7);
            NewtonOutcome o = cp.minimize(x, loose);
            total_iters += o.iterations;
            fallback = fallback || o.gradient_fallback;
            eps_stage *= 1e-2;
        }
        term.reg = prob.params.eps;
        cp.set_term(term);
    }

    NewtonOutcome o = cp.minimize(x, ns);
    total_iters += o.iterations;
    fallback = fallback || o.gradient_fallback;

    rep.u_eps = make_field(prob.grid, prob.ball.grown(2.0 * prob.grid.spacing), Centering::node);
    rep.u_eps.values = cp.full_field(x);
    rep.iterations = total_iters;
    rep.residual_norm = o.residual_norm;
    rep.energy = o.energy;
    rep.converged = o.converged;
    rep.gradient_fallback = fallback;
    rep.energy_trace = std::move(o.energy_trace);
    return rep;
}

VectorField v_field(const ScalarField& u, double p) { return v_field(gradient(u), p); }

VectorField v_field(const VectorField& grad_u, double p) {
    if (!(p > 2.0)) throw std::invalid_argument("p must exceed 2");
    VectorField V = grad_u;
    const std::int64_t n = V.comp[0].size();
    const double e = 0.25 * (p - 2.0);  // exponent on |g|^2
    for (std::int64_t i = 0; i < n; ++i) {
        double g2 = 0.0;
        for (int d = 0; d < V.dim; ++d) {
            const double v = grad_u.comp[d].values[static_cast<std::size_t>(i)];
            g2 += v * v;
        }
        const double s = g2 > 0.0 ? std::pow(g2, e) : 0.0;
        for (int d = 0; d < V.dim; ++d)
            V.comp[d].values[static_cast<std::size_t>(i)] =
                s * grad_u.comp[d].values[static_cast<std::size_t>(i)];
    }
    return V;
}

namespace {

std::array<double, 3> v_map(const std::array<double, 3>& z, double p) {
    double n2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    double s = n2 > 0.0 ? std::pow(n2, 0.25 * (p - 2.0)) : 0.0;
    return {s * z[0], s * z[1], s * z[2]};
}

double norm3(const std::array<double, 3>& z) {
    return std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
}

}  // namespace

double pointwise_ratio_c1(const std::array<double, 3>& z, const std::array<double, 3>& w,
                          double p) {
    if (z == w) throw std::invalid_argument("ratio undefined at z = w");
    auto vz = v_map(z, p), vw = v_map(w, p);
    const double ndz = norm3({z[0] - w[0], z[1] - w[1], z[2] - w[2]});
    const double ndv = norm3({vz[0] - vw[0], vz[1] - vw[1], vz[2] - vw[2]});
    return ndz / std::pow(ndv, 2.0 / p);
}

double pointwise_ratio_c2(const std::array<double, 3>& z, const std::array<double, 3>& w,
                          double p) {
    if (z == w) throw std::invalid_argument("ratio undefined at z = w");
    auto vz = v_map(z, p), vw = v_map(w, p);
    const double ndz = norm3({z[0] - w[0], z[1] - w[1], z[2] - w[2]});
    const double ndv = norm3({vz[0] - vw[0], vz[1] - vw[1], vz[2] - vw[2]});
    const double halfp = 0.5 * (p - 2.0);
    return ndv / ((std::pow(norm3(z), halfp) + std::pow(norm3(w), halfp)) * ndz);
}

PointwiseFit pointwise_inequalities(double p, std::int64_t sample_count, std::uint64_t seed) {
    if (!(p > 2.0)) throw std::invalid_argument("p must exceed 2");
    if (sample_count < 1000) throw std::invalid_argument("sample_count must be at least 1000");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto random_dir = [&] {
        std::array<double, 3> v{gauss(rng), gauss(rng), gauss(rng)};
        double n = norm3(v);
        if (n == 0.0) return std::array<double, 3>{1.0, 0.0, 0.0};
        return std::array<double, 3>{v[0] / n, v[1] / n, v[2] / n};
    };
    auto random_vec = [&] {
        const double mag = std::exp(std::log(1e-3) + unif(rng) * (std::log(1e3) - std::log(1e-3)));
        auto d = random_dir();
        return std::array<double, 3>{mag * d[0], mag * d[1], mag * d[2]};
    };

    PointwiseFit fit;
    for (std::int64_t i = 0; i < sample_count; ++i) {
        std::array<double, 3> z = random_vec();
        std::array<double, 3> w;
        const double mode = unif(rng);
        if (mode < 0.4) {
            w = random_vec();
        } else if (mode < 0.7) {
            // near-antipodal pair with comparable magnitude
            const double s = std::exp(0.3 * gauss(rng));
            for (int d = 0; d < 3; ++d) w[d] = -s * z[d];
            const double jitter = 0.1 * unif(rng) * norm3(z);
            auto dir = random_dir();
            for (int d = 0; d < 3; ++d) w[d] += jitter * dir[d];
        } else {
            // nearby pair
            const double rel = std::pow(10.0, -3.0 * unif(rng));
            auto dir = random_dir();
            for (int d = 0; d < 3; ++d) w[d] = z[d] + rel * norm3(z) * dir[d];
        }
        if (z == w) continue;  // 0/0 pair, skipped
        auto vz = v_map(z, p), vw = v_map(w, p);
        std::array<double, 3> dz{z[0] - w[0], z[1] - w[1], z[2] - w[2]};
        std::array<double, 3> dv{vz[0] - vw[0], vz[1] - vw[1], vz[2] - vw[2]};
        const double ndz = norm3(dz), ndv = norm3(dv);
        if (ndz == 0.0 || ndv == 0.0) continue;
        fit.c1 = std::max(fit.c1, ndz / std::pow(ndv, 2.0 / p));
        const double halfp = 0.5 * (p - 2.0);
        const double denom = (std::pow(norm3(z), halfp) + std::pow(norm3(w), halfp)) * ndz;
        if (denom > 0.0) fit.c2 = std::max(fit.c2, ndv / denom);
        fit.samples += 1;
    }
    return fit;
}

EstimateReport verify_energy_estimate(const SolveReport& report, const ScalarField& U,
                                      const DirichletProblem& prob) {
    if (!report.converged) throw std::invalid_argument("energy estimate requires a converged solve");
    const double p = prob.params.p;
    const double eps = prob.params.eps;
    const double pp = p / (p - 1.0);

    VectorField grad_u = gradient(report.u_eps);
    VectorField grad_U = gradient(U);
    IntegralDetail lhs = integrate_magnitude_detail(grad_u, prob.ball, p);

    const double t1 = std::pow(eps, 0.5 * (p - 1.0)) * integrate_magnitude(grad_U, prob.ball, 1.0);
    const double t2 = integrate_magnitude(grad_U, prob.ball, p);
    const double ball_vol = prob.ball.nominal_volume(prob.grid.dim);
    const double fnorm_pp = integrate(report.f_eps, prob.ball, pp);
    const double t3 = std::pow(ball_vol, pp / prob.grid.dim) * fnorm_pp;

    EstimateReport r = make_estimate_report(
        EstimateReport::Kind::energy_uniform, lhs.value,
        {{"eps_gradU_l1", t1}, {"gradU_lp", t2}, {"volume_f_lpprime", t3}},
        {{"p", p},
         {"eps", eps},
         {"R", prob.ball.radius},
         {"h_grid", prob.grid.spacing},
         {"mask_volume", lhs.mask_volume},
         {"ball_volume", ball_vol}});
    r.converged = report.converged;
    return r;
}

double v_face_derivative_sq(const VectorField& V, int axis, const Region& region) {
    const GridSpec& g = V.grid;
    const double vol = g.cell_volume();
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    double acc = 0.0;
    const std::int64_t nc = g.cell_count();
    for (std::int64_t cl = 0; cl < nc; ++cl) {
        Index c = g.cell_unlinear(cl);
        Index cn = c;
        cn[axis] += 1;
        if (!g.cell_in_range(cn)) continue;
        if (!region.contains(g.cell_point(c), g.dim)) continue;
        if (!region.contains(g.cell_point(cn), g.dim)) continue;
        double s = 0.0;
        for (int d = 0; d < V.dim; ++d) {
            const double dv = V.comp[d].at(cn) - V.comp[d].at(c);
            s += dv * dv;
        }
        acc += s * inv_h2 * vol;
    }
    return acc;
}

EstimateReport verify_sobolev_estimate(const ScalarField& u, const ScalarField& f, double p,
                                       double s, double r, double R, double eps,
                                       const SobolevEstimateOptions& opts) {
    if (!(p > 2.0)) throw std::invalid_argument("p must exceed 2");
    const double threshold = (p - 2.0) / p;
    if (!(s > threshold && s <= 1.0))
        throw std::invalid_argument("s out of ((p-2)/p, 1]: threshold (p-2)/p = " +
                                    std::to_string(threshold));
    if (!(r > 0.0 && r < R)) throw std::invalid_argument("radii must satisfy 0 < r < R");
    const double pp = p / (p - 1.0);

    const Region inner = Region::ball(r);
    const Region outer = Region::ball(R);
    VectorField grad_u = gradient(u);
    VectorField V = v_field(grad_u, p);

    double lhs = 0.0;
    std::vector<std::pair<std::string, double>> params{
        {"p", p}, {"s", s}, {"r", r}, {"R", R}, {"eps", eps}, {"h_grid", u.grid.spacing}};
    for (int j = 0; j < u.grid.dim; ++j) {
        const double lj = v_face_derivative_sq(V, j, inner);
        params.emplace_back("lhs_axis" + std::to_string(j + 1), lj);
        lhs = std::max(lhs, lj);
    }

    // (R-r)^{-2} int_{B_R} (eps+|grad u|^2)^{p/2}
    double reg_energy = 0.0;
    {
        const GridSpec& g = u.grid;
        const std::int64_t nc = g.cell_count();
        for (std::int64_t cl = 0; cl < nc; ++cl) {
            Index c = g.cell_unlinear(cl);
            if (!outer.contains(g.cell_point(c), g.dim)) continue;
            double g2 = eps;
            for (int d = 0; d < g.dim; ++d) {
                const double v = grad_u.comp[d].values[static_cast<std::size_t>(cl)];
                g2 += v * v;
            }
            reg_energy += std::pow(g2, 0.5 * p);
        }
        reg_energy *= g.cell_volume();
    }
    const double t1 = reg_energy / ((R - r) * (R - r));

    double fsem;
    if (s == 1.0) {
        fsem = std::pow(integrate_magnitude(gradient(f), outer, pp), 1.0 / pp);
    } else {
        fsem = slobodeckii_seminorm(f, s, pp, outer, opts.pairs);
    }
    const double t2 = std::pow(std::pow(R, s - threshold) * fsem, pp);
    params.emplace_back("f_seminorm", fsem);

    return make_estimate_report(eps > 0.0 ? EstimateReport::Kind::sobolev_uniform
                                          : EstimateReport::Kind::sobolev_local,
                                lhs, {{"reg_energy_over_gap2", t1}, {"f_term", t2}},
                                std::move(params));
}

double fractional_gradient_check(const ScalarField& u, double sigma, double p, const Region& inner,
                                 const PairSumSettings& pairs) {
    if (!(p > 2.0)) throw std::invalid_argument("p must exceed 2");
    if (!(sigma > 0.0 && sigma < 2.0 / p))
        throw std::invalid_argument("sigma out of (0, 2/p): threshold 2/p = " +
                                    std::to_string(2.0 / p));
    VectorField grad_u = gradient(u);
    double best = 0.0;
    for (int j = 0; j < u.grid.dim; ++j)
        best = std::max(best, slobodeckii_seminorm(grad_u.comp[j], sigma, p, inner, pairs));
    return best;
}

}  // namespace plap
