#include "plap/dualnorm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "plap/newton.hpp"
#include "plap/parallel.hpp"

namespace plap {

double Functional::action(const ScalarField& phi) const {
    if (!(phi.grid == grid)) throw std::invalid_argument("test field lives on the wrong grid");
    double s = 0.0;
    for (std::size_t i = 0; i < node_coeff.size(); ++i) s += node_coeff[i] * phi.values[i];
    return s;
}

Functional Functional::from_density(const ScalarField& density) {
    if (density.centering != Centering::node)
        throw std::invalid_argument("density must be node-centered");
    Functional F;
    F.grid = density.grid;
    F.form = Form::density;
    F.node_coeff.resize(density.values.size());
    const double vol = density.grid.cell_volume();
    for (std::size_t i = 0; i < density.values.size(); ++i)
        F.node_coeff[i] = density.values[i] * vol;
    return F;
}

Functional Functional::scaled(double factor) const {
    Functional F = *this;
    for (double& c : F.node_coeff) c *= factor;
    return F;
}

Functional weak_derivative_functional(const ScalarField& f, int axis) {
    if (f.centering != Centering::node) throw std::invalid_argument("f must be node-centered");
    const GridSpec& g = f.grid;
    if (axis < 0 || axis >= g.dim) throw std::invalid_argument("axis out of range");
    Functional F;
    F.grid = g;
    F.form = Functional::Form::derivative;
    F.axis = axis;
    F.node_coeff.assign(f.values.size(), 0.0);

    const double vol = g.cell_volume();
    const double avg = 1.0 / static_cast<double>(1 << (g.dim - 1));
    const int ncorner = 1 << g.dim;
    const std::int64_t nc = g.cell_count();
    for (std::int64_t cl = 0; cl < nc; ++cl) {
        Index c = g.cell_unlinear(cl);
        double favg = 0.0;
        std::int64_t corner_lin[8];
        double wj[8];
        for (int k = 0; k < ncorner; ++k) {
            Index ix = c;
            for (int d = 0; d < g.dim; ++d)
                if ((k >> d) & 1) ix[d] += 1;
            corner_lin[k] = g.node_linear(ix);
            favg += f.values[static_cast<std::size_t>(corner_lin[k])];
            wj[k] = ((k >> axis) & 1 ? 1.0 : -1.0) * avg / g.spacing;
        }
        favg /= static_cast<double>(ncorner);
        if (favg == 0.0) continue;
        for (int k = 0; k < ncorner; ++k)
            F.node_coeff[static_cast<std::size_t>(corner_lin[k])] -= favg * wj[k] * vol;
    }
    return F;
}

namespace {

// ---- sigma < 1: Gagliardo sum over node pairs --------------------------

struct NodePairProblem {
    std::vector<Point> pts;  // dof nodes first, then remaining box nodes
    std::size_t ndof = 0;
    int dim = 1;
    double kexp = 0.0;  // exponent applied to squared distance
    double vol2 = 0.0;
    double r = 2.0;

    struct Eval {
        double power_smooth = 0.0;
        double power_exact = 0.0;
        std::vector<double> grad;  // of power_smooth w.r.t. dof values
    };

    Eval evaluate(std::span<const double> phi, double smooth_eps, bool want_grad) const {
        struct Partial {
            double psm = 0.0, pex = 0.0;
            std::vector<double> grad;
        };
        const std::int64_t total = static_cast<std::int64_t>(pts.size());
        const std::int64_t nd = static_cast<std::int64_t>(ndof);
        const double rr = r;
        Partial init;
        if (want_grad) init.grad.assign(ndof, 0.0);
        Partial sum = parallel_reduce(
            0, nd, init,
            [&](std::int64_t lo, std::int64_t hi) {
                Partial a;
                if (want_grad) a.grad.assign(ndof, 0.0);
                for (std::int64_t i = lo; i < hi; ++i) {
                    const Point& xi = pts[static_cast<std::size_t>(i)];
                    const double vi = phi[static_cast<std::size_t>(i)];
                    for (std::int64_t j = i + 1; j < total; ++j) {
                        const Point& xj = pts[static_cast<std::size_t>(j)];
                        const double vj = j < nd ? phi[static_cast<std::size_t>(j)] : 0.0;
                        const double dv = vi - vj;
                        if (dv == 0.0 && !want_grad) continue;
                        double d2 = 0.0;
                        for (int d = 0; d < dim; ++d) {
                            const double dd = xi[d] - xj[d];
                            d2 += dd * dd;
                        }
                        const double kern = std::pow(d2, kexp);
                        const double dv2 = dv * dv;
                        if (dv != 0.0) a.pex += std::pow(dv2, 0.5 * rr) * kern;
                        const double base = dv2 + smooth_eps;
                        a.psm += std::pow(base, 0.5 * rr) * kern;
                        if (want_grad) {
                            const double gterm =
                                rr * std::pow(base, 0.5 * rr - 1.0) * dv * kern;
                            a.grad[static_cast<std::size_t>(i)] += gterm;
                            if (j < nd) a.grad[static_cast<std::size_t>(j)] -= gterm;
                        }
                    }
                }
                return a;
            },
            [&](Partial a, Partial b) {
                a.psm += b.psm;
                a.pex += b.pex;
                if (want_grad)
                    for (std::size_t k = 0; k < a.grad.size(); ++k) a.grad[k] += b.grad[k];
                return a;
            },
            64);
        Eval e;
        e.power_smooth = 2.0 * sum.psm * vol2;
        e.power_exact = 2.0 * sum.pex * vol2;
        if (want_grad) {
            e.grad = std::move(sum.grad);
            for (double& gv : e.grad) gv *= 2.0 * vol2;
        }
        return e;
    }
};

NodePairProblem build_node_pairs(const GridSpec& g, const std::vector<std::int64_t>& dofs,
                                 double sigma, double r, std::int64_t pair_budget) {
    NodePairProblem np;
    np.dim = g.dim;
    np.r = r;
    np.kexp = -0.5 * (g.dim + sigma * r);
    np.vol2 = g.cell_volume() * g.cell_volume();
    np.ndof = dofs.size();
    std::vector<char> is_dof(static_cast<std::size_t>(g.node_count()), 0);
    for (std::int64_t n : dofs) is_dof[static_cast<std::size_t>(n)] = 1;
    np.pts.reserve(static_cast<std::size_t>(g.node_count()));
    for (std::int64_t n : dofs) np.pts.push_back(g.node_point(g.node_unlinear(n)));
    const std::int64_t total_nodes = g.node_count();
    for (std::int64_t n = 0; n < total_nodes; ++n)
        if (!is_dof[static_cast<std::size_t>(n)]) np.pts.push_back(g.node_point(g.node_unlinear(n)));
    const std::int64_t nd = static_cast<std::int64_t>(np.ndof);
    const std::int64_t pairs = nd * (nd - 1) / 2 + nd * (total_nodes - nd);
    if (pairs > pair_budget)
        throw std::runtime_error("pair budget exceeded: " + std::to_string(pairs) +
                                 " kernel evaluations requested, budget is " +
                                 std::to_string(pair_budget));
    return np;
}

struct AscentOutcome {
    double best_ratio = 0.0;
    std::vector<double> best_phi;
    int iterations = 0;
    bool converged = false;
};

AscentOutcome ratio_ascent(const NodePairProblem& np, std::span<const double> a,
                           std::vector<double> phi, const DualSolveSettings& st) {
    AscentOutcome out;
    const std::size_t n = np.ndof;
    const double rr = np.r;

    auto exact_seminorm = [&](std::span<const double> v) {
        return std::pow(np.evaluate(v, 0.0, false).power_exact, 1.0 / rr);
    };
    auto act = [&](std::span<const double> v) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * v[i];
        return s;
    };

    // normalize to unit seminorm
    double s0 = exact_seminorm(phi);
    if (!(s0 > 0.0)) return out;
    for (double& v : phi) v /= s0;
    double ratio = act(phi);
    if (ratio < 0.0) {  // flip sign: the ratio of -phi is -ratio
        for (double& v : phi) v = -v;
        ratio = -ratio;
    }
    out.best_ratio = ratio;
    out.best_phi = phi;

    double step = 0.5;
    int stall = 0;
    std::vector<double> dir(n), trial(n);
    for (int it = 0; it < st.max_iter; ++it) {
        out.iterations = it + 1;
        NodePairProblem::Eval ev = np.evaluate(phi, st.smoothing, true);
        // projected ratio gradient on the unit sphere of the seminorm
        const double s_sm = std::pow(ev.power_smooth, 1.0 / rr);
        const double scale = std::pow(ev.power_smooth, 1.0 / rr - 1.0) / rr;
        double dnorm2 = 0.0, pnorm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] = a[i] - (ratio / std::max(s_sm, 1e-300)) * scale * ev.grad[i];
            dnorm2 += dir[i] * dir[i];
            pnorm2 += phi[i] * phi[i];
        }
        if (!(dnorm2 > 0.0)) break;
        const double dscale = std::sqrt(pnorm2 / dnorm2);
        bool improved = false;
        for (int bt = 0; bt < 6; ++bt) {
            const double tau = step * dscale;
            for (std::size_t i = 0; i < n; ++i) trial[i] = phi[i] + tau * dir[i];
            const double st_norm = exact_seminorm(trial);
            if (st_norm > 0.0) {
                for (std::size_t i = 0; i < n; ++i) trial[i] /= st_norm;
                const double tr = act(trial);
                if (tr > ratio) {
                    phi = trial;
                    ratio = tr;
                    improved = true;
                    break;
                }
            }
            step *= 0.35;
        }
        if (improved) {
            step = std::min(step * 1.6, 4.0);
            if (ratio > out.best_ratio) {
                const double rel = (ratio - out.best_ratio) / std::max(out.best_ratio, 1e-300);
                out.best_ratio = ratio;
                out.best_phi = phi;
                stall = rel < st.tol ? stall + 1 : 0;
            }
        } else {
            ++stall;
        }
        if (stall >= 5) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

double dual_primal_seminorm(const ScalarField& phi, double sigma, double r,
                            const DualSolveSettings& settings) {
    if (!(r > 1.0)) throw std::invalid_argument("primal exponent must lie in (1,inf)");
    if (sigma == 1.0) {
        VectorField g = gradient(phi);
        return std::pow(integrate_magnitude(g, covered_box(phi.grid), r), 1.0 / r);
    }
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::invalid_argument("primal smoothness must lie in (0,1]");
    // all nodes are treated as degrees of freedom for evaluation purposes
    std::vector<std::int64_t> all(static_cast<std::size_t>(phi.grid.node_count()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int64_t>(i);
    NodePairProblem np =
        build_node_pairs(phi.grid, all, sigma, r, settings.pair_budget);
    return std::pow(np.evaluate(phi.values, 0.0, false).power_exact, 1.0 / r);
}

DualNormResult dual_seminorm(const Functional& F, double sigma, double r, const Region& ball,
                             const DualSolveSettings& settings) {
    if (!(r > 1.0)) throw std::invalid_argument("primal exponent must lie in (1,inf)");
    if (!(sigma > 0.0 && sigma <= 1.0))
        throw std::invalid_argument("primal smoothness must lie in (0,1]");
    const GridSpec& g = F.grid;
    if (!ball.inside(covered_box(g), g.dim))
        throw std::invalid_argument("ball escapes the grid box");

    DualNormResult res;
    res.primal_smoothness = sigma;
    res.primal_exponent = r;
    res.maximizer = make_field(g, ball, Centering::node);

    const std::vector<std::int64_t> dofs = interior_nodes(g, ball);
    if (dofs.empty()) {
        res.converged = true;
        return res;
    }
    std::vector<double> a(dofs.size());
    double amax = 0.0;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        a[i] = F.node_coeff[static_cast<std::size_t>(dofs[i])];
        amax = std::max(amax, std::abs(a[i]));
    }
    if (amax == 0.0) {
        res.converged = true;
        return res;
    }
    // homogeneity: solve with max-normalized coefficients, scale the value back
    std::vector<double> an(a);
    for (double& v : an) v /= amax;

    if (sigma == 1.0) {
        // concave dual: max <a,phi> - (1/r) S(phi)^r, solved as a convex
        // gradient-energy minimization; the unique stationary point maximizes
        // the ratio.
        GradientEnergyTerm term;
        term.exponent = r;
        term.reg = settings.smoothing;
        term.coeff = 1.0;
        CellEnergyProblem prob(g, dofs, cells_touching_dofs(g, dofs),
                               std::vector<double>(static_cast<std::size_t>(g.node_count()), 0.0),
                               an, term);
        std::vector<double> x(dofs.size(), 0.0);
        if (settings.warm_start) {
            for (std::size_t i = 0; i < dofs.size(); ++i)
                x[i] = settings.warm_start->values[static_cast<std::size_t>(dofs[i])];
        }
        NewtonSettings ns;
        ns.tol = 1e-10;
        ns.max_iter = settings.max_iter;
        NewtonOutcome o = prob.minimize(x, ns);
        res.iterations = o.iterations;
        res.converged = o.converged;
        const double snorm = prob.gradient_lr_norm(x, r);
        double action = 0.0;
        for (std::size_t i = 0; i < dofs.size(); ++i) action += an[i] * x[i];
        if (snorm > 0.0 && action > 0.0) {
            res.value = amax * action / snorm;
            for (std::size_t i = 0; i < dofs.size(); ++i)
                res.maximizer.values[static_cast<std::size_t>(dofs[i])] = x[i] / snorm;
        } else {
            res.converged = false;
        }
        return res;
    }

    // sigma < 1: normalized ascent on the ratio with random restarts
    NodePairProblem np = build_node_pairs(g, dofs, sigma, r, settings.pair_budget);
    std::mt19937_64 rng(settings.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    AscentOutcome best;
    int total_iter = 0;
    const int tries = 1 + std::max(0, settings.restarts);
    for (int t = 0; t < tries; ++t) {
        std::vector<double> phi0(dofs.size());
        if (t == 0 && settings.warm_start) {
            for (std::size_t i = 0; i < dofs.size(); ++i)
                phi0[i] = settings.warm_start->values[static_cast<std::size_t>(dofs[i])];
        } else if (t == 0) {
            phi0 = an;  // the coefficient image of F
        } else {
            for (double& v : phi0) v = gauss(rng);
        }
        AscentOutcome o = ratio_ascent(np, an, std::move(phi0), settings);
        total_iter += o.iterations;
        if (o.best_ratio > best.best_ratio) {
            const bool keep_conv = o.converged;
            best = std::move(o);
            best.converged = keep_conv;
        }
    }
    res.iterations = total_iter;
    res.converged = best.converged;
    res.value = amax * best.best_ratio;
    if (!best.best_phi.empty())
        for (std::size_t i = 0; i < dofs.size(); ++i)
            res.maximizer.values[static_cast<std::size_t>(dofs[i])] = best.best_phi[i];
    return res;
}

EstimateReport negative_norm_check(const ScalarField& f, double beta, double q, const Region& ball,
                                   const NegativeNormSettings& settings) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta out of (0,1)");
    if (!(q > 1.0)) throw std::invalid_argument("q out of (1,inf)");
    const double qprime = q / (q - 1.0);

    const double rhs = slobodeckii_seminorm(f, beta, q, ball, settings.pairs);

    double lhs = 0.0;
    bool all_conv = true;
    std::vector<std::pair<std::string, double>> params{
        {"beta", beta}, {"q", q}, {"q_prime", qprime}, {"R", ball.radius},
        {"h_grid", f.grid.spacing}, {"restarts", static_cast<double>(settings.dual.restarts)}};
    for (int j = 0; j < f.grid.dim; ++j) {
        Functional Tj = weak_derivative_functional(f, j);
        DualNormResult d = dual_seminorm(Tj, 1.0 - beta, qprime, ball, settings.dual);
        params.emplace_back("dual_axis" + std::to_string(j + 1), d.value);
        lhs = std::max(lhs, d.value);
        all_conv = all_conv && d.converged;
    }

    EstimateReport r = make_estimate_report(EstimateReport::Kind::negative_norm, lhs,
                                            {{"slobodeckii", rhs}}, std::move(params));
    r.converged = all_conv;
    return r;
}

}  // namespace plap
