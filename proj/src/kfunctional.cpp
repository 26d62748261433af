#include "plap/kfunctional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "plap/newton.hpp"

namespace plap {

namespace {

struct CoupleWorkspace {
    GridSpec grid;
    InterpolationParams prm;
    std::vector<std::int64_t> dofs;
    std::vector<char> is_dof;
    std::vector<char> is_xnode;
    CellEnergyProblem stiffness;  // exponent 2, reg 0: hessian_vec applies K
    double vol = 0.0;

    static CoupleWorkspace build(const GridSpec& g, const InterpolationParams& prm) {
        if (!(prm.theta > 0.0 && prm.theta < 1.0))
            throw std::invalid_argument("theta out of (0,1)");
        if (!(prm.q > 1.0)) throw std::invalid_argument("q out of (1,inf)");
        if (!prm.ball.inside(covered_box(g), g.dim))
            throw std::invalid_argument("ball escapes the grid box");

        std::vector<std::int64_t> dofs;
        std::vector<std::int64_t> cells;
        if (prm.couple == CoupleKind::lq_d10) {
            dofs = interior_nodes(g, prm.ball);
            cells = cells_touching_dofs(g, dofs);
        } else {
            const std::int64_t n = g.node_count();
            for (std::int64_t lin = 0; lin < n; ++lin)
                if (prm.ball.contains(g.node_point(g.node_unlinear(lin)), g.dim))
                    dofs.push_back(lin);
            std::vector<char> in(static_cast<std::size_t>(g.node_count()), 0);
            for (std::int64_t d : dofs) in[static_cast<std::size_t>(d)] = 1;
            const std::int64_t nc = g.cell_count();
            const int ncorner = 1 << g.dim;
            for (std::int64_t cl = 0; cl < nc; ++cl) {
                Index c = g.cell_unlinear(cl);
                bool all = true;
                for (int k = 0; k < ncorner && all; ++k) {
                    Index ix = c;
                    for (int d = 0; d < g.dim; ++d)
                        if ((k >> d) & 1) ix[d] += 1;
                    all = in[static_cast<std::size_t>(g.node_linear(ix))] != 0;
                }
                if (all) cells.push_back(cl);
            }
        }
        GradientEnergyTerm quad{2.0, 0.0, 1.0};
        CoupleWorkspace ws{
            g,
            prm,
            dofs,
            {},
            {},
            CellEnergyProblem(g, dofs, cells,
                              std::vector<double>(static_cast<std::size_t>(g.node_count()), 0.0),
                              std::vector<double>(dofs.size(), 0.0), quad),
            g.cell_volume()};
        ws.is_dof.assign(static_cast<std::size_t>(g.node_count()), 0);
        for (std::int64_t d : dofs) ws.is_dof[static_cast<std::size_t>(d)] = 1;
        ws.is_xnode.assign(static_cast<std::size_t>(g.node_count()), 0);
        if (prm.couple == CoupleKind::lq_d10) {
            std::fill(ws.is_xnode.begin(), ws.is_xnode.end(), 1);
        } else {
            for (std::int64_t d : dofs) ws.is_xnode[static_cast<std::size_t>(d)] = 1;
        }
        return ws;
    }

    // ||w||_{L^q} as a nodal sum over the X-node set
    double x_norm_full(std::span<const double> w, double q) const {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (is_xnode[i] && w[i] != 0.0) s += std::pow(std::abs(w[i]), q);
        return std::pow(s * vol, 1.0 / q);
    }

    double y_zero_order(std::span<const double> vdof, double q) const {
        double s = 0.0;
        for (double v : vdof)
            if (v != 0.0) s += std::pow(std::abs(v), q);
        return std::pow(s * vol, 1.0 / q);
    }

    double y_norm(std::span<const double> vdof, double q) const {
        const double grad_part = stiffness.gradient_lr_norm(vdof, q);
        if (prm.couple == CoupleKind::lq_d10) return grad_part;
        return y_zero_order(vdof, q) + grad_part;
    }

    std::vector<double> dof_values(const ScalarField& u) const {
        std::vector<double> x(dofs.size());
        for (std::size_t i = 0; i < dofs.size(); ++i)
            x[i] = u.values[static_cast<std::size_t>(dofs[i])];
        return x;
    }

    bool admissible(const ScalarField& u) const {
        for (std::size_t i = 0; i < u.values.size(); ++i)
            if (u.values[i] != 0.0 && !is_dof[i]) return false;
        return true;
    }

    std::vector<double> x_residual_full(const ScalarField& u, std::span<const double> vdof) const {
        std::vector<double> w = u.values;
        for (std::size_t i = 0; i < dofs.size(); ++i)
            w[static_cast<std::size_t>(dofs[i])] -= vdof[i];
        return w;
    }

    double objective(const ScalarField& u, std::span<const double> vdof, double t) const {
        return x_norm_full(x_residual_full(u, vdof), prm.q) + t * y_norm(vdof, prm.q);
    }
};

// Jacobi-preconditioned CG for (vol I + mu K) v = vol u_dof.
void solve_tikhonov(const CoupleWorkspace& ws, std::span<const double> udof, double mu,
                    std::vector<double>& v, int cg_max, double cg_tol) {
    const std::size_t n = udof.size();
    std::vector<double> diagK(n), r(n), z(n), p(n), ap(n);
    ws.stiffness.hessian_diag(v, diagK);  // constant for the quadratic term
    const double vol = ws.vol;
    auto apply = [&](std::span<const double> x, std::span<double> y) {
        ws.stiffness.hessian_vec(x, x, y);  // K x (state ignored for exponent 2)
        for (std::size_t i = 0; i < n; ++i) y[i] = vol * x[i] + mu * y[i];
    };
    apply(v, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = vol * udof[i] - ap[i];
    double r0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r0 += r[i] * r[i];
    r0 = std::sqrt(r0);
    if (r0 == 0.0) return;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / (vol + mu * diagK[i]);
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
    for (int k = 0; k < cg_max; ++k) {
        double rn = 0.0;
        for (std::size_t i = 0; i < n; ++i) rn += r[i] * r[i];
        if (std::sqrt(rn) <= cg_tol * r0) break;
        apply(p, ap);
        double pap = 0.0;
        for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / (vol + mu * diagK[i]);
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
}

// Best competitor scaling for the W^{1,q} couple: minimize over c >= 0 of
// the objective along c * v by golden-section (the function is convex).
double best_scale(const CoupleWorkspace& ws, const ScalarField& u, std::span<const double> v,
                  double t) {
    std::vector<double> scaled(v.size());
    auto eval_c = [&](double c) {
        for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = c * v[i];
        return ws.objective(u, scaled, t);
    };
    double lo = 0.0, hi = 2.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = eval_c(x1), f2 = eval_c(x2);
    for (int it = 0; it < 50; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval_c(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval_c(x2);
        }
    }
    return 0.5 * (lo + hi);
}

struct PathResult {
    std::vector<double> v;
    double objective = 0.0;
    bool converged = true;
};

// q = 2: walk the Tikhonov path (vol I + mu K) v = vol u and take the best
// objective over a log-mu scan followed by golden-section refinement.
PathResult quadratic_path(const CoupleWorkspace& ws, const ScalarField& u, double t,
                          const KSolveSettings& st) {
    const std::vector<double> udof = ws.dof_values(u);
    const std::size_t n = udof.size();
    PathResult best;
    best.v.assign(n, 0.0);
    best.objective = ws.objective(u, best.v, t);  // competitor 0

    const double h2 = ws.grid.spacing * ws.grid.spacing;
    std::vector<double> v(udof);  // warm start at mu -> 0 limit
    std::vector<double> scaled(n);

    auto eval_mu = [&](double mu) {
        solve_tikhonov(ws, udof, mu, v, st.cg_max_iter, 1e-10);
        double c = 1.0;
        if (ws.prm.couple == CoupleKind::lq_w1q) c = best_scale(ws, u, v, t);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = c * v[i];
        const double f = ws.objective(u, scaled, t);
        if (f < best.objective) {
            best.objective = f;
            best.v = scaled;
        }
        return f;
    };

    // coarse scan
    std::vector<double> lmu;
    std::vector<double> fvals;
    for (int k = -9; k <= 9; ++k) {
        const double mu = std::pow(10.0, k) * h2;
        lmu.push_back(std::log(mu));
        fvals.push_back(eval_mu(mu));
    }
    // golden refinement around the scan minimum
    std::size_t imin = 0;
    for (std::size_t i = 1; i < fvals.size(); ++i)
        if (fvals[i] < fvals[imin]) imin = i;
    double lo = lmu[imin > 0 ? imin - 1 : 0];
    double hi = lmu[imin + 1 < lmu.size() ? imin + 1 : lmu.size() - 1];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = eval_mu(std::exp(x1)), f2 = eval_mu(std::exp(x2));
    for (int it = 0; it < st.mu_iter; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval_mu(std::exp(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval_mu(std::exp(x2));
        }
    }
    return best;
}

// q != 2: smoothed gradient descent with Armijo backtracking, started from
// the quadratic-path competitor.
PathResult general_descent(const CoupleWorkspace& ws, const ScalarField& u, double t,
                           const KSolveSettings& st) {
    const double q = ws.prm.q;
    const std::vector<double> udof = ws.dof_values(u);
    const std::size_t n = udof.size();

    double uscale = 0.0;
    for (double v : u.values) uscale = std::max(uscale, std::abs(v));
    const double e = st.smoothing * std::max(1.0, uscale * uscale);

    PathResult cur = quadratic_path(ws, u, t, st);
    if (st.warm_start && st.warm_start->size() == n) {
        // keep the better of quadratic init and warm start
        const double fw = ws.objective(u, *st.warm_start, t);
        if (fw < cur.objective) {
            cur.v = *st.warm_start;
            cur.objective = fw;
        }
    }

    // smoothed-objective machinery
    GradientEnergyTerm term{q, e, 1.0};
    CellEnergyProblem cellq(ws.grid, ws.dofs,
                            // reuse the same cell set as the stiffness problem
                            [&] {
                                return ws.prm.couple == CoupleKind::lq_d10
                                           ? cells_touching_dofs(ws.grid, ws.dofs)
                                           : std::vector<std::int64_t>{};
                            }(),
                            std::vector<double>(static_cast<std::size_t>(ws.grid.node_count()), 0.0),
                            std::vector<double>(n, 0.0), term);
    const bool rebuild_cells = ws.prm.couple == CoupleKind::lq_w1q;
    // for the W^{1,q} couple the interior cell list differs; rebuild explicitly
    std::vector<std::int64_t> wcells;
    std::unique_ptr<CellEnergyProblem> cellq_w;
    if (rebuild_cells) {
        const GridSpec& g = ws.grid;
        const std::int64_t nc = g.cell_count();
        const int ncorner = 1 << g.dim;
        for (std::int64_t cl = 0; cl < nc; ++cl) {
            Index c = g.cell_unlinear(cl);
            bool all = true;
            for (int k = 0; k < ncorner && all; ++k) {
                Index ix = c;
                for (int d = 0; d < g.dim; ++d)
                    if ((k >> d) & 1) ix[d] += 1;
                all = ws.is_dof[static_cast<std::size_t>(g.node_linear(ix))] != 0;
            }
            if (all) wcells.push_back(cl);
        }
        cellq_w = std::make_unique<CellEnergyProblem>(
            g, ws.dofs, wcells,
            std::vector<double>(static_cast<std::size_t>(g.node_count()), 0.0),
            std::vector<double>(n, 0.0), term);
    }
    const CellEnergyProblem& cq = rebuild_cells ? *cellq_w : cellq;

    const double vol = ws.vol;
    auto smooth_obj_grad = [&](std::span<const double> v, std::vector<double>* grad) {
        // X part
        double xs = 0.0;
        std::vector<double> w = ws.x_residual_full(u, v);
        for (std::size_t i = 0; i < w.size(); ++i)
            if (ws.is_xnode[i]) xs += std::pow(w[i] * w[i] + e, 0.5 * q);
        xs *= vol;
        const double xnorm = std::pow(xs, 1.0 / q);
        // Y gradient part (P_grad = q * gradient_term)
        const double gt = cq.gradient_term(v);
        const double pgrad = q * gt;
        const double ygrad = std::pow(pgrad, 1.0 / q);
        // Y zero-order part
        double yzero = 0.0;
        double pzero = 0.0;
        if (ws.prm.couple == CoupleKind::lq_w1q) {
            for (std::size_t i = 0; i < v.size(); ++i) pzero += std::pow(v[i] * v[i] + e, 0.5 * q);
            pzero *= vol;
            yzero = std::pow(pzero, 1.0 / q);
        }
        const double f = xnorm + t * (ygrad + yzero);
        if (grad) {
            grad->assign(v.size(), 0.0);
            // d xnorm / d v_i = -(w_i^2+e)^{q/2-1} w_i vol * xnorm^{1-q}
            const double xfac = std::pow(xs, 1.0 / q - 1.0) * vol;
            for (std::size_t i = 0; i < ws.dofs.size(); ++i) {
                const double wi = w[static_cast<std::size_t>(ws.dofs[i])];
                (*grad)[i] -= xfac * std::pow(wi * wi + e, 0.5 * q - 1.0) * wi;
            }
            // dP/dv = q * d(gradient_term)/dv, so dYgrad/dv = pgrad^{1/q-1} * d(gradient_term)/dv
            std::vector<double> gy(v.size());
            cq.gradient(v, gy);
            const double yfac = t * std::pow(pgrad, 1.0 / q - 1.0);
            for (std::size_t i = 0; i < v.size(); ++i) (*grad)[i] += yfac * gy[i];
            if (ws.prm.couple == CoupleKind::lq_w1q && pzero > 0.0) {
                const double zfac = t * std::pow(pzero, 1.0 / q - 1.0) * vol;
                for (std::size_t i = 0; i < v.size(); ++i)
                    (*grad)[i] += zfac * std::pow(v[i] * v[i] + e, 0.5 * q - 1.0) * v[i];
            }
        }
        return f;
    };

    std::vector<double> v = cur.v, grad(n), trial(n);
    double f = smooth_obj_grad(v, &grad);
    double step = 1.0;
    bool converged = false;
    for (int it = 0; it < st.max_iter; ++it) {
        double gn2 = 0.0;
        for (double gv : grad) gn2 += gv * gv;
        if (std::sqrt(gn2) <= st.tol * std::max(1.0, std::abs(f))) {
            converged = true;
            break;
        }
        bool ok = false;
        for (int bt = 0; bt < 30; ++bt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] - step * grad[i];
            const double ft = smooth_obj_grad(trial, nullptr);
            if (ft < f - 1e-4 * step * gn2) {
                v = trial;
                f = ft;
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            converged = true;  // no descent available at machine precision
            break;
        }
        step = std::min(step * 1.8, 1e6);
        smooth_obj_grad(v, &grad);
    }

    const double fexact = ws.objective(u, v, t);
    if (fexact < cur.objective) {
        cur.v = v;
        cur.objective = fexact;
    }
    cur.converged = converged;
    return cur;
}

}  // namespace

double couple_x_norm(const ScalarField& w, const InterpolationParams& prm) {
    CoupleWorkspace ws = CoupleWorkspace::build(w.grid, prm);
    return ws.x_norm_full(w.values, prm.q);
}

double couple_y_norm(const ScalarField& v, const InterpolationParams& prm) {
    CoupleWorkspace ws = CoupleWorkspace::build(v.grid, prm);
    return ws.y_norm(ws.dof_values(v), prm.q);
}

KPoint k_functional(const ScalarField& u, double t, const InterpolationParams& prm,
                    const KSolveSettings& settings) {
    if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
    if (u.centering != Centering::node)
        throw std::invalid_argument("K-functional competitors are node-centered");
    CoupleWorkspace ws = CoupleWorkspace::build(u.grid, prm);

    PathResult r;
    if (prm.q == 2.0) {
        r = quadratic_path(ws, u, t, settings);
        if (settings.warm_start && settings.warm_start->size() == ws.dofs.size()) {
            const double fw = ws.objective(u, *settings.warm_start, t);
            if (fw < r.objective) {
                r.v = *settings.warm_start;
                r.objective = fw;
            }
        }
    } else {
        r = general_descent(ws, u, t, settings);
    }
    // feasible-point bound: u itself when admissible in Y
    if (ws.admissible(u)) {
        std::vector<double> udof = ws.dof_values(u);
        const double fu = t * ws.y_norm(udof, prm.q);
        if (fu < r.objective) {
            r.v = std::move(udof);
            r.objective = fu;
        }
    }

    KPoint kp;
    kp.t = t;
    kp.converged = r.converged;
    kp.part_y = make_field(u.grid, prm.ball, Centering::node);
    for (std::size_t i = 0; i < ws.dofs.size(); ++i)
        kp.part_y.values[static_cast<std::size_t>(ws.dofs[i])] = r.v[i];
    kp.part_x = u;
    kp.part_x.support = covered_box(u.grid);
    for (std::size_t i = 0; i < kp.part_x.values.size(); ++i)
        kp.part_x.values[i] -= kp.part_y.values[i];
    kp.part_x_norm = ws.x_norm_full(kp.part_x.values, prm.q);
    kp.part_y_norm = ws.y_norm(r.v, prm.q);
    kp.k_value = kp.part_x_norm + t * kp.part_y_norm;
    return kp;
}

std::pair<ScalarField, ScalarField> explicit_decomposition(const ScalarField& u, double t,
                                                           const MollifierSpec& m) {
    if (u.support.kind != Region::Kind::ball)
        throw std::invalid_argument("explicit decomposition expects a ball-supported field");
    const double R = u.support.radius;
    if (!(t > 0.0 && t < 0.5 * R)) throw std::invalid_argument("t must lie in (0, R/2)");
    if (std::abs(m.radius - t) > 1e-12 * std::max(1.0, t))
        throw std::invalid_argument("mollifier radius must equal t");

    ScalarField vt = dilate(u, t);
    ScalarField ut = mollify(vt, m);
    ut.support = Region::ball(R, u.support.center);
    ScalarField rem = u;
    for (std::size_t i = 0; i < rem.values.size(); ++i) rem.values[i] -= ut.values[i];
    return {ut, rem};
}

std::vector<double> default_t_grid(double R, int count) {
    if (count < 2) throw std::invalid_argument("t grid needs at least 2 points");
    std::vector<double> t(static_cast<std::size_t>(count));
    const double lo = std::log(1e-3 * R), hi = std::log(1e3 * R);
    for (int i = 0; i < count; ++i)
        t[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (count - 1));
    return t;
}

KProfile interpolation_profile(const ScalarField& u, const InterpolationParams& prm,
                               std::span<const double> t_grid, const KSolveSettings& settings) {
    if (t_grid.size() < 2) throw std::invalid_argument("t grid needs at least 2 points");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("t grid must be strictly increasing");
    const double R = prm.ball.radius;
    const double q = prm.q;
    const double theta = prm.theta;

    KProfile prof;
    KSolveSettings st = settings;
    std::vector<double> prev;
    for (double t : t_grid) {
        st.warm_start = prev.empty() ? nullptr : &prev;
        KPoint kp = k_functional(u, t, prm, st);
        // carry the competitor forward
        CoupleWorkspace ws = CoupleWorkspace::build(u.grid, prm);
        prev = ws.dof_values(kp.part_y);
        prof.points.push_back(std::move(kp));
    }

    // quadrature over sampled t <= R/2, trapezoid in log t
    auto weight = [&](const KPoint& kp) {
        return std::pow(kp.t, -theta * q) * std::pow(kp.k_value, q);
    };
    double quad = 0.0;
    const KPoint* last_below = nullptr;
    for (std::size_t i = 0; i + 1 < prof.points.size(); ++i) {
        const KPoint& a = prof.points[i];
        const KPoint& b = prof.points[i + 1];
        if (b.t > 0.5 * R) break;
        quad += 0.5 * (weight(a) + weight(b)) * std::log(b.t / a.t);
        last_below = &b;
    }
    if (last_below == nullptr && prof.points.front().t <= 0.5 * R)
        last_below = &prof.points.front();
    prof.quadrature_part = quad;

    CoupleWorkspace ws = CoupleWorkspace::build(u.grid, prm);
    const double ux = ws.x_norm_full(u.values, q);
    const KPoint& first = prof.points.front();
    // below the first sample: K(t) <= (t/t0) K(t0) since K(t)/t is nonincreasing
    prof.head_part = std::pow(first.k_value, q) * std::pow(first.t, -theta * q) /
                     ((1.0 - theta) * q);
    // above R/2 (or the last sampled point below it): K(t) <= ||u||_X
    const double t_tail = last_below ? last_below->t : first.t;
    prof.tail_part = std::pow(ux, q) * std::pow(t_tail, -theta * q) / (theta * q);
    prof.profile_integral = prof.head_part + prof.quadrature_part + prof.tail_part;
    return prof;
}

EmbeddingReport lemma_a1_check(const ScalarField& u, double beta, double q, const Region& ball,
                               const LemmaA1Settings& settings) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta out of (0,1)");
    InterpolationParams prm;
    prm.theta = beta;
    prm.q = q;
    prm.couple = CoupleKind::lq_w1q;
    prm.ball = ball;
    const std::vector<double> tg = default_t_grid(ball.radius);
    KProfile prof = interpolation_profile(u, prm, tg, settings.ksolve);

    const double lq_part = couple_x_norm(u, prm);
    const double sem = slobodeckii_seminorm(u, beta, q, ball, settings.pairs);
    const double rhs = std::pow(lq_part + sem, q);

    EmbeddingReport r;
    r.which = EmbeddingWhich::lemma_a1;
    r.lhs = prof.profile_integral;
    r.rhs = rhs;
    r.prefactor = 1.0;
    if (rhs > 0.0) {
        r.implied_constant = r.lhs / rhs;
    } else if (r.lhs == 0.0) {
        r.implied_constant = 0.0;
    } else {
        r.degenerate = true;
        r.implied_constant = std::numeric_limits<double>::infinity();
    }
    return r;
}

}  // namespace plap
