#include "plap/newton.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plap {

CellEnergyProblem::CellEnergyProblem(const GridSpec& grid, std::vector<std::int64_t> dof_nodes,
                                     std::vector<std::int64_t> cells,
                                     std::vector<double> pinned_full, std::vector<double> dof_load,
                                     GradientEnergyTerm term)
    : grid_(grid), dofs_(std::move(dof_nodes)), pinned_(std::move(pinned_full)),
      load_(std::move(dof_load)), term_(term) {
    if (!(term_.exponent > 1.0)) throw std::invalid_argument("energy exponent must exceed 1");
    if (pinned_.size() != static_cast<std::size_t>(grid_.node_count()))
        throw std::invalid_argument("pinned field size mismatch");
    if (load_.size() != dofs_.size()) throw std::invalid_argument("load size mismatch");

    ncorner_ = 1 << grid_.dim;
    const double avg = 1.0 / static_cast<double>(1 << (grid_.dim - 1));
    for (int k = 0; k < ncorner_; ++k)
        for (int d = 0; d < grid_.dim; ++d)
            wsign_[k][d] = ((k >> d) & 1 ? 1.0 : -1.0) * avg / grid_.spacing;

    std::vector<int> dof_of(static_cast<std::size_t>(grid_.node_count()), -1);
    for (std::size_t i = 0; i < dofs_.size(); ++i)
        dof_of[static_cast<std::size_t>(dofs_[i])] = static_cast<int>(i);

    cells_.reserve(cells.size());
    for (std::int64_t cl : cells) {
        CellRecord rec{};
        Index c = grid_.cell_unlinear(cl);
        for (int k = 0; k < ncorner_; ++k) {
            Index ix = c;
            for (int d = 0; d < grid_.dim; ++d)
                if ((k >> d) & 1) ix[d] += 1;
            rec.corner[k] = grid_.node_linear(ix);
            rec.dof[k] = dof_of[static_cast<std::size_t>(rec.corner[k])];
        }
        cells_.push_back(rec);
    }
}

void CellEnergyProblem::cell_gradient(const CellRecord& c, std::span<const double> full,
                                      double* g) const {
    for (int d = 0; d < grid_.dim; ++d) g[d] = 0.0;
    for (int k = 0; k < ncorner_; ++k) {
        const double v = full[static_cast<std::size_t>(c.corner[k])];
        if (v == 0.0) continue;
        for (int d = 0; d < grid_.dim; ++d) g[d] += wsign_[k][d] * v;
    }
}

std::vector<double> CellEnergyProblem::full_field(std::span<const double> x) const {
    std::vector<double> full = pinned_;
    for (std::size_t i = 0; i < dofs_.size(); ++i) full[static_cast<std::size_t>(dofs_[i])] = x[i];
    return full;
}

double CellEnergyProblem::gradient_term(std::span<const double> x) const {
    const std::vector<double> full = full_field(x);
    const double vol = grid_.cell_volume();
    const double m = term_.exponent;
    double acc = 0.0;
    double g[3];
    for (const auto& c : cells_) {
        cell_gradient(c, full, g);
        double g2 = term_.reg;
        for (int d = 0; d < grid_.dim; ++d) g2 += g[d] * g[d];
        acc += std::pow(g2, 0.5 * m);
    }
    return term_.coeff * acc * vol / m;
}

double CellEnergyProblem::gradient_lr_norm(std::span<const double> x, double r) const {
    const std::vector<double> full = full_field(x);
    const double vol = grid_.cell_volume();
    double acc = 0.0;
    double g[3];
    for (const auto& c : cells_) {
        cell_gradient(c, full, g);
        double g2 = 0.0;
        for (int d = 0; d < grid_.dim; ++d) g2 += g[d] * g[d];
        if (g2 > 0.0) acc += std::pow(g2, 0.5 * r);
    }
    return std::pow(acc * vol, 1.0 / r);
}

double CellEnergyProblem::energy(std::span<const double> x) const {
    double e = gradient_term(x);
    for (std::size_t i = 0; i < load_.size(); ++i) e -= load_[i] * x[i];
    return e;
}

void CellEnergyProblem::gradient(std::span<const double> x, std::span<double> out) const {
    const std::vector<double> full = full_field(x);
    std::fill(out.begin(), out.end(), 0.0);
    const double vol = grid_.cell_volume();
    const double m = term_.exponent;
    double g[3];
    for (const auto& c : cells_) {
        cell_gradient(c, full, g);
        double g2 = term_.reg;
        for (int d = 0; d < grid_.dim; ++d) g2 += g[d] * g[d];
        if (g2 <= 0.0) continue;  // the cell term is stationary at z = 0
        const double s = term_.coeff * std::pow(g2, 0.5 * m - 1.0) * vol;
        if (s == 0.0) continue;
        for (int k = 0; k < ncorner_; ++k) {
            if (c.dof[k] < 0) continue;
            double dot = 0.0;
            for (int d = 0; d < grid_.dim; ++d) dot += wsign_[k][d] * g[d];
            out[static_cast<std::size_t>(c.dof[k])] += s * dot;
        }
    }
    for (std::size_t i = 0; i < load_.size(); ++i) out[i] -= load_[i];
}

void CellEnergyProblem::hessian_diag(std::span<const double> x, std::span<double> diag) const {
    const std::vector<double> full = full_field(x);
    std::fill(diag.begin(), diag.end(), 0.0);
    const double vol = grid_.cell_volume();
    const double m = term_.exponent;
    double g[3];
    for (const auto& c : cells_) {
        cell_gradient(c, full, g);
        double g2 = term_.reg;
        for (int d = 0; d < grid_.dim; ++d) g2 += g[d] * g[d];
        if (g2 <= 0.0) continue;
        const double s1 = term_.coeff * std::pow(g2, 0.5 * m - 1.0) * vol;
        const double s2 = term_.coeff * (m - 2.0) * std::pow(g2, 0.5 * m - 2.0) * vol;
        for (int k = 0; k < ncorner_; ++k) {
            if (c.dof[k] < 0) continue;
            double w2 = 0.0, wg = 0.0;
            for (int d = 0; d < grid_.dim; ++d) {
                w2 += wsign_[k][d] * wsign_[k][d];
                wg += wsign_[k][d] * g[d];
            }
            diag[static_cast<std::size_t>(c.dof[k])] += s1 * w2 + s2 * wg * wg;
        }
    }
}

void CellEnergyProblem::hessian_vec(std::span<const double> x, std::span<const double> v,
                                    std::span<double> y) const {
    const std::vector<double> full = full_field(x);
    std::vector<double> vfull(full.size(), 0.0);
    for (std::size_t i = 0; i < dofs_.size(); ++i) vfull[static_cast<std::size_t>(dofs_[i])] = v[i];
    std::fill(y.begin(), y.end(), 0.0);
    const double vol = grid_.cell_volume();
    const double m = term_.exponent;
    double g[3], gv[3];
    for (const auto& c : cells_) {
        cell_gradient(c, full, g);
        cell_gradient(c, vfull, gv);
        double g2 = term_.reg;
        double gdotgv = 0.0;
        for (int d = 0; d < grid_.dim; ++d) {
            g2 += g[d] * g[d];
            gdotgv += g[d] * gv[d];
        }
        if (g2 <= 0.0) continue;
        const double s1 = term_.coeff * std::pow(g2, 0.5 * m - 1.0) * vol;
        const double s2 = term_.coeff * (m - 2.0) * std::pow(g2, 0.5 * m - 2.0) * vol;
        double hz[3];
        for (int d = 0; d < grid_.dim; ++d) hz[d] = s1 * gv[d] + s2 * gdotgv * g[d];
        for (int k = 0; k < ncorner_; ++k) {
            if (c.dof[k] < 0) continue;
            double dot = 0.0;
            for (int d = 0; d < grid_.dim; ++d) dot += wsign_[k][d] * hz[d];
            y[static_cast<std::size_t>(c.dof[k])] += dot;
        }
    }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

}  // namespace

NewtonOutcome CellEnergyProblem::minimize(std::vector<double>& x,
                                          const NewtonSettings& settings) const {
    const std::size_t n = dofs_.size();
    NewtonOutcome out;
    if (n == 0) {
        out.converged = true;
        out.energy = energy(x);
        return out;
    }
    const double inv_vol = 1.0 / grid_.cell_volume();

    std::vector<double> g(n), diag(n), dir(n), r(n), z(n), p(n), hp(n), trial(n);
    double e = energy(x);
    out.energy_trace.push_back(e);
    double rn0 = 0.0;
    int stagnant = 0;

    for (int iter = 0; iter <= settings.max_iter; ++iter) {
        gradient(x, g);
        out.residual_norm = max_abs(g) * inv_vol;
        out.iterations = iter;
        if (iter == 0) rn0 = out.residual_norm;
        if (out.residual_norm <= settings.tol || !std::isfinite(out.residual_norm)) {
            out.converged = out.residual_norm <= settings.tol;
            break;
        }
        if (iter == settings.max_iter) break;
        // inexact Newton forcing: loose systems far from the solution
        const double forcing =
            rn0 > 0.0 ? std::clamp(0.1 * out.residual_norm / rn0, settings.cg_tol, 1e-2)
                      : settings.cg_tol;

        // Newton direction by Jacobi-preconditioned CG on H dir = -g
        hessian_diag(x, diag);
        bool bad_diag = false;
        for (double dv : diag)
            if (!(dv > 0.0) || !std::isfinite(dv)) bad_diag = true;
        std::fill(dir.begin(), dir.end(), 0.0);
        bool cg_ok = !bad_diag;
        if (cg_ok) {
            for (std::size_t i = 0; i < n; ++i) r[i] = -g[i];
            for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
            p = z;
            double rz = dot(r, z);
            const double r0 = std::sqrt(dot(r, r));
            const double cg_stop = std::max(forcing * r0, 1e-300);
            int k = 0;
            for (; k < settings.cg_max_iter; ++k) {
                if (std::sqrt(dot(r, r)) <= cg_stop) break;
                hessian_vec(x, p, hp);
                const double php = dot(p, hp);
                if (!(php > 0.0) || !std::isfinite(php)) {
                    cg_ok = dot(dir, dir) > 0.0;  // keep partial direction if any
                    break;
                }
                const double alpha = rz / php;
                for (std::size_t i = 0; i < n; ++i) {
                    dir[i] += alpha * p[i];
                    r[i] -= alpha * hp[i];
                }
                for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
                const double rz_new = dot(r, z);
                const double beta = rz_new / rz;
                rz = rz_new;
                for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
            }
            if (cg_ok && dot(dir, dir) == 0.0) cg_ok = false;
        }
        if (!cg_ok) {
            // gradient fallback, scaled by the diagonal where usable
            out.gradient_fallback = true;
            for (std::size_t i = 0; i < n; ++i) {
                const double dv = (i < diag.size() && diag[i] > 0.0 && std::isfinite(diag[i]))
                                      ? diag[i]
                                      : 1.0;
                dir[i] = -g[i] / dv;
            }
        }

        const double slope = dot(g, dir);
        if (!(slope < 0.0)) {
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
        }
        double step = 1.0;
        const double gd = dot(g, dir);
        bool accepted = false;
        const double e_before = e;
        for (int b = 0; b < settings.max_backtracks; ++b) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * dir[i];
            const double et = energy(trial);
            if (std::isfinite(et) && et <= e + settings.armijo * step * gd) {
                x = trial;
                e = et;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        out.energy_trace.push_back(e);
        if (!accepted) break;  // no descent available: stop at the best point found
        // energy no longer resolvable in double precision
        stagnant = e == e_before ? stagnant + 1 : 0;
        if (stagnant >= 3) break;
    }
    out.energy = e;
    return out;
}

std::vector<std::int64_t> cells_touching_dofs(const GridSpec& grid,
                                              const std::vector<std::int64_t>& dof_nodes) {
    std::vector<char> is_dof(static_cast<std::size_t>(grid.node_count()), 0);
    for (std::int64_t n : dof_nodes) is_dof[static_cast<std::size_t>(n)] = 1;
    std::vector<std::int64_t> out;
    const std::int64_t nc = grid.cell_count();
    const int ncorner = 1 << grid.dim;
    for (std::int64_t cl = 0; cl < nc; ++cl) {
        Index c = grid.cell_unlinear(cl);
        bool touch = false;
        for (int k = 0; k < ncorner && !touch; ++k) {
            Index ix = c;
            for (int d = 0; d < grid.dim; ++d)
                if ((k >> d) & 1) ix[d] += 1;
            touch = is_dof[static_cast<std::size_t>(grid.node_linear(ix))] != 0;
        }
        if (touch) out.push_back(cl);
    }
    return out;
}

std::vector<std::int64_t> interior_nodes(const GridSpec& grid, const Region& region) {
    std::vector<std::int64_t> out;
    const std::int64_t n = grid.node_count();
    for (std::int64_t lin = 0; lin < n; ++lin)
        if (region.interior_contains(grid.node_point(grid.node_unlinear(lin)), grid.dim))
            out.push_back(lin);
    return out;
}

}  // namespace plap
