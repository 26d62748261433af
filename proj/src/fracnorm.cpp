#include "plap/fracnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plap/parallel.hpp"

namespace plap {

double LatticeShift::magnitude(const GridSpec& g) const {
    double s = 0.0;
    for (int d = 0; d < g.dim; ++d) s += static_cast<double>(offset[d]) * offset[d];
    return std::sqrt(s) * g.spacing;
}

void validate_seminorm_params(const SeminormParams& prm) {
    if (!(prm.q >= 1.0)) throw std::invalid_argument("q out of [1,inf)");
    switch (prm.family) {
        case SeminormFamily::nikolskii:
            if (!(prm.beta > 0.0 && prm.beta <= 1.0))
                throw std::invalid_argument("beta out of (0,1] for the nikolskii family");
            break;
        case SeminormFamily::besov:
            if (!(prm.beta > 0.0 && prm.beta < 2.0))
                throw std::invalid_argument("beta out of (0,2) for the besov family");
            break;
        case SeminormFamily::slobodeckii:
            if (!(prm.beta > 0.0 && prm.beta < 1.0))
                throw std::invalid_argument("beta out of (0,1)");
            break;
    }
}

std::vector<LatticeShift> dyadic_shift_ladder(const GridSpec& g, double max_magnitude) {
    std::vector<Index> dirs;
    if (g.dim == 1) {
        dirs = {{1, 0, 0}};
    } else if (g.dim == 2) {
        dirs = {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}};
    } else {
        dirs = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, -1, 0}, {1, 0, 1},
                {1, 0, -1}, {0, 1, 1}, {0, 1, -1}, {1, 1, 1}, {1, 1, -1}, {1, -1, 1},
                {1, -1, -1}};
    }
    std::vector<LatticeShift> out;
    for (const auto& dir : dirs) {
        for (int k = 0;; ++k) {
            LatticeShift s;
            for (int d = 0; d < 3; ++d) s.offset[d] = dir[d] * (1 << k);
            if (s.magnitude(g) > max_magnitude) break;
            out.push_back(s);
        }
    }
    if (out.empty()) throw std::invalid_argument("shift ladder is empty: cap below grid spacing");
    return out;
}

namespace {

bool zero_shift(const LatticeShift& s) {
    return s.offset[0] == 0 && s.offset[1] == 0 && s.offset[2] == 0;
}

double difference_at(const ScalarField& u, const Index& ix, const LatticeShift& s, int order) {
    Index i1 = ix, i2 = ix;
    for (int d = 0; d < u.grid.dim; ++d) {
        i1[d] += s.offset[d];
        i2[d] += 2 * s.offset[d];
    }
    if (order == 1) return u.at(i1) - u.at(ix);
    return u.at(i2) + u.at(ix) - 2.0 * u.at(i1);
}

}  // namespace

ScalarField finite_difference(const ScalarField& u, const LatticeShift& h, int order) {
    if (u.centering != Centering::node)
        throw std::invalid_argument("finite differences act on node-centered fields");
    if (zero_shift(h)) throw std::invalid_argument("shift offset must be nonzero");
    if (order != 1 && order != 2) throw std::invalid_argument("difference order must be 1 or 2");
    ScalarField out = make_field(u.grid, covered_box(u.grid), Centering::node);
    const std::int64_t n = u.grid.node_count();
    parallel_for(0, n, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t lin = lo; lin < hi; ++lin)
            out.values[static_cast<std::size_t>(lin)] =
                difference_at(u, u.grid.node_unlinear(lin), h, order);
    });
    return out;
}

double shifted_lq_power(const ScalarField& u, const LatticeShift& s, int order, double q) {
    if (zero_shift(s)) throw std::invalid_argument("shift offset must be nonzero");
    const GridSpec& g = u.grid;
    // window grown so that x + order*offset sweeps the whole grid
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int d = 0; d < g.dim; ++d) {
        const int reach = order * std::abs(s.offset[d]);
        lo[d] = -reach;
        hi[d] = g.nodes_per_axis - 1 + reach;
    }
    std::int64_t ext[3] = {1, 1, 1};
    std::int64_t total = 1;
    for (int d = 0; d < g.dim; ++d) {
        ext[d] = hi[d] - lo[d] + 1;
        total *= ext[d];
    }
    const double vol = g.cell_volume();
    double sum = parallel_reduce(
        0, total, 0.0,
        [&](std::int64_t b0, std::int64_t b1) {
            double acc = 0.0;
            for (std::int64_t t = b0; t < b1; ++t) {
                std::int64_t rest = t;
                Index ix{0, 0, 0};
                for (int d = g.dim - 1; d >= 0; --d) {
                    ix[d] = static_cast<int>(rest % ext[d]) + lo[d];
                    rest /= ext[d];
                }
                const double dv = difference_at(u, ix, s, order);
                if (dv != 0.0) acc += std::pow(std::abs(dv), q);
            }
            return acc;
        },
        [](double a, double b) { return a + b; });
    return sum * vol;
}

namespace {

double sup_type_seminorm(const ScalarField& u, const SeminormParams& prm, int order) {
    if (prm.shifts.empty()) throw std::invalid_argument("shift set must be nonempty");
    double best = 0.0;
    for (const auto& s : prm.shifts) {
        const double norm = std::pow(shifted_lq_power(u, s, order, prm.q), 1.0 / prm.q);
        const double ratio = norm / std::pow(s.magnitude(u.grid), prm.beta);
        best = std::max(best, ratio);
    }
    return best;
}

}  // namespace

double nikolskii_seminorm(const ScalarField& u, const SeminormParams& prm) {
    if (prm.family != SeminormFamily::nikolskii)
        throw std::invalid_argument("params do not select the nikolskii family");
    validate_seminorm_params(prm);
    return sup_type_seminorm(u, prm, 1);
}

double besov_seminorm(const ScalarField& u, const SeminormParams& prm) {
    if (prm.family != SeminormFamily::besov)
        throw std::invalid_argument("params do not select the besov family");
    validate_seminorm_params(prm);
    return sup_type_seminorm(u, prm, 2);
}

namespace {

struct PairCell {
    Point x;
    double v[3];
};

std::vector<PairCell> collect_cells(std::span<const ScalarField> comps, const Region& region) {
    const ScalarField& u0 = comps[0];
    const GridSpec& g = u0.grid;
    std::vector<PairCell> cells;
    const std::int64_t n = g.cell_count();
    for (std::int64_t lin = 0; lin < n; ++lin) {
        Index c = g.cell_unlinear(lin);
        Point x = g.cell_point(c);
        if (!region.contains(x, g.dim)) continue;
        PairCell pc;
        pc.x = x;
        for (std::size_t k = 0; k < comps.size(); ++k) {
            const ScalarField& u = comps[k];
            pc.v[k] = u.centering == Centering::cell
                          ? u.values[static_cast<std::size_t>(lin)]
                          : [&] {
                                double s = 0.0;
                                const int nc = 1 << g.dim;
                                for (int m = 0; m < nc; ++m) {
                                    Index ix = c;
                                    for (int d = 0; d < g.dim; ++d)
                                        if (m & (1 << d)) ix[d] += 1;
                                    s += u.at(ix);
                                }
                                return s / static_cast<double>(nc);
                            }();
        }
        cells.push_back(pc);
    }
    return cells;
}

double pair_sum(std::span<const ScalarField> comps, double beta, double q, const Region& region,
                const PairSumSettings& settings) {
    if (comps.empty() || comps.size() > 3) throw std::invalid_argument("1 to 3 components expected");
    const GridSpec& g = comps[0].grid;
    for (const auto& c : comps)
        if (!(c.grid == g)) throw std::invalid_argument("components must share a grid");
    if (!region.inside(covered_box(g), g.dim))
        throw std::invalid_argument("integration region escapes the grid box");

    const std::vector<PairCell> cells = collect_cells(comps, region);
    const std::int64_t m = static_cast<std::int64_t>(cells.size());
    const std::int64_t pairs = m * (m - 1) / 2;
    if (pairs > settings.pair_budget)
        throw std::runtime_error("pair budget exceeded: " + std::to_string(pairs) +
                                 " kernel evaluations requested, budget is " +
                                 std::to_string(settings.pair_budget));
    const int dim = g.dim;
    const int ncomp = static_cast<int>(comps.size());
    const double expo = -0.5 * (dim + beta * q);  // applied to squared distance
    const double vol2 = g.cell_volume() * g.cell_volume();

    // iterate rows; each row i pairs with all j > i
    double sum = parallel_reduce(
        0, m, 0.0,
        [&](std::int64_t lo, std::int64_t hi) {
            double acc = 0.0;
            for (std::int64_t i = lo; i < hi; ++i) {
                const PairCell& a = cells[static_cast<std::size_t>(i)];
                for (std::int64_t j = i + 1; j < m; ++j) {
                    const PairCell& b = cells[static_cast<std::size_t>(j)];
                    double d2 = 0.0;
                    for (int d = 0; d < dim; ++d) {
                        const double dd = a.x[d] - b.x[d];
                        d2 += dd * dd;
                    }
                    double dv2 = 0.0;
                    for (int k = 0; k < ncomp; ++k) {
                        const double dv = a.v[k] - b.v[k];
                        dv2 += dv * dv;
                    }
                    if (dv2 == 0.0) continue;
                    acc += std::pow(dv2, 0.5 * q) * std::pow(d2, expo);
                }
            }
            return acc;
        },
        [](double a, double b) { return a + b; }, 64);
    return 2.0 * sum * vol2;  // both orderings of each pair
}

}  // namespace

std::int64_t slobodeckii_pair_count(const ScalarField& u, const Region& region) {
    const GridSpec& g = u.grid;
    std::int64_t m = 0;
    const std::int64_t n = g.cell_count();
    for (std::int64_t lin = 0; lin < n; ++lin)
        if (region.contains(g.cell_point(g.cell_unlinear(lin)), g.dim)) ++m;
    return m * (m - 1) / 2;
}

double slobodeckii_seminorm(const ScalarField& u, double beta, double q, const Region& region,
                            const PairSumSettings& settings) {
    SeminormParams prm;
    prm.family = SeminormFamily::slobodeckii;
    prm.beta = beta;
    prm.q = q;
    return slobodeckii_seminorm(u, prm, region, settings);
}

double slobodeckii_seminorm(const ScalarField& u, const SeminormParams& prm, const Region& region,
                            const PairSumSettings& settings) {
    if (prm.family != SeminormFamily::slobodeckii)
        throw std::invalid_argument("params do not select the slobodeckii family");
    validate_seminorm_params(prm);
    return std::pow(pair_sum(std::span<const ScalarField>(&u, 1), prm.beta, prm.q, region, settings),
                    1.0 / prm.q);
}

double slobodeckii_seminorm_vector(std::span<const ScalarField> comps, double beta, double q,
                                   const Region& region, const PairSumSettings& settings) {
    SeminormParams prm;
    prm.family = SeminormFamily::slobodeckii;
    prm.beta = beta;
    prm.q = q;
    validate_seminorm_params(prm);
    return std::pow(pair_sum(comps, beta, q, region, settings), 1.0 / q);
}

namespace {

EmbeddingReport assemble(EmbeddingWhich which, double lhs, double rhs, double prefactor) {
    EmbeddingReport r;
    r.which = which;
    r.lhs = lhs;
    r.rhs = rhs;
    r.prefactor = prefactor;
    if (rhs > 0.0) {
        r.implied_constant = lhs / rhs;
    } else if (lhs == 0.0) {
        r.implied_constant = 0.0;
    } else {
        r.implied_constant = std::numeric_limits<double>::infinity();
        r.degenerate = true;
    }
    return r;
}

}  // namespace

EmbeddingReport check_embedding(const ScalarField& u, EmbeddingWhich which, double alpha,
                                double beta, double q, const EmbeddingOptions& opts) {
    const GridSpec& g = u.grid;
    const double cap = opts.shift_cap > 0.0 ? opts.shift_cap : g.covered_half_width();
    const Region box = covered_box(g);
    const auto ladder = dyadic_shift_ladder(g, cap);
    auto sup_params = [&](SeminormFamily fam, double b) {
        SeminormParams prm;
        prm.family = fam;
        prm.beta = b;
        prm.q = q;
        prm.shifts = ladder;
        return prm;
    };

    switch (which) {
        case EmbeddingWhich::prop22: {
            if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta out of (0,1)");
            const double lhs = nikolskii_seminorm(u, sup_params(SeminormFamily::nikolskii, beta));
            const double rhs = besov_seminorm(u, sup_params(SeminormFamily::besov, beta));
            return assemble(which, lhs, rhs, 1.0 / (1.0 - beta));
        }
        case EmbeddingWhich::prop23: {
            if (!(alpha > 0.0 && alpha < beta && beta < 1.0))
                throw std::invalid_argument("prop23 requires 0 < alpha < beta < 1");
            const double lhs =
                std::pow(slobodeckii_seminorm(u, alpha, q, box, opts.pairs), q);
            const double nik = nikolskii_seminorm(u, sup_params(SeminormFamily::nikolskii, beta));
            const double lq = integrate(u, box, q);
            const double rhs = std::pow(std::pow(nik, q), alpha / beta) *
                               std::pow(lq, (beta - alpha) / beta);
            return assemble(which, lhs, rhs, beta / ((beta - alpha) * alpha));
        }
        case EmbeddingWhich::prop24a: {
            if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta out of (0,1)");
            const VectorField grad = gradient(u);
            const double lhs = integrate_magnitude(grad, box, q);
            const double bes =
                besov_seminorm(u, sup_params(SeminormFamily::besov, 1.0 + beta));
            const double lq = integrate(u, box, q);
            const double rhs = std::pow(lq, beta / (beta + 1.0)) *
                               std::pow(std::pow(bes, q), 1.0 / (beta + 1.0));
            return assemble(which, lhs, rhs,
                            std::pow(beta, -(beta + q) / (beta + 1.0)));
        }
        case EmbeddingWhich::prop24b: {
            if (!(alpha > 0.0 && alpha < beta && beta < 1.0))
                throw std::invalid_argument("prop24b requires 0 < alpha < beta < 1");
            const VectorField grad = gradient(u);
            const double lhs = std::pow(
                slobodeckii_seminorm_vector(std::span<const ScalarField>(grad.comp.data(),
                                                                         static_cast<std::size_t>(grad.dim)),
                                            alpha, q, box, opts.pairs),
                q);
            const double bes =
                besov_seminorm(u, sup_params(SeminormFamily::besov, 1.0 + beta));
            const double lq = integrate(u, box, q);
            const double rhs = std::pow(std::pow(bes, q), (alpha + 1.0) / (beta + 1.0)) *
                               std::pow(lq, (beta - alpha) / (beta + 1.0));
            return assemble(which, lhs, rhs, 1.0);
        }
        case EmbeddingWhich::lemma_a1:
            throw std::invalid_argument("lemma_a1 reports are produced by lemma_a1_check");
    }
    throw std::logic_error("unreachable");
}

}  // namespace plap
