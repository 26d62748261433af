#include "plap/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "plap/parallel.hpp"

namespace plap {

namespace {

double dist(const Point& a, const Point& b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
}

double unit_ball_volume(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: throw std::invalid_argument("dimension must be 1, 2 or 3");
    }
}

}  // namespace

std::int64_t GridSpec::node_count() const {
    std::int64_t n = 1;
    for (int d = 0; d < dim; ++d) n *= nodes_per_axis;
    return n;
}

std::int64_t GridSpec::cell_count() const {
    std::int64_t n = 1;
    for (int d = 0; d < dim; ++d) n *= cells_per_axis();
    return n;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= spacing;
    return v;
}

Point GridSpec::node_point(const Index& ix) const {
    Point p{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) p[d] = node_coord(ix[d]);
    return p;
}

Point GridSpec::cell_point(const Index& ix) const {
    Point p{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) p[d] = cell_coord(ix[d]);
    return p;
}

bool GridSpec::node_in_range(const Index& ix) const {
    for (int d = 0; d < dim; ++d)
        if (ix[d] < 0 || ix[d] >= nodes_per_axis) return false;
    return true;
}

bool GridSpec::cell_in_range(const Index& ix) const {
    for (int d = 0; d < dim; ++d)
        if (ix[d] < 0 || ix[d] >= cells_per_axis()) return false;
    return true;
}

std::int64_t GridSpec::node_linear(const Index& ix) const {
    std::int64_t lin = 0;
    for (int d = 0; d < dim; ++d) lin = lin * nodes_per_axis + ix[d];
    return lin;
}

std::int64_t GridSpec::cell_linear(const Index& ix) const {
    std::int64_t lin = 0;
    for (int d = 0; d < dim; ++d) lin = lin * cells_per_axis() + ix[d];
    return lin;
}

Index GridSpec::node_unlinear(std::int64_t lin) const {
    Index ix{0, 0, 0};
    for (int d = dim - 1; d >= 0; --d) {
        ix[d] = static_cast<int>(lin % nodes_per_axis);
        lin /= nodes_per_axis;
    }
    return ix;
}

Index GridSpec::cell_unlinear(std::int64_t lin) const {
    Index ix{0, 0, 0};
    for (int d = dim - 1; d >= 0; --d) {
        ix[d] = static_cast<int>(lin % cells_per_axis());
        lin /= cells_per_axis();
    }
    return ix;
}

GridSpec build_grid(int dim, double half_width, double spacing, std::int64_t node_budget) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
    if (!(spacing < half_width)) throw std::invalid_argument("spacing must be smaller than half_width");
    const double m = std::floor(half_width / spacing);
    const double npa = 2.0 * m + 1.0;
    double total = 1.0;
    for (int d = 0; d < dim; ++d) total *= npa;
    if (total > static_cast<double>(node_budget))
        throw std::invalid_argument("node budget exceeded: grid would need " +
                                    std::to_string(total) + " nodes, budget is " +
                                    std::to_string(node_budget));
    GridSpec g;
    g.dim = dim;
    g.half_width = half_width;
    g.spacing = spacing;
    g.nodes_per_axis = static_cast<int>(npa);
    return g;
}

Region Region::ball(double R, const Point& c) {
    if (!(R > 0.0)) throw std::invalid_argument("ball radius must be positive");
    Region r;
    r.kind = Kind::ball;
    r.center = c;
    r.radius = R;
    return r;
}

Region Region::annulus(double inner, double outer, const Point& c) {
    if (!(outer > 0.0) || !(inner > 0.0) || !(inner < outer))
        throw std::invalid_argument("annulus requires 0 < inner < outer");
    Region r;
    r.kind = Kind::annulus;
    r.center = c;
    r.radius = outer;
    r.inner_radius = inner;
    return r;
}

Region Region::box(double half_width, const Point& c) {
    if (!(half_width > 0.0)) throw std::invalid_argument("box half-width must be positive");
    Region r;
    r.kind = Kind::box;
    r.center = c;
    r.radius = half_width;
    return r;
}

bool Region::contains(const Point& x, int dim) const {
    switch (kind) {
        case Kind::ball: return dist(x, center, dim) <= radius;
        case Kind::annulus: {
            double d = dist(x, center, dim);
            return d > inner_radius && d <= radius;
        }
        case Kind::box:
            for (int d = 0; d < dim; ++d)
                if (std::abs(x[d] - center[d]) > radius) return false;
            return true;
    }
    return false;
}

bool Region::interior_contains(const Point& x, int dim) const {
    switch (kind) {
        case Kind::ball: return dist(x, center, dim) < radius;
        case Kind::annulus: {
            double d = dist(x, center, dim);
            return d > inner_radius && d < radius;
        }
        case Kind::box:
            for (int d = 0; d < dim; ++d)
                if (std::abs(x[d] - center[d]) >= radius) return false;
            return true;
    }
    return false;
}

bool Region::inside(const Region& other, int dim) const {
    // compare bounding boxes; sufficient for the mask geometry used here
    for (int d = 0; d < dim; ++d) {
        double lo = center[d] - radius, hi = center[d] + radius;
        double olo = other.center[d] - other.radius, ohi = other.center[d] + other.radius;
        if (lo < olo - 1e-12 || hi > ohi + 1e-12) return false;
    }
    return true;
}

Region Region::grown(double delta) const {
    Region r = *this;
    r.radius += delta;
    if (kind == Kind::annulus) {
        r.inner_radius = inner_radius - delta;
        if (r.inner_radius <= 0.0) {
            r.kind = Kind::ball;
            r.inner_radius = 0.0;
        }
    }
    return r;
}

double Region::nominal_volume(int dim) const {
    const double w = unit_ball_volume(dim);
    switch (kind) {
        case Kind::ball: return w * std::pow(radius, dim);
        case Kind::annulus: return w * (std::pow(radius, dim) - std::pow(inner_radius, dim));
        case Kind::box: return std::pow(2.0 * radius, dim);
    }
    return 0.0;
}

std::string Region::describe() const {
    switch (kind) {
        case Kind::ball: return "ball(R=" + std::to_string(radius) + ")";
        case Kind::annulus:
            return "annulus(" + std::to_string(inner_radius) + "," + std::to_string(radius) + ")";
        case Kind::box: return "box(w=" + std::to_string(radius) + ")";
    }
    return "";
}

Region covered_box(const GridSpec& grid) { return Region::box(grid.covered_half_width()); }

double ScalarField::at(const Index& ix) const {
    const bool in = centering == Centering::node ? grid.node_in_range(ix) : grid.cell_in_range(ix);
    if (!in) return 0.0;
    const std::int64_t lin =
        centering == Centering::node ? grid.node_linear(ix) : grid.cell_linear(ix);
    return values[static_cast<std::size_t>(lin)];
}

double& ScalarField::ref(const Index& ix) {
    const std::int64_t lin =
        centering == Centering::node ? grid.node_linear(ix) : grid.cell_linear(ix);
    return values[static_cast<std::size_t>(lin)];
}

Point ScalarField::point_of(std::int64_t lin) const {
    return centering == Centering::node ? grid.node_point(grid.node_unlinear(lin))
                                        : grid.cell_point(grid.cell_unlinear(lin));
}

double ScalarField::coord_point_value(const Point& x) const {
    if (centering != Centering::node)
        throw std::logic_error("interpolation requires a node-centered field");
    const int M = (grid.nodes_per_axis - 1) / 2;
    Index base{0, 0, 0};
    double w[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < grid.dim; ++d) {
        double s = x[d] / grid.spacing + M;
        double fl = std::floor(s);
        base[d] = static_cast<int>(fl);
        w[d] = s - fl;
    }
    double acc = 0.0;
    const int corners = 1 << grid.dim;
    for (int k = 0; k < corners; ++k) {
        Index ix = base;
        double wk = 1.0;
        for (int d = 0; d < grid.dim; ++d) {
            if (k & (1 << d)) {
                ix[d] += 1;
                wk *= w[d];
            } else {
                wk *= 1.0 - w[d];
            }
        }
        if (wk != 0.0) acc += wk * at(ix);
    }
    return acc;
}

bool ScalarField::finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

ScalarField make_field(const GridSpec& grid, const Region& support, Centering centering) {
    ScalarField f;
    f.grid = grid;
    f.centering = centering;
    f.support = support;
    f.values.assign(static_cast<std::size_t>(centering == Centering::node ? grid.node_count()
                                                                          : grid.cell_count()),
                    0.0);
    return f;
}

ScalarField VectorField::magnitude() const {
    ScalarField m = make_field(grid, comp[0].support, Centering::cell);
    const std::int64_t n = m.size();
    for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
            double v = comp[d].values[static_cast<std::size_t>(i)];
            s += v * v;
        }
        m.values[static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    return m;
}

FieldSpec constant_spec(double c) {
    FieldSpec s;
    s.eval = [c](const Point&, int) { return c; };
    return s;
}

FieldSpec affine_spec(const Point& slope, double offset) {
    FieldSpec s;
    s.eval = [slope, offset](const Point& x, int dim) {
        double v = offset;
        for (int d = 0; d < dim; ++d) v += slope[d] * x[d];
        return v;
    };
    return s;
}

FieldSpec radial_power_spec(double alpha, const Point& c) {
    FieldSpec s;
    s.eval = [alpha, c](const Point& x, int dim) { return std::pow(dist(x, c, dim), -alpha); };
    s.policy = SingularityPolicy::clip_first_shell;
    return s;
}

FieldSpec hat_spec(double R, const Point& c) {
    FieldSpec s;
    s.eval = [R, c](const Point& x, int dim) {
        return std::max(0.0, 1.0 - dist(x, c, dim) / R);
    };
    return s;
}

FieldSpec bump_spec(double R, const Point& c) {
    FieldSpec s;
    s.eval = [R, c](const Point& x, int dim) {
        double t = dist(x, c, dim) / R;
        if (t >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - t * t));
    };
    return s;
}

FieldSpec gaussian_spec(double sigma, const Point& c) {
    FieldSpec s;
    s.eval = [sigma, c](const Point& x, int dim) {
        double r = dist(x, c, dim);
        return std::exp(-0.5 * r * r / (sigma * sigma));
    };
    return s;
}

ScalarField sample_field(const GridSpec& grid, const FieldSpec& spec, const Region& support,
                         Centering centering) {
    ScalarField f = make_field(grid, support, centering);
    const std::int64_t n = f.size();
    for (std::int64_t lin = 0; lin < n; ++lin) {
        Point x = f.point_of(lin);
        if (!support.contains(x, grid.dim)) continue;
        double v = spec.eval(x, grid.dim);
        if (!std::isfinite(v)) {
            if (spec.policy == SingularityPolicy::clip_first_shell) {
                Point shifted = x;
                shifted[0] += grid.spacing;
                v = spec.eval(shifted, grid.dim);
            }
            if (!std::isfinite(v))
                throw std::invalid_argument(
                    "field spec evaluates to a non-finite value and no singularity policy applies");
        }
        f.values[static_cast<std::size_t>(lin)] = v;
    }
    return f;
}

VectorField gradient(const ScalarField& u) {
    if (u.centering != Centering::node)
        throw std::invalid_argument("gradient expects a node-centered field");
    if (u.grid.nodes_per_axis < 2) throw std::invalid_argument("grid needs at least 2 nodes per axis");
    VectorField g;
    g.grid = u.grid;
    g.dim = u.grid.dim;
    Region gsupport = u.support.grown(2.0 * u.grid.spacing);
    for (int d = 0; d < g.dim; ++d) g.comp[d] = make_field(u.grid, gsupport, Centering::cell);

    const GridSpec& gr = u.grid;
    const int dim = gr.dim;
    const double inv_h = 1.0 / gr.spacing;
    const std::int64_t ncells = gr.cell_count();
    const double avg = 1.0 / static_cast<double>(1 << (dim - 1));

    parallel_for(0, ncells, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t lin = lo; lin < hi; ++lin) {
            Index c = gr.cell_unlinear(lin);
            // corner values of the cell
            double corner[8];
            const int ncorner = 1 << dim;
            for (int k = 0; k < ncorner; ++k) {
                Index ix = c;
                for (int d = 0; d < dim; ++d)
                    if (k & (1 << d)) ix[d] += 1;
                corner[k] = u.at(ix);
            }
            for (int d = 0; d < dim; ++d) {
                double s = 0.0;
                for (int k = 0; k < ncorner; ++k) {
                    if (k & (1 << d)) continue;  // pair (k, k | bit_d)
                    s += corner[k | (1 << d)] - corner[k];
                }
                g.comp[d].values[static_cast<std::size_t>(lin)] = s * inv_h * avg;
            }
        }
    });
    return g;
}

namespace {

void check_region_in_box(const Region& region, const GridSpec& grid) {
    if (!region.inside(covered_box(grid), grid.dim))
        throw std::invalid_argument("integration region escapes the grid box");
}

double cell_center_value(const ScalarField& u, const Index& c) {
    if (u.centering == Centering::cell) return u.at(c);
    const int dim = u.grid.dim;
    double s = 0.0;
    const int ncorner = 1 << dim;
    for (int k = 0; k < ncorner; ++k) {
        Index ix = c;
        for (int d = 0; d < dim; ++d)
            if (k & (1 << d)) ix[d] += 1;
        s += u.at(ix);
    }
    return s / static_cast<double>(ncorner);
}

}  // namespace

IntegralDetail integrate_detail(const ScalarField& u, const Region& region, double power) {
    if (!(power >= 1.0)) throw std::invalid_argument("integration power must be >= 1");
    check_region_in_box(region, u.grid);
    const GridSpec& gr = u.grid;
    const double vol = gr.cell_volume();
    struct Acc {
        double value = 0.0;
        std::int64_t count = 0;
    };
    Acc total = parallel_reduce(
        0, gr.cell_count(), Acc{},
        [&](std::int64_t lo, std::int64_t hi) {
            Acc a;
            for (std::int64_t lin = lo; lin < hi; ++lin) {
                Index c = gr.cell_unlinear(lin);
                Point x = gr.cell_point(c);
                if (!region.contains(x, gr.dim)) continue;
                a.value += std::pow(std::abs(cell_center_value(u, c)), power);
                a.count += 1;
            }
            return a;
        },
        [](Acc a, Acc b) {
            a.value += b.value;
            a.count += b.count;
            return a;
        });
    return IntegralDetail{total.value * vol, static_cast<double>(total.count) * vol, total.count};
}

double integrate(const ScalarField& u, const Region& region, double power) {
    return integrate_detail(u, region, power).value;
}

IntegralDetail integrate_magnitude_detail(const VectorField& v, const Region& region, double power) {
    if (!(power >= 1.0)) throw std::invalid_argument("integration power must be >= 1");
    check_region_in_box(region, v.grid);
    const GridSpec& gr = v.grid;
    const double vol = gr.cell_volume();
    struct Acc {
        double value = 0.0;
        std::int64_t count = 0;
    };
    Acc total = parallel_reduce(
        0, gr.cell_count(), Acc{},
        [&](std::int64_t lo, std::int64_t hi) {
            Acc a;
            for (std::int64_t lin = lo; lin < hi; ++lin) {
                Index c = gr.cell_unlinear(lin);
                Point x = gr.cell_point(c);
                if (!region.contains(x, gr.dim)) continue;
                double s = 0.0;
                for (int d = 0; d < v.dim; ++d) {
                    double w = v.comp[d].values[static_cast<std::size_t>(lin)];
                    s += w * w;
                }
                a.value += std::pow(s, 0.5 * power);
                a.count += 1;
            }
            return a;
        },
        [](Acc a, Acc b) {
            a.value += b.value;
            a.count += b.count;
            return a;
        });
    return IntegralDetail{total.value * vol, static_cast<double>(total.count) * vol, total.count};
}

double integrate_magnitude(const VectorField& v, const Region& region, double power) {
    return integrate_magnitude_detail(v, region, power).value;
}

double lq_norm(const ScalarField& u, const Region& region, double q) {
    return std::pow(integrate(u, region, q), 1.0 / q);
}

MollifierSpec MollifierSpec::standard(double radius) {
    MollifierSpec m;
    m.radius = radius;
    m.profile = [](double t) {
        if (t >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - t * t));
    };
    return m;
}

ScalarField mollify(const ScalarField& u, const MollifierSpec& m, bool* degenerate) {
    if (u.centering != Centering::node)
        throw std::invalid_argument("mollify expects a node-centered field");
    if (!(m.radius >= 0.0) || !m.profile) throw std::invalid_argument("invalid mollifier");
    const GridSpec& gr = u.grid;
    const double h = gr.spacing;

    // kernel offsets with |k h| <= radius
    const int reach = static_cast<int>(std::floor(m.radius / h));
    std::vector<std::pair<Index, double>> kernel;
    double mass = 0.0;
    Index k{0, 0, 0};
    const int lo = -reach, hi = reach;
    auto push = [&](const Index& off) {
        double r = 0.0;
        for (int d = 0; d < gr.dim; ++d) r += static_cast<double>(off[d]) * off[d];
        r = std::sqrt(r) * h;
        if (r > m.radius) return;
        double w = m.profile(m.radius > 0.0 ? r / m.radius : 0.0);
        if (w <= 0.0 && r > 0.0) return;
        if (w <= 0.0) w = 1.0;  // radius below spacing: identity kernel
        kernel.emplace_back(off, w);
        mass += w;
    };
    if (gr.dim == 1) {
        for (k[0] = lo; k[0] <= hi; ++k[0]) push(k);
    } else if (gr.dim == 2) {
        for (k[0] = lo; k[0] <= hi; ++k[0])
            for (k[1] = lo; k[1] <= hi; ++k[1]) push(k);
    } else {
        for (k[0] = lo; k[0] <= hi; ++k[0])
            for (k[1] = lo; k[1] <= hi; ++k[1])
                for (k[2] = lo; k[2] <= hi; ++k[2]) push(k);
    }
    const bool is_degenerate = kernel.size() == 1;
    if (degenerate) *degenerate = is_degenerate;
    for (auto& kv : kernel) kv.second /= mass;

    ScalarField out = make_field(gr, u.support.grown(m.radius), Centering::node);
    parallel_for(0, gr.node_count(), [&](std::int64_t blo, std::int64_t bhi) {
        for (std::int64_t lin = blo; lin < bhi; ++lin) {
            Index ix = gr.node_unlinear(lin);
            double acc = 0.0;
            for (const auto& [off, w] : kernel) {
                Index src = ix;
                for (int d = 0; d < gr.dim; ++d) src[d] -= off[d];
                acc += w * u.at(src);
            }
            out.values[static_cast<std::size_t>(lin)] = acc;
        }
    });
    return out;
}

ScalarField dilate(const ScalarField& u, double t) {
    if (u.support.kind != Region::Kind::ball)
        throw std::invalid_argument("dilate expects a field supported in a ball");
    const double R = u.support.radius;
    if (!(t > 0.0) || !(t <= 0.5 * R))
        throw std::invalid_argument("dilation parameter must satisfy 0 < t <= R/2");
    const GridSpec& gr = u.grid;
    const Point c = u.support.center;
    const double scale = R / (R - t);
    Region out_support = Region::ball(R - t, c);
    ScalarField out = make_field(gr, out_support, Centering::node);
    parallel_for(0, gr.node_count(), [&](std::int64_t blo, std::int64_t bhi) {
        for (std::int64_t lin = blo; lin < bhi; ++lin) {
            Index ix = gr.node_unlinear(lin);
            Point x = gr.node_point(ix);
            if (!out_support.contains(x, gr.dim)) continue;
            Point y;
            for (int d = 0; d < 3; ++d) y[d] = c[d] + (x[d] - c[d]) * scale;
            out.values[static_cast<std::size_t>(lin)] = u.coord_point_value(y);
        }
    });
    return out;
}

}  // namespace plap
