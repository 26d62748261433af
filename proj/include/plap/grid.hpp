#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace plap {

using Point = std::array<double, 3>;
using Index = std::array<int, 3>;  // unused trailing axes stay 0

// Uniform Cartesian grid symmetric about the origin. Along each axis the
// nodes are (i - M) * h for i = 0..2M with M = floor(L/h); cell centers sit
// at the midpoints. The grid covers [-M*h, M*h]^dim inside [-L, L]^dim.
struct GridSpec {
    int dim = 1;
    double half_width = 1.0;  // L
    double spacing = 1.0;     // h
    int nodes_per_axis = 3;   // 2M+1, odd, node 0 at the origin

    int cells_per_axis() const { return nodes_per_axis - 1; }
    std::int64_t node_count() const;
    std::int64_t cell_count() const;
    double covered_half_width() const { return 0.5 * (nodes_per_axis - 1) * spacing; }
    double cell_volume() const;

    double node_coord(int i) const { return (i - (nodes_per_axis - 1) / 2) * spacing; }
    double cell_coord(int i) const { return node_coord(i) + 0.5 * spacing; }
    Point node_point(const Index& ix) const;
    Point cell_point(const Index& ix) const;

    bool node_in_range(const Index& ix) const;
    bool cell_in_range(const Index& ix) const;
    std::int64_t node_linear(const Index& ix) const;
    std::int64_t cell_linear(const Index& ix) const;
    Index node_unlinear(std::int64_t lin) const;
    Index cell_unlinear(std::int64_t lin) const;

    bool operator==(const GridSpec&) const = default;
};

inline constexpr std::int64_t kDefaultNodeBudget = 200'000'000;

GridSpec build_grid(int dim, double half_width, double spacing,
                    std::int64_t node_budget = kDefaultNodeBudget);

// Axis-aligned region used for support masks and integration domains.
// contains() treats the outer boundary as closed; for an annulus the inner
// boundary is open (inner < |x - c| <= outer).
struct Region {
    enum class Kind { ball, annulus, box };
    Kind kind = Kind::ball;
    Point center{0.0, 0.0, 0.0};
    double radius = 1.0;        // outer radius (ball/annulus) or half-width (box)
    double inner_radius = 0.0;  // annulus only

    static Region ball(double R, const Point& c = {0.0, 0.0, 0.0});
    static Region annulus(double inner, double outer, const Point& c = {0.0, 0.0, 0.0});
    static Region box(double half_width, const Point& c = {0.0, 0.0, 0.0});

    bool contains(const Point& x, int dim) const;
    bool interior_contains(const Point& x, int dim) const;  // strict outer boundary
    bool inside(const Region& other, int dim) const;        // bounding-box test
    Region grown(double delta) const;
    double nominal_volume(int dim) const;  // analytic volume, not the mask volume
    std::string describe() const;

    bool operator==(const Region&) const = default;
};

// Whole-box region matching the covered part of the grid.
Region covered_box(const GridSpec& grid);

enum class Centering { node, cell };

// Values on the node (or cell-center) lattice of a grid. Evaluation outside
// the support region, or off the lattice, is exactly 0; stored values outside
// the support are kept at 0.
struct ScalarField {
    GridSpec grid;
    Centering centering = Centering::node;
    Region support;
    std::vector<double> values;

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    double at(const Index& ix) const;  // zero extension off the lattice
    double& ref(const Index& ix);
    Point point_of(std::int64_t lin) const;
    double coord_point_value(const Point& x) const;  // multilinear interpolation, node fields

    bool finite() const;
};

ScalarField make_field(const GridSpec& grid, const Region& support,
                       Centering centering = Centering::node);

// Cell-centered vector field; component j approximates the j-th partial
// derivative (or any co-located vector quantity).
struct VectorField {
    GridSpec grid;
    int dim = 1;
    std::array<ScalarField, 3> comp;

    ScalarField magnitude() const;  // cell-centered |v|
};

enum class SingularityPolicy { none, clip_first_shell };

struct FieldSpec {
    std::function<double(const Point&, int dim)> eval;
    SingularityPolicy policy = SingularityPolicy::none;
};

FieldSpec constant_spec(double c);
FieldSpec affine_spec(const Point& slope, double offset);
// |x - c|^{-alpha}; the clip policy replaces a non-finite value at the
// singular node by the value at radius h from it.
FieldSpec radial_power_spec(double alpha, const Point& c = {0.0, 0.0, 0.0});
FieldSpec hat_spec(double R, const Point& c = {0.0, 0.0, 0.0});        // max(0, 1 - |x-c|/R)
FieldSpec bump_spec(double R, const Point& c = {0.0, 0.0, 0.0});       // exp(-1/(1-(|x-c|/R)^2))
FieldSpec gaussian_spec(double sigma, const Point& c = {0.0, 0.0, 0.0});

ScalarField sample_field(const GridSpec& grid, const FieldSpec& spec, const Region& support,
                         Centering centering = Centering::node);

// Cell-centered averaged forward differences: exact for affine fields.
VectorField gradient(const ScalarField& u);

// Midpoint rule for integral of |u|^power over the cells whose centers lie in
// region; node fields are evaluated at centers by corner averaging.
double integrate(const ScalarField& u, const Region& region, double power);

struct IntegralDetail {
    double value = 0.0;
    double mask_volume = 0.0;  // cell count times cell volume
    std::int64_t cell_count = 0;
};
IntegralDetail integrate_detail(const ScalarField& u, const Region& region, double power);
IntegralDetail integrate_magnitude_detail(const VectorField& v, const Region& region, double power);
double integrate_magnitude(const VectorField& v, const Region& region, double power);

double lq_norm(const ScalarField& u, const Region& region, double q);

struct MollifierSpec {
    double radius = 0.0;                               // rho
    std::function<double(double)> profile;             // bump on [0,1), zero outside

    static MollifierSpec standard(double radius);
};

// Discrete convolution with the normalized kernel; preserves constants and
// discrete mass exactly. If radius < h the kernel degenerates to the
// identity and *degenerate is set.
ScalarField mollify(const ScalarField& u, const MollifierSpec& m, bool* degenerate = nullptr);

// v_t(x) = u(R x' / (R - t)) with x' relative to the support center; u must be
// supported in a ball of radius R and 0 < t < R/2. Multilinear interpolation.
ScalarField dilate(const ScalarField& u, double t);

}  // namespace plap
