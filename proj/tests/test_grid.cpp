#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "plap/grid.hpp"
#include "testutil.hpp"

using namespace plap;
using plap::testutil::close;

TEST_CASE("build_grid basic construction") {
    GridSpec g = build_grid(1, 1.0, 0.5);
    CHECK(g.nodes_per_axis == 5);
    CHECK(g.node_coord(0) == doctest::Approx(-1.0));
    CHECK(g.node_coord(2) == doctest::Approx(0.0));
    CHECK(g.node_coord(4) == doctest::Approx(1.0));

    GridSpec g2 = build_grid(2, 1.0, 0.25);
    CHECK(g2.nodes_per_axis == 9);
    CHECK(g2.node_count() == 81);

    CHECK_THROWS_AS(build_grid(4, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(2, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_WITH_AS(build_grid(3, 1.0, 1e-9), doctest::Contains("node budget"),
                         std::invalid_argument);
}

TEST_CASE("sample_field zero extension and singularity policy") {
    GridSpec g = build_grid(2, 1.5, 0.125);
    Region ball = Region::ball(1.0);
    ScalarField one = sample_field(g, constant_spec(1.0), ball);
    // inside 1, outside 0
    CHECK(one.at(g.node_unlinear(g.node_linear({(g.nodes_per_axis - 1) / 2,
                                                (g.nodes_per_axis - 1) / 2, 0}))) == 1.0);
    Index corner{0, 0, 0};
    CHECK(one.at(corner) == 0.0);

    // |x|^{0.5}: continuous positive power
    ScalarField sq = sample_field(g, radial_power_spec(-0.5), ball);
    Index center{(g.nodes_per_axis - 1) / 2, (g.nodes_per_axis - 1) / 2, 0};
    CHECK(sq.at(center) == 0.0);

    // |x|^{-0.5}: clipped at the first shell
    ScalarField sing = sample_field(g, radial_power_spec(0.5), ball);
    CHECK(sing.at(center) == doctest::Approx(std::pow(g.spacing, -0.5)));
    CHECK(sing.finite());

    // non-finite without a policy
    FieldSpec bad;
    bad.eval = [](const Point& x, int dim) {
        double r = 0;
        for (int d = 0; d < dim; ++d) r += x[d] * x[d];
        return 1.0 / std::sqrt(r);
    };
    CHECK_THROWS_AS(sample_field(g, bad, ball), std::invalid_argument);
}

TEST_CASE("gradient exactness") {
    GridSpec g = build_grid(2, 1.0, 0.25);
    Region box = covered_box(g);

    ScalarField c = sample_field(g, constant_spec(3.0), box);
    VectorField gc = gradient(c);
    // interior cells see a constant field; support-boundary cells see the box edge
    Index mid{g.cells_per_axis() / 2, g.cells_per_axis() / 2, 0};
    CHECK(gc.comp[0].at(mid) == 0.0);
    CHECK(gc.comp[1].at(mid) == 0.0);

    ScalarField lin = sample_field(g, affine_spec({3.0, 0.0, 0.0}, 0.0), box);
    VectorField gl = gradient(lin);
    CHECK(gl.comp[0].at(mid) == doctest::Approx(3.0));
    CHECK(gl.comp[1].at(mid) == doctest::Approx(0.0).epsilon(1e-12));

    // u = |x|^2 in 1-D: forward difference 2x + h at cell centered between x, x+h
    GridSpec g1 = build_grid(1, 1.0, 0.5);
    ScalarField quad = sample_field(g1, FieldSpec{[](const Point& x, int) { return x[0] * x[0]; },
                                                  SingularityPolicy::none},
                                    covered_box(g1));
    VectorField gq = gradient(quad);
    for (int i = 0; i < g1.cells_per_axis(); ++i) {
        const double xl = g1.node_coord(i);
        CHECK(gq.comp[0].at({i, 0, 0}) == doctest::Approx(2.0 * xl + g1.spacing));
    }
}

TEST_CASE("gradient linearity") {
    GridSpec g = build_grid(2, 1.0, 0.125);
    ScalarField u = sample_field(g, testutil::band_limited_spec(7), Region::ball(0.8));
    ScalarField w = sample_field(g, testutil::band_limited_spec(8), Region::ball(0.8));
    const double a = 1.7, b = -0.6;
    ScalarField lin = make_field(g, covered_box(g));
    for (std::size_t i = 0; i < lin.values.size(); ++i)
        lin.values[i] = a * u.values[i] + b * w.values[i];
    VectorField gu = gradient(u), gw = gradient(w), gl = gradient(lin);
    for (int d = 0; d < 2; ++d)
        for (std::size_t i = 0; i < gl.comp[d].values.size(); ++i)
            CHECK(close(gl.comp[d].values[i], a * gu.comp[d].values[i] + b * gw.comp[d].values[i],
                        1e-12, 1e-12));
}

TEST_CASE("integrate midpoint rule") {
    // disk area within O(h)
    GridSpec g = build_grid(2, 1.5, 0.03125);
    ScalarField one = sample_field(g, constant_spec(1.0), Region::ball(1.0));
    const double area = integrate(one, Region::ball(1.0), 1.0);
    CHECK(std::abs(area - std::numbers::pi) <= 4.0 * g.spacing);

    // zero field
    ScalarField zero = make_field(g, Region::ball(1.0));
    CHECK(integrate(zero, Region::ball(1.0), 1.0) == 0.0);

    // u = 2 on the box, power 2, N = 1 -> 8
    GridSpec g1 = build_grid(1, 1.0, 0.125);
    ScalarField two = sample_field(g1, constant_spec(2.0), covered_box(g1));
    CHECK(integrate(two, covered_box(g1), 2.0) == doctest::Approx(8.0));

    // region escaping the box
    CHECK_THROWS_AS(integrate(two, Region::ball(5.0), 1.0), std::invalid_argument);

    // monotone in region
    ScalarField f = sample_field(g, testutil::band_limited_spec(3), Region::ball(1.0));
    const double small = integrate(f, Region::ball(0.5), 2.0);
    const double large = integrate(f, Region::ball(1.0), 2.0);
    CHECK(small <= large + 1e-15);
}

TEST_CASE("mollify preserves constants and mass") {
    GridSpec g = build_grid(1, 2.0, 0.0625);
    ScalarField c = sample_field(g, constant_spec(4.0), covered_box(g));
    ScalarField mc = mollify(c, MollifierSpec::standard(3 * g.spacing));
    // constants preserved away from the box edge (zero extension bites there)
    Index mid{(g.nodes_per_axis - 1) / 2, 0, 0};
    CHECK(mc.at(mid) == doctest::Approx(4.0).epsilon(1e-13));

    // degenerate kernel: radius below spacing
    bool degenerate = false;
    ScalarField same = mollify(c, MollifierSpec::standard(0.5 * g.spacing), &degenerate);
    CHECK(degenerate);
    for (std::size_t i = 0; i < c.values.size(); ++i) CHECK(same.values[i] == c.values[i]);

    // 1-D step: monotone ramp, mass preserved
    FieldSpec step;
    step.eval = [](const Point& x, int) { return x[0] >= 0.0 ? 1.0 : 0.0; };
    ScalarField st = sample_field(g, step, Region::ball(1.0));
    bool deg2 = false;
    ScalarField sm = mollify(st, MollifierSpec::standard(2 * g.spacing), &deg2);
    CHECK_FALSE(deg2);
    double mass_before = 0.0, mass_after = 0.0;
    for (double v : st.values) mass_before += v;
    for (double v : sm.values) mass_after += v;
    CHECK(close(mass_after, mass_before, 1e-12));
    for (std::size_t i = 1; i < sm.values.size(); ++i) {
        Point x = sm.point_of(static_cast<std::int64_t>(i));
        if (std::abs(x[0]) <= 0.5) CHECK(sm.values[i] >= sm.values[i - 1] - 1e-13);
    }
}

TEST_CASE("mollify preserves mass of random compact fields") {
    GridSpec g = build_grid(2, 1.5, 0.125);
    for (int k = 0; k < 5; ++k) {
        ScalarField u = sample_field(g, testutil::band_limited_spec(40 + k), Region::ball(0.7));
        ScalarField mu = mollify(u, MollifierSpec::standard(2.5 * g.spacing));
        double before = 0, after = 0;
        for (double v : u.values) before += v;
        for (double v : mu.values) after += v;
        CHECK(close(after, before, 1e-10, 1e-12));
    }
}

TEST_CASE("dilate") {
    GridSpec g = build_grid(1, 1.5, 0.0078125);
    ScalarField hat = sample_field(g, hat_spec(1.0), Region::ball(1.0));

    // near-identity at tiny t
    ScalarField tiny = dilate(hat, 1e-6);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < hat.values.size(); ++i)
        max_dev = std::max(max_dev, std::abs(tiny.values[i] - hat.values[i]));
    CHECK(max_dev <= 1e-4);

    // support shrinks
    ScalarField quarter = dilate(hat, 0.25);
    CHECK(quarter.support.radius == doctest::Approx(0.75));
    for (std::size_t i = 0; i < quarter.values.size(); ++i) {
        Point x = quarter.point_of(static_cast<std::int64_t>(i));
        if (std::abs(x[0]) > 0.75) CHECK(quarter.values[i] == 0.0);
    }

    // closed form: u = 1 - |x| on B_1, t = 0.5 -> 1 - 2|x| on B_{1/2}
    ScalarField half = dilate(hat, 0.5);
    for (std::size_t i = 0; i < half.values.size(); ++i) {
        Point x = half.point_of(static_cast<std::int64_t>(i));
        const double expect = std::abs(x[0]) <= 0.5 ? 1.0 - 2.0 * std::abs(x[0]) : 0.0;
        CHECK(close(half.values[i], expect, 1e-12, 1e-12));
    }

    CHECK_THROWS_AS(dilate(hat, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(dilate(hat, 0.0), std::invalid_argument);
}

TEST_CASE("region volumes and membership") {
    Region ann = Region::annulus(0.25, 0.75);
    CHECK(ann.contains({0.5, 0, 0}, 1));
    CHECK_FALSE(ann.contains({0.1, 0, 0}, 1));
    CHECK_FALSE(ann.contains({0.25, 0, 0}, 1));  // open inner boundary
    CHECK(ann.contains({0.75, 0, 0}, 1));        // closed outer boundary
    CHECK(Region::ball(2.0).nominal_volume(3) ==
          doctest::Approx(4.0 / 3.0 * std::numbers::pi * 8.0));
    CHECK_THROWS_AS(Region::annulus(0.8, 0.5), std::invalid_argument);
}
