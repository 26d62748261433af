#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "plap/kfunctional.hpp"
#include "testutil.hpp"

using namespace plap;
using plap::testutil::close;

namespace {

InterpolationParams params(double theta, double q, CoupleKind couple, double R) {
    InterpolationParams prm;
    prm.theta = theta;
    prm.q = q;
    prm.couple = couple;
    prm.ball = Region::ball(R);
    return prm;
}

}  // namespace

TEST_CASE("k_functional on the zero field") {
    GridSpec g = build_grid(1, 1.2, 0.125);
    ScalarField zero = make_field(g, Region::ball(1.0));
    KPoint kp = k_functional(zero, 1.0, params(0.5, 2.0, CoupleKind::lq_d10, 1.0));
    CHECK(kp.k_value == 0.0);
}

TEST_CASE("k_functional feasible-point bounds") {
    GridSpec g = build_grid(1, 1.2, 1.0 / 64.0);
    InterpolationParams prm = params(0.5, 2.0, CoupleKind::lq_d10, 1.0);
    ScalarField hat = sample_field(g, hat_spec(0.9), Region::ball(0.9));
    const double ux = couple_x_norm(hat, prm);
    const double uy = couple_y_norm(hat, prm);
    for (double t : {0.01, 0.3, 2.0, 50.0}) {
        KPoint kp = k_functional(hat, t, prm);
        CHECK(kp.k_value <= ux * (1.0 + 1e-9) + 1e-12);
        CHECK(kp.k_value <= t * uy * (1.0 + 1e-9) + 1e-12);
        // decomposition identity on nodes
        for (std::size_t i = 0; i < hat.values.size(); ++i)
            CHECK(kp.part_x.values[i] + kp.part_y.values[i] ==
                  doctest::Approx(hat.values[i]).epsilon(1e-13));
        CHECK(kp.k_value ==
              doctest::Approx(kp.part_x_norm + t * kp.part_y_norm).epsilon(1e-13));
    }
}

TEST_CASE("k_functional matches tiny-grid brute force at q = 2") {
    GridSpec g = build_grid(1, 1.0, 0.25);  // 9 nodes
    REQUIRE(g.nodes_per_axis == 9);
    ScalarField hat = sample_field(g, hat_spec(1.0), Region::ball(1.0));
    InterpolationParams prm = params(0.5, 2.0, CoupleKind::lq_d10, 1.0);
    for (double t : {0.1, 1.0, 10.0}) {
        KPoint kp = k_functional(hat, t, prm);
        const double brute = testutil::brute_force_k_tiny(hat, t, prm.ball);
        CHECK(std::abs(kp.k_value - brute) <= 1e-6);
    }
}

TEST_CASE("k_functional subadditivity") {
    GridSpec g = build_grid(1, 1.2, 1.0 / 32.0);
    InterpolationParams prm = params(0.5, 2.0, CoupleKind::lq_d10, 1.0);
    ScalarField u = sample_field(g, testutil::band_limited_spec(12), Region::ball(0.9));
    ScalarField w = sample_field(g, testutil::band_limited_spec(13), Region::ball(0.9));
    ScalarField sum = u;
    for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += w.values[i];
    for (double t : {0.1, 1.0}) {
        const double ku = k_functional(u, t, prm).k_value;
        const double kw = k_functional(w, t, prm).k_value;
        const double ks = k_functional(sum, t, prm).k_value;
        CHECK(ks <= ku + kw + 2e-6 * (ku + kw));
    }
}

TEST_CASE("explicit decomposition") {
    GridSpec g = build_grid(1, 1.3, 1.0 / 128.0);
    ScalarField zero = make_field(g, Region::ball(1.0));
    auto [zt, zr] = explicit_decomposition(zero, 0.25, MollifierSpec::standard(0.25));
    for (double v : zt.values) CHECK(v == 0.0);
    for (double v : zr.values) CHECK(v == 0.0);

    ScalarField hat = sample_field(g, hat_spec(1.0), Region::ball(1.0));
    auto [ut, rem] = explicit_decomposition(hat, 0.25, MollifierSpec::standard(0.25));
    // u_t vanishes outside B_1 exactly
    for (std::int64_t i = 0; i < ut.size(); ++i) {
        Point x = ut.point_of(i);
        if (std::abs(x[0]) >= 1.0) CHECK(ut.values[static_cast<std::size_t>(i)] == 0.0);
    }
    // reconstruction on nodes
    for (std::size_t i = 0; i < hat.values.size(); ++i)
        CHECK(ut.values[i] + rem.values[i] == doctest::Approx(hat.values[i]).epsilon(1e-14));

    CHECK_THROWS_AS(explicit_decomposition(hat, 0.6, MollifierSpec::standard(0.6)),
                    std::invalid_argument);
    CHECK_THROWS_AS(explicit_decomposition(hat, 0.25, MollifierSpec::standard(0.3)),
                    std::invalid_argument);
}

TEST_CASE("explicit decomposition is near-optimal for the K-functional") {
    GridSpec g = build_grid(1, 1.3, 1.0 / 128.0);
    InterpolationParams prm = params(0.5, 2.0, CoupleKind::lq_d10, 1.0);
    for (int which = 0; which < 2; ++which) {
        ScalarField u = which == 0
                            ? sample_field(g, hat_spec(1.0), Region::ball(1.0))
                            : sample_field(g, bump_spec(1.0), Region::ball(1.0));
        for (double t : {0.02, 0.1, 0.3, 0.49}) {
            auto [ut, rem] = explicit_decomposition(u, t, MollifierSpec::standard(t));
            const double explicit_val =
                couple_x_norm(rem, prm) + t * couple_y_norm(ut, prm);
            const double kval = k_functional(u, t, prm).k_value;
            CHECK(explicit_val <= 10.0 * kval);
        }
    }
}

TEST_CASE("interpolation profile: invariants and homogeneity") {
    GridSpec g = build_grid(1, 1.2, 1.0 / 64.0);
    InterpolationParams prm = params(0.4, 2.0, CoupleKind::lq_d10, 1.0);
    ScalarField u = sample_field(g, hat_spec(0.9), Region::ball(0.9));
    std::vector<double> tg = default_t_grid(1.0, 24);
    KProfile prof = interpolation_profile(u, prm, tg);
    const double ux = couple_x_norm(u, prm);
    const double tolk = 1e-6 * ux;
    for (std::size_t i = 1; i < prof.points.size(); ++i) {
        CHECK(prof.points[i].k_value >= prof.points[i - 1].k_value - tolk);
        CHECK(prof.points[i].k_value / prof.points[i].t <=
              prof.points[i - 1].k_value / prof.points[i - 1].t + tolk);
    }
    // tail bound: K(t) <= ||u||_X for t >= R/2
    for (const auto& kp : prof.points)
        if (kp.t >= 0.5) CHECK(kp.k_value <= ux * (1.0 + 1e-9));

    // homogeneity: profile_integral(lambda u) = lambda^q profile_integral(u)
    ScalarField u3 = u;
    for (double& v : u3.values) v *= 3.0;
    KProfile prof3 = interpolation_profile(u3, prm, tg);
    CHECK(close(prof3.profile_integral, 9.0 * prof.profile_integral, 1e-6));

    ScalarField zero = make_field(g, Region::ball(1.0));
    KProfile pz = interpolation_profile(zero, prm, tg);
    CHECK(pz.profile_integral == 0.0);
}

TEST_CASE("lemma A.1 check") {
    GridSpec g = build_grid(1, 1.2, 1.0 / 64.0);
    const Region ball = Region::ball(1.0);

    // constants lie in both spaces: ratio finite and positive
    ScalarField c = sample_field(g, constant_spec(2.0), ball);
    EmbeddingReport rc = lemma_a1_check(c, 0.5, 2.0, ball);
    CHECK(rc.lhs > 0.0);
    CHECK(rc.rhs > 0.0);
    CHECK(std::isfinite(rc.implied_constant));
    CHECK_FALSE(rc.degenerate);

    // hat: ratio finite, homogeneous in u
    ScalarField hat = sample_field(g, hat_spec(1.0), ball);
    EmbeddingReport rh = lemma_a1_check(hat, 0.5, 2.0, ball);
    CHECK(std::isfinite(rh.implied_constant));
    ScalarField hat2 = hat;
    for (double& v : hat2.values) v *= 2.0;
    EmbeddingReport rh2 = lemma_a1_check(hat2, 0.5, 2.0, ball);
    CHECK(close(rh2.implied_constant, rh.implied_constant, 1e-6));
}

TEST_CASE("k_functional with q != 2 stays between feasible bounds") {
    GridSpec g = build_grid(1, 1.2, 1.0 / 32.0);
    InterpolationParams prm = params(0.5, 1.5, CoupleKind::lq_d10, 1.0);
    ScalarField u = sample_field(g, bump_spec(0.9), Region::ball(0.9));
    const double ux = couple_x_norm(u, prm);
    const double uy = couple_y_norm(u, prm);
    for (double t : {0.05, 0.5, 5.0}) {
        KPoint kp = k_functional(u, t, prm);
        CHECK(kp.k_value > 0.0);
        CHECK(kp.k_value <= std::min(ux, t * uy) * (1.0 + 1e-9));
    }
}

TEST_CASE("parameter validation") {
    GridSpec g = build_grid(1, 1.2, 0.125);
    ScalarField u = sample_field(g, hat_spec(0.9), Region::ball(0.9));
    CHECK_THROWS_AS(k_functional(u, -1.0, params(0.5, 2.0, CoupleKind::lq_d10, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(k_functional(u, 1.0, params(1.5, 2.0, CoupleKind::lq_d10, 1.0)),
                    std::invalid_argument);
    std::vector<double> bad{1.0, 0.5};
    CHECK_THROWS_AS(interpolation_profile(u, params(0.5, 2.0, CoupleKind::lq_d10, 1.0), bad),
                    std::invalid_argument);
}
