#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "plap/report.hpp"

using namespace plap;

TEST_CASE("observed_order with reference") {
    RefinementStudy s;
    s.add(0.4, 1.4);  // errors 0.4, 0.2, 0.1 against reference 1.0
    s.add(0.2, 1.2);
    s.add(0.1, 1.1);
    OrderResult r = observed_order(s, 1.0);
    CHECK(r.order == doctest::Approx(1.0));
    CHECK_FALSE(r.warning);

    RefinementStudy s2;
    s2.add(0.4, 1.4);
    s2.add(0.2, 1.1);
    s2.add(0.1, 1.025);
    CHECK(observed_order(s2, 1.0).order == doctest::Approx(2.0));

    RefinementStudy flat;
    flat.add(0.4, 1.5);
    flat.add(0.2, 1.5);
    flat.add(0.1, 1.5);
    OrderResult rf = observed_order(flat, 1.0);
    CHECK(rf.warning);
    CHECK(std::abs(rf.order) <= 1e-8);
}

TEST_CASE("observed_order without reference uses increments") {
    RefinementStudy s;
    // value approaches 2 with first-order increments
    s.add(0.4, 2.4);
    s.add(0.2, 2.2);
    s.add(0.1, 2.1);
    s.add(0.05, 2.05);
    OrderResult r = observed_order(s);
    CHECK(r.order == doctest::Approx(1.0));
}

TEST_CASE("loglog_fit") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {0.5, 1.0, 2.0, 4.0, 8.0}) pts.emplace_back(x, x * x);
    FitResult f = loglog_fit(pts);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.r_squared == doctest::Approx(1.0));

    std::vector<std::pair<double, double>> flat;
    for (double x : {1.0, 2.0, 4.0}) flat.emplace_back(x, 3.0);
    CHECK(loglog_fit(flat).slope == doctest::Approx(0.0));

    // y = x^{1.5} with 1% multiplicative noise
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<std::pair<double, double>> noisy;
    for (int i = 0; i < 30; ++i) {
        const double x = std::pow(10.0, -1.0 + i * 0.1);
        noisy.emplace_back(x, std::pow(x, 1.5) * std::exp(noise(rng)));
    }
    CHECK(std::abs(loglog_fit(noisy).slope - 1.5) <= 0.1);

    std::vector<std::pair<double, double>> bad{{1.0, 1.0}, {-2.0, 1.0}, {3.0, 2.0}};
    CHECK_THROWS_AS(loglog_fit(bad), std::invalid_argument);
}

TEST_CASE("loglog_fit slope invariant under joint rescaling") {
    std::vector<std::pair<double, double>> pts;
    for (double x : {0.5, 1.0, 2.0, 4.0}) pts.emplace_back(x, 3.0 * std::pow(x, 1.25));
    const double base = loglog_fit(pts).slope;
    std::vector<std::pair<double, double>> scaled;
    for (auto [x, y] : pts) scaled.emplace_back(17.0 * x, 0.003 * y);
    CHECK(std::abs(loglog_fit(scaled).slope - base) <= 1e-10);
}

TEST_CASE("format_double round-trips") {
    for (double v : {1.0 / 3.0, 2.5e-17, 3.141592653589793, -0.0, 123456789.123456789}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("estimate report json") {
    EstimateReport r = make_estimate_report(EstimateReport::Kind::energy_uniform, 2.0,
                                            {{"a", 1.0}, {"b", 3.0}}, {{"p", 3.0}});
    CHECK(r.implied_constant == doctest::Approx(0.5));
    CHECK_FALSE(r.degenerate);
    auto j = r.to_json();
    CHECK(j["rhs_total"] == doctest::Approx(4.0));
    CHECK(j["schema_version"] == kSchemaVersion);

    EstimateReport d = make_estimate_report(EstimateReport::Kind::negative_norm, 0.0, {{"a", 0.0}},
                                            {});
    CHECK(d.degenerate);
    CHECK(d.implied_constant == 0.0);
}

TEST_CASE("csv body formatting") {
    CsvTable t;
    t.header = {"x", "y"};
    t.add_row(std::vector<double>{1.0, 0.5});
    CHECK(t.body() == "x,y\n1,0.5\n");
}
