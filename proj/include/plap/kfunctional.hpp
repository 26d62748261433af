#pragma once

#include <span>
#include <utility>
#include <vector>

#include "plap/fracnorm.hpp"
#include "plap/grid.hpp"

namespace plap {

// Couple for the K-functional: X is L^q; Y is either the homogeneous space
// D_0^{1,q}(ball) (competitors vanish outside the open ball) or W^{1,q}(ball)
// with norm ||v||_q + ||grad v||_q.
enum class CoupleKind { lq_d10, lq_w1q };

struct InterpolationParams {
    double theta = 0.5;  // interpolation index
    double q = 2.0;
    CoupleKind couple = CoupleKind::lq_d10;
    Region ball;
};

struct KSolveSettings {
    double smoothing = 1e-12;
    int max_iter = 300;      // gradient descent budget for q != 2
    int mu_iter = 24;        // multiplier refinement budget (one linear solve each)
    double tol = 1e-9;
    int cg_max_iter = 4000;
    const std::vector<double>* warm_start = nullptr;  // previous competitor (dof values)
};

struct KPoint {
    double t = 0.0;
    double k_value = 0.0;      // part_x_norm + t * part_y_norm, exact norms
    double part_x_norm = 0.0;  // ||u - u2||_X
    double part_y_norm = 0.0;  // ||u2||_Y
    ScalarField part_x;        // u1 = u - u2 on nodes
    ScalarField part_y;        // u2
    bool converged = true;
};

// Certified upper bound of the discrete infimum: minimizes
// ||u - v||_X + t ||v||_Y over admissible v. q = 2 walks the linear
// stationarity systems directly; q != 2 runs smoothed gradient descent from
// the quadratic solution.
KPoint k_functional(const ScalarField& u, double t, const InterpolationParams& prm,
                    const KSolveSettings& settings = {});

// Nodal L^q norm used as the X-norm of the couple (also the Y-norm zero-order
// part); kept nodal so it is definite on the competitor space.
double couple_x_norm(const ScalarField& w, const InterpolationParams& prm);
double couple_y_norm(const ScalarField& v, const InterpolationParams& prm);

// Dilate-then-mollify splitting u = (u - u_t) + u_t with u_t supported in the
// ball; the mollifier radius must equal t.
std::pair<ScalarField, ScalarField> explicit_decomposition(const ScalarField& u, double t,
                                                           const MollifierSpec& m);

struct KProfile {
    std::vector<KPoint> points;
    double profile_integral = 0.0;  // head + quadrature + tail
    double quadrature_part = 0.0;   // trapezoid in log t over sampled t <= R/2
    double head_part = 0.0;         // below the first sample, via K(t) <= (t/t0) K(t0)
    double tail_part = 0.0;         // above R/2, via K(t) <= ||u||_X
};

std::vector<double> default_t_grid(double R, int count = 40);

KProfile interpolation_profile(const ScalarField& u, const InterpolationParams& prm,
                               std::span<const double> t_grid, const KSolveSettings& settings = {});

struct LemmaA1Settings {
    KSolveSettings ksolve;
    PairSumSettings pairs;
};

// Compares the interpolation profile integral for (L^q, W^{1,q}(ball)) at
// index beta against (||u||_{L^q(ball)} + [u]_{W^{beta,q}(ball)})^q.
EmbeddingReport lemma_a1_check(const ScalarField& u, double beta, double q, const Region& ball,
                               const LemmaA1Settings& settings = {});

}  // namespace plap
