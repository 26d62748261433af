#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "plap/fracnorm.hpp"
#include "plap/grid.hpp"
#include "plap/report.hpp"

namespace plap {

// Energy density G_eps(z) = (eps + |z|^2)^{p/2} / p with p > 2. eps = 0 is
// allowed for energy and V evaluation but not for Newton solves.
struct EnergyParams {
    double p = 3.0;
    double eps = 0.0;
};

void validate_energy_params(const EnergyParams& prm, bool for_solve);

struct DirichletProblem {
    GridSpec grid;
    Region ball;
    ScalarField rhs;       // f, node-centered
    ScalarField boundary;  // trace values used at every non-dof node
    EnergyParams params;
    double mollify_radius = -1.0;  // f_eps radius; negative selects 3h, 0 disables
};

// Mollified right-hand side actually used by the discrete problem.
ScalarField problem_rhs_eps(const DirichletProblem& prob);

double energy(const ScalarField& u, const DirichletProblem& prob);

// Nodal gradient of the discrete energy divided by the cell volume
// (the discrete -div grad G_eps(grad u) - f_eps); zero at pinned nodes.
ScalarField residual(const ScalarField& u, const DirichletProblem& prob);

struct SolveSettings {
    double tol = 1e-7;  // max-norm of the nodal residual
    int max_iter = 200;
    int cg_max_iter = 5000;
    bool continuation = true;  // solve a decreasing-eps ladder down to params.eps
    std::optional<ScalarField> init;
};

struct SolveReport {
    ScalarField u_eps;
    ScalarField f_eps;
    int iterations = 0;
    double residual_norm = 0.0;
    double energy = 0.0;
    bool converged = false;
    bool gradient_fallback = false;
    std::vector<double> energy_trace;

    nlohmann::json to_json() const;
};

SolveReport solve_dirichlet(const DirichletProblem& prob, const SolveSettings& settings = {});

// V(grad u) = |grad u|^{(p-2)/2} grad u on cell centers; V(0) = 0 exactly.
VectorField v_field(const ScalarField& u, double p);
VectorField v_field(const VectorField& grad_u, double p);

struct PointwiseFit {
    double c1 = 0.0;  // max |z-w| / |V(z)-V(w)|^{2/p}
    double c2 = 0.0;  // max |V(z)-V(w)| / ((|z|^{(p-2)/2}+|w|^{(p-2)/2}) |z-w|)
    std::int64_t samples = 0;
};

PointwiseFit pointwise_inequalities(double p, std::int64_t sample_count,
                                    std::uint64_t seed = 20240101);

// Per-pair ratios behind the fitted constants (z = w is rejected).
double pointwise_ratio_c1(const std::array<double, 3>& z, const std::array<double, 3>& w,
                          double p);
double pointwise_ratio_c2(const std::array<double, 3>& z, const std::array<double, 3>& w,
                          double p);

EstimateReport verify_energy_estimate(const SolveReport& report, const ScalarField& U,
                                      const DirichletProblem& prob);

struct SobolevEstimateOptions {
    PairSumSettings pairs;
};

// Estimate (uniform Sobolev / local form): for (p-2)/p < s <= 1 and r < R,
//   max_j int_{B_r} |d_j V|^2  vs  (R-r)^{-2} int_{B_R} (eps+|grad u|^2)^{p/2}
//                                 + (R^{s-(p-2)/p} [f]_{W^{s,p'}(B_R)})^{p'}.
EstimateReport verify_sobolev_estimate(const ScalarField& u, const ScalarField& f, double p,
                                       double s, double r, double R, double eps,
                                       const SobolevEstimateOptions& opts = {});

// Squared L^2 norm over `region` of the face difference quotients of V along
// axis j, using only stencils with both cell centers in the region.
double v_face_derivative_sq(const VectorField& V, int axis, const Region& region);

// max_j of the W^{sigma,p} seminorm of (grad u)_j over `inner`; requires
// 0 < sigma < 2/p.
double fractional_gradient_check(const ScalarField& u, double sigma, double p, const Region& inner,
                                 const PairSumSettings& pairs = {});

}  // namespace plap
