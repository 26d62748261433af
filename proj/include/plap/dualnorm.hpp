#pragma once

#include <cstdint>
#include <vector>

#include "plap/fracnorm.hpp"
#include "plap/grid.hpp"
#include "plap/report.hpp"

namespace plap {

// Linear functional on nodal test fields, reduced to a nodal coefficient
// vector: action(phi) = sum_n coeff[n] phi[n].
struct Functional {
    enum class Form { density, derivative };
    GridSpec grid;
    Form form = Form::density;
    int axis = 0;  // derivative form
    std::vector<double> node_coeff;

    double action(const ScalarField& phi) const;
    static Functional from_density(const ScalarField& density);
    Functional scaled(double factor) const;
};

// <T_j f, phi> = -sum_cells avg(f) (grad phi)_j h^N; discrete summation by
// parts puts the derivative on the test function.
Functional weak_derivative_functional(const ScalarField& f, int axis);

struct DualSolveSettings {
    int max_iter = 200;
    int restarts = 5;  // random restarts after the coefficient-image start
    double smoothing = 1e-12;
    double tol = 1e-7;  // relative ratio progress
    std::uint64_t seed = 987654321;
    std::int64_t pair_budget = 400'000'000;
    const ScalarField* warm_start = nullptr;
};

struct DualNormResult {
    double value = 0.0;  // action(maximizer)/primal_seminorm(maximizer), recomputed unsmoothed
    ScalarField maximizer;
    double primal_smoothness = 1.0;
    double primal_exponent = 2.0;
    int iterations = 0;
    bool converged = false;
};

// sup over discrete phi supported strictly inside `ball` of action(phi)
// subject to primal seminorm <= 1. sigma = 1 uses ||grad phi||_{L^r}; for
// sigma < 1 the primal seminorm is the Gagliardo sum over distinct NODE pairs
// of the covered box (zero extension), which is definite on the test space.
DualNormResult dual_seminorm(const Functional& F, double sigma, double r, const Region& ball,
                             const DualSolveSettings& settings = {});

// The primal seminorm the solver certifies its ratios against.
double dual_primal_seminorm(const ScalarField& phi, double sigma, double r,
                            const DualSolveSettings& settings = {});

struct NegativeNormSettings {
    DualSolveSettings dual;
    PairSumSettings pairs;
};

// Negative-norm inequality: max_j ||T_j f||_{dual of D_0^{1-beta,q'}(ball)}
// against [f]_{W^{beta,q}(ball)}.
EstimateReport negative_norm_check(const ScalarField& f, double beta, double q, const Region& ball,
                                   const NegativeNormSettings& settings = {});

}  // namespace plap
