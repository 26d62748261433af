#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plap/grid.hpp"

namespace plap {

// Convex energies of the form
//     E(u) = sum_{c in cells} coeff * (reg + |grad u_c|^2)^{m/2} / m * h^N  -  <load, u_dof>
// over nodal fields pinned outside the degree-of-freedom set. grad u_c is the
// cell-centered averaged forward difference.
struct GradientEnergyTerm {
    double exponent = 2.0;  // m > 1
    double reg = 0.0;       // regularization inside the power
    double coeff = 1.0;
};

struct NewtonSettings {
    double tol = 1e-9;  // max-norm of the nodal residual (gradient / h^N)
    int max_iter = 100;
    int cg_max_iter = 5000;
    double cg_tol = 1e-10;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct NewtonOutcome {
    int iterations = 0;
    double residual_norm = 0.0;
    double energy = 0.0;
    bool converged = false;
    bool gradient_fallback = false;
    std::vector<double> energy_trace;
};

class CellEnergyProblem {
  public:
    CellEnergyProblem(const GridSpec& grid, std::vector<std::int64_t> dof_nodes,
                      std::vector<std::int64_t> cells, std::vector<double> pinned_full,
                      std::vector<double> dof_load, GradientEnergyTerm term);

    std::size_t dof_count() const { return dofs_.size(); }
    const std::vector<std::int64_t>& dof_nodes() const { return dofs_; }
    const GridSpec& grid() const { return grid_; }
    const GradientEnergyTerm& term() const { return term_; }
    void set_term(const GradientEnergyTerm& t) { term_ = t; }

    // full nodal field with dof entries replaced by x
    std::vector<double> full_field(std::span<const double> x) const;

    double energy(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> g) const;
    // y = H(x) v and the Jacobi diagonal at x
    void hessian_diag(std::span<const double> x, std::span<double> diag) const;
    void hessian_vec(std::span<const double> x, std::span<const double> v,
                     std::span<double> y) const;

    // Gradient-term value only (no load): coeff * sum (reg+|g|^2)^{m/2}/m h^N
    double gradient_term(std::span<const double> x) const;
    // Exact L^r norm of the cell gradient with no regularization: (sum |g|^r h^N)^{1/r}
    double gradient_lr_norm(std::span<const double> x, double r) const;

    NewtonOutcome minimize(std::vector<double>& x, const NewtonSettings& settings) const;

  private:
    struct CellRecord {
        std::int64_t corner[8];  // node linear indices
        int dof[8];              // dof index or -1
    };
    void cell_gradient(const CellRecord& c, std::span<const double> full, double* g) const;

    GridSpec grid_;
    std::vector<std::int64_t> dofs_;
    std::vector<CellRecord> cells_;
    std::vector<double> pinned_;
    std::vector<double> load_;
    GradientEnergyTerm term_;
    int ncorner_ = 2;
    double wsign_[8][3] = {};  // per-corner gradient weights (+-avg/h)
};

// Active cells: cells with at least one corner in the dof set.
std::vector<std::int64_t> cells_touching_dofs(const GridSpec& grid,
                                              const std::vector<std::int64_t>& dof_nodes);

// Nodes of the grid whose point lies strictly inside region.
std::vector<std::int64_t> interior_nodes(const GridSpec& grid, const Region& region);

}  // namespace plap
