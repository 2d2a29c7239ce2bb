#ifndef SYLGL_SOLVER_HPP
#define SYLGL_SOLVER_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sylgl/kron_ops.hpp"
#include "sylgl/synth.hpp"
#include "sylgl/tensor.hpp"

namespace sylgl {

/// Estimator state: per-mode symmetric factors with exactly zero diagonals,
/// plus the diagonal field w[i_1..i_K] = sum_k (Psi_k)_{i_k,i_k}. Individual
/// factor diagonals are not identifiable (adding c*I to one factor and
/// subtracting it from another leaves the model unchanged), so only their
/// sum is estimated.
struct FactorSet {
    std::vector<Eigen::MatrixXd> offdiag;
    DenseTensor w;

    int order() const { return static_cast<int>(offdiag.size()); }
    void validate() const;

    /// Builds the ground-truth FactorSet of a FactorList (off-diagonal parts
    /// plus the diagonal sums field).
    static FactorSet from_factors(const FactorList& f);
};

struct SolverConfig {
    std::vector<double> lambdas;  // one penalty per mode, >= 0
    double tol = 1e-6;            // max abs parameter change per sweep
    int max_sweeps = 500;
    double w_floor = 1e-12;  // only used for degenerate all-zero variables
};

struct FitReport {
    FactorSet factors;
    std::vector<double> objective_trace;  // entry 0 after init, then one per sweep
    std::vector<double> delta_trace;      // max abs parameter change per sweep
    int sweeps = 0;
    bool converged = false;
    std::string termination;
    std::vector<std::string> warnings;
};

struct Coord {
    int mode;
    int i;
    int j;  // i < j
};

/// sign(x) * max(|x|-t, 0).
double soft_threshold(double x, double t);

/// The penalized pseudolikelihood objective:
///   -N * sum_i log w_i
///   + 1/2 * sum_{s,i} (w_i X_{i,s} + Y_{i,s})^2,   Y = sum_k X x_k Psi_k^off
///   + sum_k lambda_k * ||Psi_k||_{1,off}
/// The off-diagonal 1-norm counts both symmetric entries (2 * sum_{i<j}|.|).
double objective(const FactorSet& s, const Dataset& d, std::span<const double> lambdas);

/// Coordinate-descent working state over standardized data. Exposed so tests
/// and experiments can drive updates one coordinate at a time; fit() is the
/// stock full loop.
class SolverState {
public:
    SolverState(const Dataset& data, SolverConfig cfg);

    /// Zero off-diagonals; w_i = 1/sqrt(a_i) (the diagonal update with no
    /// off-diagonal signal), unless a fixed w was installed.
    void init();

    /// Keeps w frozen at the given field (the known-diagonal setting used by
    /// the consistency theory); diagonal updates become no-ops.
    void set_fixed_w(DenseTensor w);

    /// Adopts existing parameters and rebuilds the cached fields.
    void load(const FactorSet& s);

    /// Exact minimizer of the objective in coordinate c, everything else
    /// fixed. Does not modify state.
    double offdiag_minimizer(const Coord& c) const;

    /// Computes the minimizer, writes it symmetrically, maintains the cached
    /// cross-mode field. Returns |change|.
    double apply_offdiag(const Coord& c);

    /// Closed-form update of every w entry at once (each is the positive root
    /// of a_i w^2 + b_i w - 1 = 0). Returns max |change|; no-op under fixed w.
    double apply_diag();

    double objective_value() const;

    double coordinate(const Coord& c) const {
        return psi_[static_cast<std::size_t>(c.mode)](c.i, c.j);
    }
    FactorSet snapshot() const;

    int var_order() const { return order_; }
    const std::vector<int>& var_shape() const { return shape_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const SolverConfig& config() const { return cfg_; }

private:
    double pair_rhs(const Coord& c) const;  // the soft-threshold argument F
    void add_to_field(const Coord& c, double delta);
    void recompute_field();

    SolverConfig cfg_;
    int order_ = 0;
    int n_ = 0;
    std::size_t m_ = 0;
    std::vector<int> shape_;
    std::vector<std::size_t> stride_;
    std::vector<double> x_;       // n * m, observation-major
    std::vector<double> a_;       // per-variable second moments (1/N sum_s x^2)
    std::vector<std::vector<double>> gram_diag_;  // per mode: (1/N X_(k) X_(k)^T)_{ii}
    std::vector<Eigen::MatrixXd> psi_;
    std::vector<double> w_;
    std::vector<double> y_;  // n * m, cached sum_k X x_k Psi_k^off
    bool w_fixed_ = false;
    std::vector<std::string> warnings_;
};

/// Standalone versions of the two closed-form updates, evaluated against an
/// explicit parameter state (they rebuild the cached fields each call; use
/// SolverState in loops).
double offdiag_update(const FactorSet& s, const Dataset& d, int mode, int i, int j, double lambda);
DenseTensor diag_update(const FactorSet& s, const Dataset& d);

struct FitOptions {
    std::optional<DenseTensor> fixed_w;
    /// Called after every full sweep with the sweep number (1-based) and the
    /// current parameters.
    std::function<void(int, const FactorSet&)> on_sweep;
};

/// Full nodewise coordinate descent: sweeps modes in ascending order and
/// pairs in lexicographic order, then updates the diagonal field, until the
/// max parameter change drops below tol or max_sweeps is hit.
FitReport fit(const Dataset& data, const SolverConfig& cfg, const FitOptions& opts = {});

/// Dense precision matrix (sum_k embed(Psi_k^off) + diag(vec w))^2.
Eigen::MatrixXd reconstruct_omega(const FactorSet& s, std::size_t cap = kMaterializeCap);

}  // namespace sylgl

#endif
