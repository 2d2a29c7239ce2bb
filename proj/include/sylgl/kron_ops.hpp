#ifndef SYLGL_KRON_OPS_HPP
#define SYLGL_KRON_OPS_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "sylgl/tensor.hpp"

namespace sylgl {

/// Symmetric square factor for one tensor mode. Exact symmetry is checked at
/// construction; positive definiteness is not (the estimator's outputs need
/// not be PD, sampling checks spectra where it matters).
class SymFactor {
public:
    explicit SymFactor(Eigen::MatrixXd m);

    /// Builds from 0.5*(M + M^T); the average makes both triangles bitwise equal.
    static SymFactor symmetrized(const Eigen::MatrixXd& m);

    int size() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXd& mat() const { return mat_; }
    double operator()(int i, int j) const { return mat_(i, j); }

private:
    Eigen::MatrixXd mat_;
};

/// The ordered per-mode factors Psi_1..Psi_K.
struct FactorList {
    std::vector<SymFactor> factors;

    int order() const { return static_cast<int>(factors.size()); }
    std::vector<int> shape() const;
    std::size_t total_dim() const;
};

/// Default size cap for dense m x m materializations; they exist for tests
/// and desk-scale experiments only.
inline constexpr std::size_t kMaterializeCap = 4096;

/// sum_k T x_k Psi_k. This apply form is the authoritative definition of the
/// Kronecker sum here; materializations are defined to agree with it.
DenseTensor kron_sum_apply(const FactorList& f, const DenseTensor& t);

/// Dense m x m matrix of sum_k I x..x Psi_k x..x I under first-index-fastest
/// vectorization: entry (r,c) is sum_k Psi_k(r_k,c_k) * [r_l == c_l for l != k],
/// where r_k is the mode-k digit of the linear index r. Satisfies
/// M * vectorize(T) == vectorize(kron_sum_apply(F, T)).
Eigen::MatrixXd kron_sum_materialize(const FactorList& f, std::size_t cap = kMaterializeCap);

/// Dense Kronecker product: entry (r,c) = prod_k Psi_k(r_k,c_k).
Eigen::MatrixXd kron_prod_materialize(const FactorList& f, std::size_t cap = kMaterializeCap);

/// The model's precision matrix (kron_sum_materialize(F))^2.
Eigen::MatrixXd squared_ks_precision(const FactorList& f, std::size_t cap = kMaterializeCap);

/// Generalized Kronecker-sum embedding of arbitrary square per-mode matrices
/// (used for materializations and for rebuilding the precision matrix from
/// estimated off-diagonal factors plus a diagonal field).
Eigen::MatrixXd kron_sum_embed(std::span<const Eigen::MatrixXd> mats, std::size_t cap = kMaterializeCap);

/// Per-mode spectral data of the Kronecker sum: Psi_k = U_k diag(l_k) U_k^T
/// and eigensum[i_1..i_K] = sum_k l_k[i_k].
struct KsEigen {
    std::vector<Eigen::MatrixXd> basis;
    std::vector<Eigen::VectorXd> eigenvalues;
    DenseTensor eigensum;

    bool positive() const;
    double min_eigensum() const;
};

KsEigen ks_eigen(const FactorList& f);

/// kron_sum_apply evaluated through the spectral form:
/// U ( eigensum .* (U^T T) ).
DenseTensor ks_eigen_apply(const KsEigen& e, const DenseTensor& t);

/// Solves (kron sum) X = T through the spectral form; requires eigensum > 0.
DenseTensor ks_eigen_solve(const KsEigen& e, const DenseTensor& t);

}  // namespace sylgl

#endif
