#ifndef SYLGL_SYNTH_HPP
#define SYLGL_SYNTH_HPP

#include <Eigen/Cholesky>
#include <cstdint>
#include <vector>

#include "sylgl/kron_ops.hpp"
#include "sylgl/tensor.hpp"

namespace sylgl {

/// N i.i.d. observations of a K-mode tensor, stored as one (K+1)-mode tensor
/// with the observation mode LAST. With first-index-fastest storage each
/// observation is a contiguous block of var_size() doubles.
struct Dataset {
    DenseTensor data;

    static Dataset from_tensor(DenseTensor t);

    int n_obs() const { return data.dim(data.order() - 1); }
    int var_order() const { return data.order() - 1; }
    std::vector<int> var_shape() const;
    std::size_t var_size() const { return data.size() / static_cast<std::size_t>(n_obs()); }

    const double* sample(int s) const { return data.data() + static_cast<std::size_t>(s) * var_size(); }
    double* sample(int s) { return data.data() + static_cast<std::size_t>(s) * var_size(); }

    /// Copy of one observation as a K-mode tensor.
    DenseTensor sample_tensor(int s) const;
};

enum class GraphKind { Ar1, StarBlock, ErdosRenyi };

struct GraphSpec {
    GraphKind kind = GraphKind::Ar1;
    int mode_size = 1;
    double rho = 0.0;        // Ar1, StarBlock
    int block_size = 1;      // StarBlock; must divide mode_size
    int edge_count = 0;      // ErdosRenyi
    std::uint64_t seed = 0;  // ErdosRenyi
};

/// Precision factor of an AR(1) covariance A = (rho^|i-j|): the exact
/// tridiagonal inverse, boundary diagonal 1/(1-rho^2), interior diagonal
/// (1+rho^2)/(1-rho^2), off-diagonal -rho/(1-rho^2).
SymFactor gen_ar1(int m, double rho);

/// Precision factor of a block-diagonal star covariance. Each block's hub is
/// the block's first index; A has 1 on the diagonal, rho on hub-leaf pairs,
/// rho^2 on leaf-leaf pairs. The inverse is star-supported within blocks.
SymFactor gen_star_block(int m, int block_size, double rho);

/// Diagonally dominant precision: start from 0.25*I, pick `edge_count`
/// distinct upper-triangle pairs uniformly, per edge draw psi ~ U[0.6,0.8],
/// subtract psi from both symmetric entries and add psi to both diagonals.
SymFactor gen_erdos_renyi(int m, int edge_count, std::uint64_t seed);

SymFactor make_factor(const GraphSpec& spec);

/// Draws N observations of the model sum_k X x_k Psi_k = T with standard
/// normal T, through the per-mode spectral solve. Requires the Kronecker sum
/// to be positive definite. Observation s uses RNG substream s of `seed`.
Dataset sample_sylvester(const FactorList& f, int n, std::uint64_t seed);

struct SylvesterDraw {
    Dataset x;
    Dataset noise;  // the T tensors actually used, same layout as x
};
SylvesterDraw sample_sylvester_with_noise(const FactorList& f, int n, std::uint64_t seed);

/// Gaussian sampler for an explicit dense precision matrix (desk scale
/// only); factors once, draws many. Used for the mismatch study generators.
class PrecisionSampler {
public:
    explicit PrecisionSampler(const Eigen::MatrixXd& omega);

    /// N observations reshaped to `shape`; observation s uses substream s.
    Dataset draw(const std::vector<int>& shape, int n, std::uint64_t seed) const;

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

Dataset sample_from_precision(const Eigen::MatrixXd& omega, const std::vector<int>& shape, int n,
                              std::uint64_t seed);

struct Standardized {
    Dataset data;
    /// Linear variable indices whose sample variance was zero: centered,
    /// left unscaled.
    std::vector<std::size_t> constant_variables;
};

/// Center and scale every variable position across the observation mode so
/// that its mean is 0 and its (1/N-denominator) standard deviation is 1.
Standardized standardize(const Dataset& d);

}  // namespace sylgl

#endif
