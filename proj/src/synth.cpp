#include "sylgl/synth.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numeric>
#include <string>

#include "sylgl/errors.hpp"
#include "sylgl/rng.hpp"

namespace sylgl {

Dataset Dataset::from_tensor(DenseTensor t) {
    if (t.order() < 2)
        throw SpecError("a dataset tensor needs at least 2 modes (variables + observations)");
    return Dataset{std::move(t)};
}

std::vector<int> Dataset::var_shape() const {
    return std::vector<int>(data.shape().begin(), data.shape().end() - 1);
}

DenseTensor Dataset::sample_tensor(int s) const {
    DenseTensor t(var_shape());
    const double* src = sample(s);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = src[i];
    return t;
}

SymFactor gen_ar1(int m, double rho) {
    if (m < 1) throw SpecError("gen_ar1: m must be >= 1");
    if (!(rho > 0.0 && rho < 1.0)) throw SpecError("gen_ar1: rho must be in (0,1)");
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(m, m);
    if (m == 1) {
        psi(0, 0) = 1.0;
        return SymFactor(std::move(psi));
    }
    const double denom = 1.0 - rho * rho;
    const double boundary = 1.0 / denom;
    const double interior = (1.0 + rho * rho) / denom;
    const double off = -rho / denom;
    for (int i = 0; i < m; ++i) psi(i, i) = (i == 0 || i == m - 1) ? boundary : interior;
    for (int i = 0; i + 1 < m; ++i) {
        psi(i, i + 1) = off;
        psi(i + 1, i) = off;
    }
    return SymFactor(std::move(psi));
}

SymFactor gen_star_block(int m, int block_size, double rho) {
    if (m < 1) throw SpecError("gen_star_block: m must be >= 1");
    if (block_size < 1 || m % block_size != 0)
        throw SpecError("gen_star_block: block_size must divide m");
    if (!(rho > 0.0 && rho < 1.0)) throw SpecError("gen_star_block: rho must be in (0,1)");

    const int b = block_size;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(b, b, rho * rho);
    for (int i = 0; i < b; ++i) cov(i, i) = 1.0;
    for (int j = 1; j < b; ++j) {
        cov(0, j) = rho;
        cov(j, 0) = rho;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw SpecError("gen_star_block: covariance block not positive definite "
                        "(rho too large for this block size)");
    Eigen::MatrixXd block = llt.solve(Eigen::MatrixXd::Identity(b, b));
    block = 0.5 * (block + block.transpose().eval());

    // Invert one block, replicate it; blocks are identical by construction.
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(m, m);
    for (int s = 0; s < m; s += b) psi.block(s, s, b, b) = block;
    return SymFactor(std::move(psi));
}

SymFactor gen_erdos_renyi(int m, int edge_count, std::uint64_t seed) {
    if (m < 1) throw SpecError("gen_erdos_renyi: m must be >= 1");
    const std::size_t pairs = static_cast<std::size_t>(m) * (m - 1) / 2;
    if (edge_count < 0 || static_cast<std::size_t>(edge_count) > pairs)
        throw SpecError("gen_erdos_renyi: edge_count out of range [0, m(m-1)/2]");

    Eigen::MatrixXd a = 0.25 * Eigen::MatrixXd::Identity(m, m);
    if (edge_count > 0) {
        // Partial Fisher-Yates over all upper-triangle pair ids: the first
        // edge_count slots are a uniform sample without replacement.
        std::vector<std::size_t> ids(pairs);
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        Xoshiro256pp rng = substream(seed, 0);
        for (int e = 0; e < edge_count; ++e) {
            const std::size_t j =
                static_cast<std::size_t>(e) + rng.below(pairs - static_cast<std::size_t>(e));
            std::swap(ids[static_cast<std::size_t>(e)], ids[j]);
        }
        for (int e = 0; e < edge_count; ++e) {
            // Decode pair id to (i,j), i<j, ids enumerated row by row.
            std::size_t id = ids[static_cast<std::size_t>(e)];
            int i = 0;
            std::size_t row_len = static_cast<std::size_t>(m - 1);
            while (id >= row_len) {
                id -= row_len;
                ++i;
                --row_len;
            }
            const int j = i + 1 + static_cast<int>(id);
            const double psi = rng.uniform(0.6, 0.8);
            a(i, j) -= psi;
            a(j, i) -= psi;
            a(i, i) += psi;
            a(j, j) += psi;
        }
    }
    return SymFactor(std::move(a));
}

SymFactor make_factor(const GraphSpec& spec) {
    switch (spec.kind) {
        case GraphKind::Ar1:
            return gen_ar1(spec.mode_size, spec.rho);
        case GraphKind::StarBlock:
            return gen_star_block(spec.mode_size, spec.block_size, spec.rho);
        case GraphKind::ErdosRenyi:
            return gen_erdos_renyi(spec.mode_size, spec.edge_count, spec.seed);
    }
    throw SpecError("make_factor: unknown graph kind");
}

namespace {

Dataset empty_dataset(const std::vector<int>& var_shape, int n) {
    std::vector<int> shape = var_shape;
    shape.push_back(n);
    return Dataset{DenseTensor(std::move(shape))};
}

}  // namespace

SylvesterDraw sample_sylvester_with_noise(const FactorList& f, int n, std::uint64_t seed) {
    if (n < 1) throw SpecError("sample_sylvester: n must be >= 1");
    KsEigen eig = ks_eigen(f);
    if (!eig.positive())
        throw NumericError("sample_sylvester: Kronecker sum not positive definite "
                           "(min eigenvalue sum " + std::to_string(eig.min_eigensum()) + ")");
    const auto shape = f.shape();
    SylvesterDraw out{empty_dataset(shape, n), empty_dataset(shape, n)};
    const std::size_t m = out.x.var_size();
    for (int s = 0; s < n; ++s) {
        GaussianStream g(substream(seed, static_cast<std::uint64_t>(s)));
        DenseTensor noise(shape);
        for (std::size_t i = 0; i < m; ++i) noise[i] = g.next();
        DenseTensor x = ks_eigen_solve(eig, noise);
        double* xd = out.x.sample(s);
        double* td = out.noise.sample(s);
        for (std::size_t i = 0; i < m; ++i) {
            xd[i] = x[i];
            td[i] = noise[i];
        }
    }
    return out;
}

Dataset sample_sylvester(const FactorList& f, int n, std::uint64_t seed) {
    return sample_sylvester_with_noise(f, n, seed).x;
}

PrecisionSampler::PrecisionSampler(const Eigen::MatrixXd& omega) : llt_(omega) {
    if (omega.rows() != omega.cols())
        throw SpecError("PrecisionSampler: precision matrix must be square");
    if (llt_.info() != Eigen::Success)
        throw NumericError("PrecisionSampler: precision matrix not positive definite");
}

Dataset PrecisionSampler::draw(const std::vector<int>& shape, int n, std::uint64_t seed) const {
    if (n < 1) throw SpecError("PrecisionSampler: n must be >= 1");
    std::size_t m = 1;
    for (int d : shape) m *= static_cast<std::size_t>(d);
    if (static_cast<std::size_t>(llt_.rows()) != m)
        throw SpecError("PrecisionSampler: shape does not match precision matrix");

    Dataset out = empty_dataset(shape, n);
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (int s = 0; s < n; ++s) {
        GaussianStream g(substream(seed, static_cast<std::uint64_t>(s)));
        for (std::size_t i = 0; i < m; ++i) z(static_cast<Eigen::Index>(i)) = g.next();
        // omega = L L^T, so L^{-T} z has covariance omega^{-1}.
        Eigen::VectorXd x = llt_.matrixU().solve(z);
        double* xd = out.sample(s);
        for (std::size_t i = 0; i < m; ++i) xd[i] = x(static_cast<Eigen::Index>(i));
    }
    return out;
}

Dataset sample_from_precision(const Eigen::MatrixXd& omega, const std::vector<int>& shape, int n,
                              std::uint64_t seed) {
    return PrecisionSampler(omega).draw(shape, n, seed);
}

Standardized standardize(const Dataset& d) {
    const int n = d.n_obs();
    if (n < 2) throw SpecError("standardize: need at least 2 observations");
    const std::size_t m = d.var_size();
    Standardized out{Dataset{DenseTensor(d.data.shape())}, {}};

    for (std::size_t p = 0; p < m; ++p) {
        double mean = 0.0;
        for (int s = 0; s < n; ++s) mean += d.sample(s)[p];
        mean /= n;
        double var = 0.0;
        for (int s = 0; s < n; ++s) {
            const double c = d.sample(s)[p] - mean;
            var += c * c;
        }
        var /= n;
        const double sd = std::sqrt(var);
        if (sd == 0.0) {
            out.constant_variables.push_back(p);
            for (int s = 0; s < n; ++s) out.data.sample(s)[p] = d.sample(s)[p] - mean;
        } else {
            for (int s = 0; s < n; ++s) out.data.sample(s)[p] = (d.sample(s)[p] - mean) / sd;
        }
    }
    return out;
}

}  // namespace sylgl
