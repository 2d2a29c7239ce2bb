#include "sylgl/kron_ops.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "sylgl/errors.hpp"

namespace sylgl {

SymFactor::SymFactor(Eigen::MatrixXd m) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols()) throw SpecError("SymFactor: matrix must be square");
    for (Eigen::Index i = 0; i < mat_.rows(); ++i)
        for (Eigen::Index j = i + 1; j < mat_.cols(); ++j)
            if (mat_(i, j) != mat_(j, i))
                throw SpecError("SymFactor: matrix not exactly symmetric at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
}

SymFactor SymFactor::symmetrized(const Eigen::MatrixXd& m) {
    return SymFactor(0.5 * (m + m.transpose()));
}

std::vector<int> FactorList::shape() const {
    std::vector<int> s;
    s.reserve(factors.size());
    for (const auto& f : factors) s.push_back(f.size());
    return s;
}

std::size_t FactorList::total_dim() const {
    std::size_t m = 1;
    for (const auto& f : factors) m *= static_cast<std::size_t>(f.size());
    return m;
}

DenseTensor kron_sum_apply(const FactorList& f, const DenseTensor& t) {
    if (f.order() != t.order()) throw SpecError("kron_sum_apply: order mismatch");
    DenseTensor out(t.shape());
    for (int k = 0; k < f.order(); ++k) {
        DenseTensor term = mode_product(t, f.factors[static_cast<std::size_t>(k)].mat(), k);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += term[i];
    }
    return out;
}

Eigen::MatrixXd kron_sum_embed(std::span<const Eigen::MatrixXd> mats, std::size_t cap) {
    std::size_t m = 1;
    for (const auto& a : mats) {
        if (a.rows() != a.cols()) throw SpecError("kron_sum_embed: factors must be square");
        m *= static_cast<std::size_t>(a.rows());
    }
    if (m > cap)
        throw SpecError("materialization size " + std::to_string(m) + " exceeds cap " +
                        std::to_string(cap));

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                static_cast<Eigen::Index>(m));
    std::size_t stride = 1;
    for (const auto& a : mats) {
        const std::size_t mk = static_cast<std::size_t>(a.rows());
        const std::size_t block = stride * mk;
        const std::size_t outer = m / block;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t rk = 0; rk < mk; ++rk)
                for (std::size_t ck = 0; ck < mk; ++ck) {
                    const double v = a(static_cast<Eigen::Index>(rk), static_cast<Eigen::Index>(ck));
                    if (v == 0.0) continue;
                    const std::size_t r0 = o * block + rk * stride;
                    const std::size_t c0 = o * block + ck * stride;
                    for (std::size_t b = 0; b < stride; ++b)
                        out(static_cast<Eigen::Index>(r0 + b), static_cast<Eigen::Index>(c0 + b)) += v;
                }
        stride = block;
    }
    return out;
}

Eigen::MatrixXd kron_sum_materialize(const FactorList& f, std::size_t cap) {
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(f.factors.size());
    for (const auto& fac : f.factors) mats.push_back(fac.mat());
    return kron_sum_embed(mats, cap);
}

Eigen::MatrixXd kron_prod_materialize(const FactorList& f, std::size_t cap) {
    const std::size_t m = f.total_dim();
    if (m > cap)
        throw SpecError("materialization size " + std::to_string(m) + " exceeds cap " +
                        std::to_string(cap));
    const auto shape = f.shape();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            double v = 1.0;
            std::size_t rr = r, cc = c;
            for (int k = 0; k < f.order(); ++k) {
                const std::size_t mk = static_cast<std::size_t>(shape[static_cast<std::size_t>(k)]);
                v *= f.factors[static_cast<std::size_t>(k)](static_cast<int>(rr % mk),
                                                            static_cast<int>(cc % mk));
                rr /= mk;
                cc /= mk;
            }
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    return out;
}

Eigen::MatrixXd squared_ks_precision(const FactorList& f, std::size_t cap) {
    Eigen::MatrixXd m = kron_sum_materialize(f, cap);
    return m * m;
}

bool KsEigen::positive() const { return min_eigensum() > 0.0; }

double KsEigen::min_eigensum() const {
    double lo = eigensum[0];
    for (std::size_t i = 1; i < eigensum.size(); ++i) lo = std::min(lo, eigensum[i]);
    return lo;
}

KsEigen ks_eigen(const FactorList& f) {
    KsEigen out;
    out.basis.reserve(f.factors.size());
    out.eigenvalues.reserve(f.factors.size());
    for (const auto& fac : f.factors) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fac.mat());
        if (es.info() != Eigen::Success)
            throw NumericError("eigendecomposition failed for a mode factor");
        out.basis.push_back(es.eigenvectors());
        out.eigenvalues.push_back(es.eigenvalues());
    }
    DenseTensor lam(f.shape());
    std::vector<int> idx(static_cast<std::size_t>(f.order()), 0);
    for (std::size_t p = 0; p < lam.size(); ++p) {
        double s = 0.0;
        for (int k = 0; k < f.order(); ++k)
            s += out.eigenvalues[static_cast<std::size_t>(k)](idx[static_cast<std::size_t>(k)]);
        lam[p] = s;
        for (int k = 0; k < f.order(); ++k) {
            if (++idx[static_cast<std::size_t>(k)] < lam.dim(k)) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
    }
    out.eigensum = std::move(lam);
    return out;
}

namespace {

DenseTensor spectral_transform(const KsEigen& e, const DenseTensor& t, bool invert) {
    std::vector<Eigen::MatrixXd> ut;
    ut.reserve(e.basis.size());
    for (const auto& u : e.basis) ut.push_back(u.transpose());
    DenseTensor coeff = multi_mode_product(t, ut);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
        if (invert) {
            if (e.eigensum[i] <= 0.0)
                throw NumericError("Kronecker sum is not positive definite (eigenvalue " +
                                   std::to_string(e.eigensum[i]) + ")");
            coeff[i] /= e.eigensum[i];
        } else {
            coeff[i] *= e.eigensum[i];
        }
    }
    return multi_mode_product(coeff, e.basis);
}

}  // namespace

DenseTensor ks_eigen_apply(const KsEigen& e, const DenseTensor& t) {
    return spectral_transform(e, t, false);
}

DenseTensor ks_eigen_solve(const KsEigen& e, const DenseTensor& t) {
    return spectral_transform(e, t, true);
}

}  // namespace sylgl
