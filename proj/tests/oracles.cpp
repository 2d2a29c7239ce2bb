#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace sylgl::test {

std::vector<int> decode_index(std::size_t lin, const std::vector<int>& shape) {
    std::vector<int> idx(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) {
        idx[k] = static_cast<int>(lin % static_cast<std::size_t>(shape[k]));
        lin /= static_cast<std::size_t>(shape[k]);
    }
    return idx;
}

std::size_t encode_index(const std::vector<int>& idx, const std::vector<int>& shape) {
    std::size_t lin = 0;
    for (std::size_t k = shape.size(); k-- > 0;)
        lin = lin * static_cast<std::size_t>(shape[k]) + static_cast<std::size_t>(idx[k]);
    return lin;
}

Eigen::MatrixXd oracle_mode_matrix(const std::vector<int>& shape, const Eigen::MatrixXd& a,
                                   int mode) {
    std::size_t m = 1;
    for (int d : shape) m *= static_cast<std::size_t>(d);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) {
        const auto ri = decode_index(r, shape);
        for (std::size_t c = 0; c < m; ++c) {
            const auto ci = decode_index(c, shape);
            bool same = true;
            for (std::size_t k = 0; k < shape.size(); ++k)
                if (static_cast<int>(k) != mode && ri[k] != ci[k]) same = false;
            if (same)
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    a(ri[static_cast<std::size_t>(mode)], ci[static_cast<std::size_t>(mode)]);
        }
    }
    return out;
}

Eigen::MatrixXd oracle_kron_sum_dense(const std::vector<int>& shape,
                                      const std::vector<Eigen::MatrixXd>& factors) {
    std::size_t m = 1;
    for (int d : shape) m *= static_cast<std::size_t>(d);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < shape.size(); ++k)
        out += oracle_mode_matrix(shape, factors[k], static_cast<int>(k));
    return out;
}

namespace {

/// y at one variable position of one observation, straight from the
/// autoregression: sum_k sum_{j != i_k} psi_k(i_k, j) * x(..., j, ...).
double field_at(const FactorSet& s, const Dataset& d, const std::vector<int>& shape, int obs,
                const std::vector<int>& idx) {
    double y = 0.0;
    std::vector<int> other = idx;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        const auto& psi = s.offdiag[k];
        for (int j = 0; j < shape[k]; ++j) {
            if (j == idx[k]) continue;
            other[k] = j;
            y += psi(idx[k], j) * d.sample(obs)[encode_index(other, shape)];
        }
        other[k] = idx[k];
    }
    return y;
}

}  // namespace

double naive_smooth(const FactorSet& s, const Dataset& d) {
    const auto shape = d.var_shape();
    const std::size_t m = d.var_size();
    double logdet = 0.0;
    for (std::size_t p = 0; p < m; ++p) logdet += std::log(s.w[p]);
    double quad = 0.0;
    for (int obs = 0; obs < d.n_obs(); ++obs) {
        for (std::size_t p = 0; p < m; ++p) {
            const auto idx = decode_index(p, shape);
            const double r = s.w[p] * d.sample(obs)[p] + field_at(s, d, shape, obs, idx);
            quad += r * r;
        }
    }
    return -static_cast<double>(d.n_obs()) * logdet + 0.5 * quad;
}

double naive_objective(const FactorSet& s, const Dataset& d, const std::vector<double>& lambdas) {
    double pen = 0.0;
    for (std::size_t k = 0; k < s.offdiag.size(); ++k) {
        const auto& psi = s.offdiag[k];
        for (Eigen::Index i = 0; i < psi.rows(); ++i)
            for (Eigen::Index j = 0; j < psi.cols(); ++j)
                if (i != j) pen += lambdas[k] * std::abs(psi(i, j));
    }
    return naive_smooth(s, d) + pen;
}

namespace {

struct Packed {
    // beta: strict upper triangles mode by mode, row-major; then w.
    std::vector<double> v;
};

struct Packing {
    std::vector<int> shape;
    std::size_t m = 0;
    std::vector<std::size_t> mode_offset;
    std::size_t beta_dim = 0;

    explicit Packing(const std::vector<int>& sh) : shape(sh) {
        m = 1;
        for (int d : sh) m *= static_cast<std::size_t>(d);
        std::size_t off = 0;
        for (int d : sh) {
            mode_offset.push_back(off);
            off += static_cast<std::size_t>(d) * (d - 1) / 2;
        }
        beta_dim = off;
    }

    std::size_t pair_slot(std::size_t k, int i, int j) const {
        const int mk = shape[k];
        const std::size_t ui = static_cast<std::size_t>(i);
        return mode_offset[k] + ui * static_cast<std::size_t>(mk) - ui * (ui + 1) / 2 +
               static_cast<std::size_t>(j - i - 1);
    }

    FactorSet unpack(const std::vector<double>& v) const {
        FactorSet s;
        for (std::size_t k = 0; k < shape.size(); ++k) {
            Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(shape[k], shape[k]);
            for (int i = 0; i < shape[k]; ++i)
                for (int j = i + 1; j < shape[k]; ++j) {
                    const double x = v[pair_slot(k, i, j)];
                    psi(i, j) = x;
                    psi(j, i) = x;
                }
            s.offdiag.push_back(std::move(psi));
        }
        std::vector<double> w(v.begin() + static_cast<std::ptrdiff_t>(beta_dim), v.end());
        s.w = DenseTensor(shape, std::move(w));
        return s;
    }
};

}  // namespace

ProxGradResult prox_grad_minimize(const Dataset& d, const std::vector<double>& lambdas,
                                  int max_iters, double tol) {
    const Packing pk(d.var_shape());
    const int n = d.n_obs();
    const std::size_t m = pk.m;
    const std::size_t dim = pk.beta_dim + m;
    constexpr double w_min = 1e-10;

    // Smooth part value and gradient at a packed point.
    auto smooth = [&](const std::vector<double>& v, std::vector<double>* grad) {
        FactorSet s = pk.unpack(v);
        if (grad) grad->assign(dim, 0.0);
        double logdet = 0.0;
        for (std::size_t p = 0; p < m; ++p) logdet += std::log(v[pk.beta_dim + p]);
        double quad = 0.0;
        for (int obs = 0; obs < n; ++obs) {
            for (std::size_t p = 0; p < m; ++p) {
                const auto idx = decode_index(p, pk.shape);
                const double xval = d.sample(obs)[p];
                const double r = v[pk.beta_dim + p] * xval + field_at(s, d, pk.shape, obs, idx);
                quad += r * r;
                if (!grad) continue;
                (*grad)[pk.beta_dim + p] += r * xval;
                // d r / d beta_{k,(a,b)} is x at the paired position when one
                // of (a,b) equals this position's digit.
                std::vector<int> other = idx;
                for (std::size_t k = 0; k < pk.shape.size(); ++k) {
                    const int ik = idx[k];
                    for (int j = 0; j < pk.shape[k]; ++j) {
                        if (j == ik) continue;
                        other[k] = j;
                        const double xj = d.sample(obs)[encode_index(other, pk.shape)];
                        const int a = std::min(ik, j), b = std::max(ik, j);
                        (*grad)[pk.pair_slot(k, a, b)] += r * xj;
                    }
                    other[k] = ik;
                }
            }
        }
        if (grad)
            for (std::size_t p = 0; p < m; ++p)
                (*grad)[pk.beta_dim + p] += -static_cast<double>(n) / v[pk.beta_dim + p];
        return -static_cast<double>(n) * logdet + 0.5 * quad;
    };

    auto penalty = [&](const std::vector<double>& v) {
        double pen = 0.0;
        for (std::size_t k = 0; k < pk.shape.size(); ++k)
            for (int i = 0; i < pk.shape[k]; ++i)
                for (int j = i + 1; j < pk.shape[k]; ++j)
                    pen += 2.0 * lambdas[k] * std::abs(v[pk.pair_slot(k, i, j)]);
        return pen;
    };

    auto prox = [&](std::vector<double> v, double step) {
        for (std::size_t k = 0; k < pk.shape.size(); ++k)
            for (int i = 0; i < pk.shape[k]; ++i)
                for (int j = i + 1; j < pk.shape[k]; ++j) {
                    double& x = v[pk.pair_slot(k, i, j)];
                    x = soft_threshold(x, step * 2.0 * lambdas[k]);
                }
        for (std::size_t p = 0; p < m; ++p)
            v[pk.beta_dim + p] = std::max(v[pk.beta_dim + p], w_min);
        return v;
    };

    // Start at zero couplings, w = 1 (any interior point works).
    std::vector<double> x(dim, 0.0);
    for (std::size_t p = 0; p < m; ++p) x[pk.beta_dim + p] = 1.0;
    std::vector<double> z = x;  // accelerated point
    double t_acc = 1.0;
    double step = 1.0;
    std::vector<double> grad;
    double fz = smooth(z, &grad);
    double best_obj = fz + penalty(x);
    int it = 0;
    bool converged = false;

    for (it = 1; it <= max_iters; ++it) {
        // Backtracking line search from the accelerated point.
        std::vector<double> x_new;
        for (;;) {
            std::vector<double> cand(dim);
            for (std::size_t i = 0; i < dim; ++i) cand[i] = z[i] - step * grad[i];
            cand = prox(std::move(cand), step);
            double q = 0.0, dd = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double diff = cand[i] - z[i];
                q += grad[i] * diff;
                dd += diff * diff;
            }
            const double f_cand = smooth(cand, nullptr);
            if (f_cand <= fz + q + dd / (2.0 * step) + 1e-14 * std::abs(fz)) {
                x_new = std::move(cand);
                break;
            }
            step *= 0.5;
            if (step < 1e-18) {
                x_new = z;
                break;
            }
        }

        double change = 0.0;
        for (std::size_t i = 0; i < dim; ++i) change = std::max(change, std::abs(x_new[i] - x[i]));

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
        std::vector<double> z_next(dim);
        for (std::size_t i = 0; i < dim; ++i)
            z_next[i] = x_new[i] + ((t_acc - 1.0) / t_next) * (x_new[i] - x[i]);
        z_next = prox(std::move(z_next), 0.0);  // keep w positive only

        const double obj_new = smooth(x_new, nullptr) + penalty(x_new);
        if (obj_new > best_obj + 1e-12) {
            // Restart acceleration when the objective backslides.
            z_next = x_new;
            t_acc = 1.0;
        } else {
            t_acc = t_next;
            best_obj = std::min(best_obj, obj_new);
        }

        x = std::move(x_new);
        z = std::move(z_next);
        fz = smooth(z, &grad);

        if (change < tol * std::max(1.0, std::abs(best_obj))) {
            converged = true;
            break;
        }
        step *= 2.0;  // allow the step to grow back
    }

    ProxGradResult result;
    result.factors = pk.unpack(x);
    result.objective = smooth(x, nullptr) + penalty(x);
    result.iterations = it;
    result.converged = converged;
    return result;
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

DenseTensor random_tensor(const std::vector<int>& shape, Xoshiro256pp& rng) {
    DenseTensor t(shape);
    GaussianStream g(rng);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = g.next();
    // Advance the caller's stream so successive calls differ.
    rng = Xoshiro256pp(rng.next());
    return t;
}

Eigen::MatrixXd random_symmetric(int m, Xoshiro256pp& rng) {
    Eigen::MatrixXd a(m, m);
    GaussianStream g(rng);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            const double v = g.next();
            a(i, j) = v;
            a(j, i) = v;
        }
    rng = Xoshiro256pp(rng.next());
    return a;
}

SymFactor random_spd_factor(int m, Xoshiro256pp& rng) {
    Eigen::MatrixXd g(m, m);
    GaussianStream gs(rng);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g(i, j) = gs.next();
    Eigen::MatrixXd a = (g * g.transpose()) / static_cast<double>(m);
    a += 0.5 * Eigen::MatrixXd::Identity(m, m);
    rng = Xoshiro256pp(rng.next());
    return SymFactor::symmetrized(a);
}

FactorList random_spd_factors(const std::vector<int>& shape, Xoshiro256pp& rng) {
    FactorList f;
    for (int d : shape) f.factors.push_back(random_spd_factor(d, rng));
    return f;
}

Dataset random_dataset(const std::vector<int>& var_shape, int n, Xoshiro256pp& rng) {
    std::vector<int> shape = var_shape;
    shape.push_back(n);
    return Dataset{random_tensor(shape, rng)};
}

FactorSet random_factor_set(const std::vector<int>& shape, Xoshiro256pp& rng) {
    FactorSet s;
    GaussianStream g(rng);
    for (int d : shape) {
        Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                const double v = 0.3 * g.next();
                psi(i, j) = v;
                psi(j, i) = v;
            }
        s.offdiag.push_back(std::move(psi));
    }
    std::size_t m = 1;
    for (int d : shape) m *= static_cast<std::size_t>(d);
    std::vector<double> w(m);
    for (auto& v : w) v = 0.5 + 1.5 * (0.5 + 0.5 * std::tanh(g.next()));
    s.w = DenseTensor(shape, std::move(w));
    rng = Xoshiro256pp(rng.next());
    return s;
}

}  // namespace sylgl::test
