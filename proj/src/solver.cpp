#include "sylgl/solver.hpp"

#include <cmath>
#include <string>

#include "sylgl/errors.hpp"

namespace sylgl {

void FactorSet::validate() const {
    std::size_t m = 1;
    for (const auto& p : offdiag) {
        if (p.rows() != p.cols()) throw SpecError("FactorSet: factors must be square");
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            if (p(i, i) != 0.0) throw SpecError("FactorSet: factor diagonals must be exactly zero");
            for (Eigen::Index j = i + 1; j < p.cols(); ++j)
                if (p(i, j) != p(j, i)) throw SpecError("FactorSet: factors must be symmetric");
        }
        m *= static_cast<std::size_t>(p.rows());
    }
    if (w.size() != m) throw SpecError("FactorSet: w shape does not match factor sizes");
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!(w[i] > 0.0)) throw SpecError("FactorSet: w entries must be positive");
}

FactorSet FactorSet::from_factors(const FactorList& f) {
    FactorSet s;
    s.offdiag.reserve(f.factors.size());
    for (const auto& fac : f.factors) {
        Eigen::MatrixXd off = fac.mat();
        off.diagonal().setZero();
        s.offdiag.push_back(std::move(off));
    }
    s.w = DenseTensor(f.shape());
    std::vector<int> idx(static_cast<std::size_t>(f.order()), 0);
    for (std::size_t p = 0; p < s.w.size(); ++p) {
        double sum = 0.0;
        for (int k = 0; k < f.order(); ++k) {
            const int i = idx[static_cast<std::size_t>(k)];
            sum += f.factors[static_cast<std::size_t>(k)](i, i);
        }
        s.w[p] = sum;
        for (int k = 0; k < f.order(); ++k) {
            if (++idx[static_cast<std::size_t>(k)] < s.w.dim(k)) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
    }
    return s;
}

double soft_threshold(double x, double t) {
    if (t < 0.0) throw SpecError("soft_threshold: threshold must be nonnegative");
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

namespace {

double offdiag_penalty(const FactorSet& s, std::span<const double> lambdas) {
    double pen = 0.0;
    for (int k = 0; k < s.order(); ++k) {
        const auto& p = s.offdiag[static_cast<std::size_t>(k)];
        double sum = 0.0;
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            for (Eigen::Index j = i + 1; j < p.cols(); ++j) sum += std::abs(p(i, j));
        // ||.||_{1,off} counts both symmetric entries.
        pen += lambdas[static_cast<std::size_t>(k)] * 2.0 * sum;
    }
    return pen;
}

}  // namespace

double objective(const FactorSet& s, const Dataset& d, std::span<const double> lambdas) {
    s.validate();
    if (static_cast<int>(lambdas.size()) != s.order())
        throw SpecError("objective: need one lambda per mode");
    const int n = d.n_obs();
    const std::size_t m = d.var_size();
    if (m != s.w.size()) throw SpecError("objective: data shape does not match parameters");

    double logdet = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        if (!(s.w[p] > 0.0)) throw NumericError("objective: non-positive w entry");
        logdet += std::log(s.w[p]);
    }

    double quad = 0.0;
    for (int obs = 0; obs < n; ++obs) {
        DenseTensor xs = d.sample_tensor(obs);
        DenseTensor y(xs.shape());
        for (int k = 0; k < s.order(); ++k) {
            DenseTensor term = mode_product(xs, s.offdiag[static_cast<std::size_t>(k)], k);
            for (std::size_t p = 0; p < y.size(); ++p) y[p] += term[p];
        }
        for (std::size_t p = 0; p < m; ++p) {
            const double r = s.w[p] * xs[p] + y[p];
            quad += r * r;
        }
    }
    return -static_cast<double>(n) * logdet + 0.5 * quad + offdiag_penalty(s, lambdas);
}

SolverState::SolverState(const Dataset& data, SolverConfig cfg) : cfg_(std::move(cfg)) {
    order_ = data.var_order();
    n_ = data.n_obs();
    m_ = data.var_size();
    shape_ = data.var_shape();
    if (static_cast<int>(cfg_.lambdas.size()) != order_)
        throw SpecError("SolverConfig: need one lambda per mode");
    for (double l : cfg_.lambdas)
        if (l < 0.0) throw SpecError("SolverConfig: lambdas must be nonnegative");
    if (!(cfg_.tol > 0.0)) throw SpecError("SolverConfig: tol must be positive");
    if (cfg_.max_sweeps < 1) throw SpecError("SolverConfig: max_sweeps must be >= 1");

    stride_.resize(static_cast<std::size_t>(order_));
    std::size_t s = 1;
    for (int k = 0; k < order_; ++k) {
        stride_[static_cast<std::size_t>(k)] = s;
        s *= static_cast<std::size_t>(shape_[static_cast<std::size_t>(k)]);
    }

    x_.assign(data.data.values().begin(), data.data.values().end());

    a_.assign(m_, 0.0);
    for (int obs = 0; obs < n_; ++obs) {
        const double* xs = x_.data() + static_cast<std::size_t>(obs) * m_;
        for (std::size_t p = 0; p < m_; ++p) a_[p] += xs[p] * xs[p];
    }
    for (std::size_t p = 0; p < m_; ++p) a_[p] /= n_;

    gram_diag_.resize(static_cast<std::size_t>(order_));
    for (int k = 0; k < order_; ++k) {
        auto& g = gram_diag_[static_cast<std::size_t>(k)];
        g.assign(static_cast<std::size_t>(shape_[static_cast<std::size_t>(k)]), 0.0);
        const std::size_t sk = stride_[static_cast<std::size_t>(k)];
        const std::size_t mk = static_cast<std::size_t>(shape_[static_cast<std::size_t>(k)]);
        for (std::size_t p = 0; p < m_; ++p) g[(p / sk) % mk] += a_[p];
    }

    psi_.clear();
    for (int k = 0; k < order_; ++k) {
        const int mk = shape_[static_cast<std::size_t>(k)];
        psi_.push_back(Eigen::MatrixXd::Zero(mk, mk));
    }
    w_.assign(m_, 1.0);
    y_.assign(static_cast<std::size_t>(n_) * m_, 0.0);
}

void SolverState::set_fixed_w(DenseTensor w) {
    if (w.size() != m_) throw SpecError("set_fixed_w: shape mismatch");
    for (std::size_t p = 0; p < m_; ++p)
        if (!(w[p] > 0.0)) throw SpecError("set_fixed_w: entries must be positive");
    for (std::size_t p = 0; p < m_; ++p) w_[p] = w[p];
    w_fixed_ = true;
}

void SolverState::init() {
    for (auto& p : psi_) p.setZero();
    std::fill(y_.begin(), y_.end(), 0.0);
    if (w_fixed_) return;
    for (std::size_t p = 0; p < m_; ++p) {
        if (a_[p] > 0.0) {
            w_[p] = 1.0 / std::sqrt(a_[p]);
        } else {
            w_[p] = cfg_.w_floor;
            warnings_.push_back("variable " + std::to_string(p) +
                                " is identically zero; w pinned to floor");
        }
    }
}

void SolverState::load(const FactorSet& s) {
    s.validate();
    if (s.order() != order_ || s.w.size() != m_)
        throw SpecError("load: parameter shapes do not match the data");
    for (int k = 0; k < order_; ++k) psi_[static_cast<std::size_t>(k)] = s.offdiag[static_cast<std::size_t>(k)];
    for (std::size_t p = 0; p < m_; ++p) w_[p] = s.w[p];
    recompute_field();
}

void SolverState::recompute_field() {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (int k = 0; k < order_; ++k) {
        const auto& psi = psi_[static_cast<std::size_t>(k)];
        const std::size_t mk = static_cast<std::size_t>(shape_[static_cast<std::size_t>(k)]);
        for (std::size_t i = 0; i < mk; ++i)
            for (std::size_t j = i + 1; j < mk; ++j) {
                const double v = psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (v != 0.0) add_to_field({k, static_cast<int>(i), static_cast<int>(j)}, v);
            }
    }
}

double SolverState::pair_rhs(const Coord& c) const {
    const std::size_t k = static_cast<std::size_t>(c.mode);
    const std::size_t sk = stride_[k];
    const std::size_t mk = static_cast<std::size_t>(shape_[k]);
    const std::size_t blk = sk * mk;
    const std::size_t outer = m_ / blk;
    const double theta = psi_[k](c.i, c.j);

    double num = 0.0;
    for (int obs = 0; obs < n_; ++obs) {
        const std::size_t base = static_cast<std::size_t>(obs) * m_;
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t vi = o * blk + static_cast<std::size_t>(c.i) * sk;
            const std::size_t vj = o * blk + static_cast<std::size_t>(c.j) * sk;
            const double* xi = x_.data() + base + vi;
            const double* xj = x_.data() + base + vj;
            const double* yi = y_.data() + base + vi;
            const double* yj = y_.data() + base + vj;
            const double* wi = w_.data() + vi;
            const double* wj = w_.data() + vj;
            for (std::size_t b = 0; b < sk; ++b) {
                num += (wi[b] * xi[b] + yi[b] - theta * xj[b]) * xj[b] +
                       (wj[b] * xj[b] + yj[b] - theta * xi[b]) * xi[b];
            }
        }
    }
    return -num / n_;
}

double SolverState::offdiag_minimizer(const Coord& c) const {
    if (c.mode < 0 || c.mode >= order_ || c.i < 0 || c.j <= c.i ||
        c.j >= shape_[static_cast<std::size_t>(c.mode)])
        throw SpecError("offdiag coordinate out of range");
    const auto& g = gram_diag_[static_cast<std::size_t>(c.mode)];
    const double denom = g[static_cast<std::size_t>(c.i)] + g[static_cast<std::size_t>(c.j)];
    if (denom == 0.0) return psi_[static_cast<std::size_t>(c.mode)](c.i, c.j);
    const double lambda = cfg_.lambdas[static_cast<std::size_t>(c.mode)];
    // The pair-counted penalty contributes 2*lambda*|theta| to the coordinate
    // objective, hence the 2*lambda/N threshold.
    return soft_threshold(pair_rhs(c), 2.0 * lambda / n_) / denom;
}

void SolverState::add_to_field(const Coord& c, double delta) {
    const std::size_t k = static_cast<std::size_t>(c.mode);
    const std::size_t sk = stride_[k];
    const std::size_t mk = static_cast<std::size_t>(shape_[k]);
    const std::size_t blk = sk * mk;
    const std::size_t outer = m_ / blk;
    for (int obs = 0; obs < n_; ++obs) {
        const std::size_t base = static_cast<std::size_t>(obs) * m_;
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t vi = o * blk + static_cast<std::size_t>(c.i) * sk;
            const std::size_t vj = o * blk + static_cast<std::size_t>(c.j) * sk;
            const double* xi = x_.data() + base + vi;
            const double* xj = x_.data() + base + vj;
            double* yi = y_.data() + base + vi;
            double* yj = y_.data() + base + vj;
            for (std::size_t b = 0; b < sk; ++b) {
                yi[b] += delta * xj[b];
                yj[b] += delta * xi[b];
            }
        }
    }
}

double SolverState::apply_offdiag(const Coord& c) {
    const auto& g = gram_diag_[static_cast<std::size_t>(c.mode)];
    if (g[static_cast<std::size_t>(c.i)] + g[static_cast<std::size_t>(c.j)] == 0.0) {
        warnings_.push_back("mode " + std::to_string(c.mode) + " pair (" + std::to_string(c.i) +
                            "," + std::to_string(c.j) +
                            "): both variables identically zero; update skipped");
        return 0.0;
    }
    const double theta_old = psi_[static_cast<std::size_t>(c.mode)](c.i, c.j);
    const double theta_new = offdiag_minimizer(c);
    if (theta_new != theta_old) {
        add_to_field(c, theta_new - theta_old);
        psi_[static_cast<std::size_t>(c.mode)](c.i, c.j) = theta_new;
        psi_[static_cast<std::size_t>(c.mode)](c.j, c.i) = theta_new;
    }
    return std::abs(theta_new - theta_old);
}

double SolverState::apply_diag() {
    if (w_fixed_) return 0.0;
    std::vector<double> b(m_, 0.0);
    for (int obs = 0; obs < n_; ++obs) {
        const double* xs = x_.data() + static_cast<std::size_t>(obs) * m_;
        const double* ys = y_.data() + static_cast<std::size_t>(obs) * m_;
        for (std::size_t p = 0; p < m_; ++p) b[p] += xs[p] * ys[p];
    }
    double max_change = 0.0;
    for (std::size_t p = 0; p < m_; ++p) {
        double w_new;
        if (a_[p] > 0.0) {
            const double bp = b[p] / n_;
            w_new = (-bp + std::sqrt(bp * bp + 4.0 * a_[p])) / (2.0 * a_[p]);
        } else {
            w_new = cfg_.w_floor;
        }
        max_change = std::max(max_change, std::abs(w_new - w_[p]));
        w_[p] = w_new;
    }
    return max_change;
}

double SolverState::objective_value() const {
    double logdet = 0.0;
    for (std::size_t p = 0; p < m_; ++p) {
        if (!(w_[p] > 0.0)) throw NumericError("objective: non-positive w entry");
        logdet += std::log(w_[p]);
    }
    double quad = 0.0;
    for (int obs = 0; obs < n_; ++obs) {
        const double* xs = x_.data() + static_cast<std::size_t>(obs) * m_;
        const double* ys = y_.data() + static_cast<std::size_t>(obs) * m_;
        for (std::size_t p = 0; p < m_; ++p) {
            const double r = w_[p] * xs[p] + ys[p];
            quad += r * r;
        }
    }
    double pen = 0.0;
    for (int k = 0; k < order_; ++k) {
        const auto& psi = psi_[static_cast<std::size_t>(k)];
        double sum = 0.0;
        for (Eigen::Index i = 0; i < psi.rows(); ++i)
            for (Eigen::Index j = i + 1; j < psi.cols(); ++j) sum += std::abs(psi(i, j));
        pen += cfg_.lambdas[static_cast<std::size_t>(k)] * 2.0 * sum;
    }
    return -static_cast<double>(n_) * logdet + 0.5 * quad + pen;
}

FactorSet SolverState::snapshot() const {
    FactorSet s;
    s.offdiag = psi_;
    s.w = DenseTensor(shape_, std::vector<double>(w_.begin(), w_.end()));
    return s;
}

double offdiag_update(const FactorSet& s, const Dataset& d, int mode, int i, int j, double lambda) {
    SolverConfig cfg;
    cfg.lambdas.assign(static_cast<std::size_t>(s.order()), 0.0);
    cfg.lambdas[static_cast<std::size_t>(mode)] = lambda;
    SolverState st(d, cfg);
    st.load(s);
    return st.offdiag_minimizer({mode, i, j});
}

DenseTensor diag_update(const FactorSet& s, const Dataset& d) {
    SolverConfig cfg;
    cfg.lambdas.assign(static_cast<std::size_t>(s.order()), 0.0);
    SolverState st(d, cfg);
    st.load(s);
    st.apply_diag();
    return st.snapshot().w;
}

FitReport fit(const Dataset& data, const SolverConfig& cfg, const FitOptions& opts) {
    if (data.n_obs() < 1) throw SpecError("fit: need at least one observation");
    SolverState st(data, cfg);

    FitReport report;

    // Standardization check: complain (but proceed) when means are off.
    {
        const std::size_t m = data.var_size();
        double worst = 0.0;
        for (std::size_t p = 0; p < m; ++p) {
            double mean = 0.0;
            for (int s = 0; s < data.n_obs(); ++s) mean += data.sample(s)[p];
            worst = std::max(worst, std::abs(mean / data.n_obs()));
        }
        if (worst > 1e-8)
            report.warnings.push_back("data does not look standardized (max |mean| = " +
                                      std::to_string(worst) + ")");
    }

    if (opts.fixed_w) st.set_fixed_w(*opts.fixed_w);
    st.init();
    report.objective_trace.push_back(st.objective_value());

    const auto& shape = st.var_shape();
    int sweep = 0;
    bool converged = false;
    for (sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        double delta = 0.0;
        for (int k = 0; k < st.var_order(); ++k) {
            const int mk = shape[static_cast<std::size_t>(k)];
            for (int i = 0; i < mk - 1; ++i)
                for (int j = i + 1; j < mk; ++j)
                    delta = std::max(delta, st.apply_offdiag({k, i, j}));
        }
        delta = std::max(delta, st.apply_diag());

        const double obj = st.objective_value();
        if (!std::isfinite(obj))
            throw NumericError("fit: non-finite objective at sweep " + std::to_string(sweep));
        report.objective_trace.push_back(obj);
        report.delta_trace.push_back(delta);
        if (opts.on_sweep) opts.on_sweep(sweep, st.snapshot());

        if (delta < cfg.tol) {
            converged = true;
            break;
        }
    }

    report.sweeps = std::min(sweep, cfg.max_sweeps);
    report.converged = converged;
    report.termination = converged ? "tolerance" : "max_sweeps";
    report.factors = st.snapshot();
    for (const auto& wmsg : st.warnings()) report.warnings.push_back(wmsg);
    return report;
}

Eigen::MatrixXd reconstruct_omega(const FactorSet& s, std::size_t cap) {
    s.validate();
    Eigen::MatrixXd m = kron_sum_embed(s.offdiag, cap);
    for (std::size_t p = 0; p < s.w.size(); ++p)
        m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) += s.w[p];
    return m * m;
}

}  // namespace sylgl
