#include "sylgl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sylgl/errors.hpp"

namespace sylgl {

SupportMatrix::SupportMatrix(int mode_size) : m_(mode_size) {
    if (mode_size < 1) throw SpecError("SupportMatrix: mode size must be >= 1");
    mask_.assign(static_cast<std::size_t>(mode_size) * (mode_size - 1) / 2, false);
}

std::size_t SupportMatrix::pair_index(int i, int j) const {
    if (i < 0 || j <= i || j >= m_) throw SpecError("SupportMatrix: bad pair index");
    const std::size_t ui = static_cast<std::size_t>(i);
    const std::size_t um = static_cast<std::size_t>(m_);
    return ui * um - ui * (ui + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

std::size_t SupportMatrix::edge_count() const {
    std::size_t n = 0;
    for (bool b : mask_)
        if (b) ++n;
    return n;
}

SupportMatrix support_of(const Eigen::MatrixXd& factor, double eps) {
    if (factor.rows() != factor.cols()) throw SpecError("support_of: matrix must be square");
    if (eps < 0.0) throw SpecError("support_of: eps must be nonnegative");
    const int m = static_cast<int>(factor.rows());
    SupportMatrix s(m);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (std::abs(factor(i, j)) > eps) s.set_edge(i, j, true);
    return s;
}

Confusion confusion(const SupportMatrix& est, const SupportMatrix& truth) {
    if (est.mode_size() != truth.mode_size())
        throw SpecError("confusion: support sizes do not match");
    Confusion c;
    const int m = est.mode_size();
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const bool e = est.edge(i, j);
            const bool t = truth.edge(i, j);
            if (e && t)
                ++c.tp;
            else if (!e && !t)
                ++c.tn;
            else if (e && !t)
                ++c.fp;
            else
                ++c.fn;
        }
    return c;
}

double mcc(const Confusion& c) {
    if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0)
        throw SpecError("mcc: counts must be nonnegative");
    const double d1 = static_cast<double>(c.tp + c.fp);
    const double d2 = static_cast<double>(c.tp + c.fn);
    const double d3 = static_cast<double>(c.tn + c.fp);
    const double d4 = static_cast<double>(c.tn + c.fn);
    if (d1 == 0.0 || d2 == 0.0 || d3 == 0.0 || d4 == 0.0) return 0.0;
    const double num = static_cast<double>(c.tp) * static_cast<double>(c.tn) -
                       static_cast<double>(c.fp) * static_cast<double>(c.fn);
    return num / std::sqrt(d1 * d2 * d3 * d4);
}

Rates fpr_fnr(const Confusion& c) {
    Rates r;
    if (c.fp + c.tn > 0) r.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    if (c.fn + c.tp > 0) r.fnr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
    return r;
}

double rel_frob_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw SpecError("rel_frob_error: shape mismatch");
    const double diff = (a - b).norm();
    if (diff == 0.0) return 0.0;
    const double ref = b.norm();
    if (ref == 0.0) throw SpecError("rel_frob_error: zero-norm reference");
    return diff / ref;
}

SupportMatrix threshold_to_sparsity(const Eigen::MatrixXd& factor, double target) {
    if (factor.rows() != factor.cols())
        throw SpecError("threshold_to_sparsity: matrix must be square");
    if (target < 0.0 || target > 1.0)
        throw SpecError("threshold_to_sparsity: target must be in [0,1]");
    const int m = static_cast<int>(factor.rows());
    SupportMatrix s(m);
    const std::size_t pairs = s.pair_count();
    // Guard against FP slop pushing exact products like 0.1*10 past the ceiling.
    const std::size_t keep = std::min(
        pairs, static_cast<std::size_t>(std::ceil(target * static_cast<double>(pairs) - 1e-9)));
    if (keep == 0) return s;

    struct Entry {
        double mag;
        int i, j;
    };
    std::vector<Entry> entries;
    entries.reserve(pairs);
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) entries.push_back({std::abs(factor(i, j)), i, j});
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.mag != b.mag) return a.mag > b.mag;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    for (std::size_t r = 0; r < keep; ++r) s.set_edge(entries[r].i, entries[r].j, true);
    return s;
}

}  // namespace sylgl
