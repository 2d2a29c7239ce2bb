#ifndef SYLGL_METRICS_HPP
#define SYLGL_METRICS_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace sylgl {

/// Declared edge set over the strict upper triangle of an m x m factor.
class SupportMatrix {
public:
    explicit SupportMatrix(int mode_size);

    int mode_size() const { return m_; }
    std::size_t pair_count() const { return mask_.size(); }

    bool edge(int i, int j) const { return mask_[pair_index(i, j)]; }
    void set_edge(int i, int j, bool on) { mask_[pair_index(i, j)] = on; }
    std::size_t edge_count() const;

    std::size_t pair_index(int i, int j) const;

private:
    int m_;
    std::vector<bool> mask_;  // strict upper triangle, row by row
};

struct Confusion {
    long tp = 0;
    long tn = 0;
    long fp = 0;
    long fn = 0;
};

/// Edges are entries with |value| > eps, i < j.
SupportMatrix support_of(const Eigen::MatrixXd& factor, double eps = 1e-8);

Confusion confusion(const SupportMatrix& est, const SupportMatrix& truth);

/// Matthews correlation coefficient; 0 when any factor of the denominator
/// vanishes.
double mcc(const Confusion& c);

struct Rates {
    double fpr = 0.0;
    double fnr = 0.0;
};

/// FPR = FP/(FP+TN), FNR = FN/(FN+TP); a rate with an empty denominator is 0.
Rates fpr_fnr(const Confusion& c);

/// ||A - B||_F / ||B||_F. Exact equality returns 0 even for a zero reference;
/// otherwise a zero-norm reference is an error.
double rel_frob_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Keeps the ceil(target * m(m-1)/2) largest off-diagonal entries by absolute
/// value; ties are broken toward the lexicographically smaller (i,j).
SupportMatrix threshold_to_sparsity(const Eigen::MatrixXd& factor, double target);

}  // namespace sylgl

#endif
