#ifndef SYLGL_TENSOR_HPP
#define SYLGL_TENSOR_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace sylgl {

/// Dense K-mode tensor of doubles. Storage is linearized with the FIRST
/// index varying fastest: lin(i_0,...,i_{K-1}) = i_0 + m_0*(i_1 + m_1*(...)).
/// Every module in this library assumes that order; modes are 0-based.
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(std::vector<int> shape);
    DenseTensor(std::vector<int> shape, std::vector<double> values);

    int order() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int mode) const { return shape_[static_cast<std::size_t>(mode)]; }
    std::size_t size() const { return values_.size(); }

    /// Distance in the linear storage between neighbors along `mode`.
    std::size_t stride(int mode) const { return strides_[static_cast<std::size_t>(mode)]; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    std::size_t linear_index(std::span<const int> idx) const;
    double at(std::span<const int> idx) const { return values_[linear_index(idx)]; }
    double& at(std::span<const int> idx) { return values_[linear_index(idx)]; }

    bool same_shape(const DenseTensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<int> shape_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

/// Mode-k unfolding. Column c holds a mode-k fiber; the remaining indices
/// decode from c with the lowest-numbered mode varying fastest:
///   c = sum_{l != k} i_l * J_l,   J_l = prod_{l' < l, l' != k} m_{l'}.
struct Matricization {
    int mode = 0;
    int rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major

    double operator()(int r, std::size_t c) const {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
};

/// Copy of the storage in linear order (the storage IS the vectorization).
std::vector<double> vectorize(const DenseTensor& t);

/// Inverse of vectorize for the given shape.
DenseTensor devectorize(std::span<const double> vec, std::vector<int> shape);

Matricization matricize(const DenseTensor& t, int mode);

/// Rebuild the tensor from its mode-k unfolding.
DenseTensor fold(const Matricization& m, std::vector<int> shape);

/// k-mode product with a square matrix: out[..., j, ...] = sum_i T[..., i, ...] * A(j, i).
DenseTensor mode_product(const DenseTensor& t, const Eigen::MatrixXd& a, int mode);

/// Sequential mode products T x_0 A_0 x_1 ... x_{K-1} A_{K-1}.
DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Eigen::MatrixXd> mats);

}  // namespace sylgl

#endif
