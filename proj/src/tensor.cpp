#include "sylgl/tensor.hpp"

#include <stdexcept>
#include <string>

#include "sylgl/errors.hpp"

namespace sylgl {

namespace {

std::vector<std::size_t> compute_strides(const std::vector<int>& shape) {
    std::vector<std::size_t> strides(shape.size());
    std::size_t s = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        strides[k] = s;
        s *= static_cast<std::size_t>(shape[k]);
    }
    return strides;
}

std::size_t total_size(const std::vector<int>& shape) {
    std::size_t s = 1;
    for (int d : shape) {
        if (d < 1) throw SpecError("tensor mode sizes must be >= 1");
        s *= static_cast<std::size_t>(d);
    }
    return s;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      strides_(compute_strides(shape_)),
      values_(total_size(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), strides_(compute_strides(shape_)), values_(std::move(values)) {
    if (values_.size() != total_size(shape_))
        throw SpecError("tensor value count does not match shape");
}

std::size_t DenseTensor::linear_index(std::span<const int> idx) const {
    std::size_t lin = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k)
        lin += static_cast<std::size_t>(idx[k]) * strides_[k];
    return lin;
}

std::vector<double> vectorize(const DenseTensor& t) { return t.values(); }

DenseTensor devectorize(std::span<const double> vec, std::vector<int> shape) {
    return DenseTensor(std::move(shape), std::vector<double>(vec.begin(), vec.end()));
}

Matricization matricize(const DenseTensor& t, int mode) {
    if (mode < 0 || mode >= t.order())
        throw SpecError("matricize: mode index out of range: " + std::to_string(mode));
    const int mk = t.dim(mode);
    const std::size_t cols = t.size() / static_cast<std::size_t>(mk);
    Matricization out;
    out.mode = mode;
    out.rows = mk;
    out.cols = cols;
    out.values.assign(static_cast<std::size_t>(mk) * cols, 0.0);

    // Walk the storage once; decode the column index of each element.
    // inner = joint size of modes < k, outer iterates modes > k.
    const std::size_t inner = t.stride(mode);
    const std::size_t block = inner * static_cast<std::size_t>(mk);
    const std::size_t outer = t.size() / block;
    for (std::size_t o = 0; o < outer; ++o) {
        for (int i = 0; i < mk; ++i) {
            const double* src = t.data() + o * block + static_cast<std::size_t>(i) * inner;
            double* dst = out.values.data() + static_cast<std::size_t>(i) * cols + o * inner;
            for (std::size_t b = 0; b < inner; ++b) dst[b] = src[b];
        }
    }
    return out;
}

DenseTensor fold(const Matricization& m, std::vector<int> shape) {
    DenseTensor t(std::move(shape));
    if (m.mode < 0 || m.mode >= t.order()) throw SpecError("fold: mode index out of range");
    const int mk = t.dim(m.mode);
    if (m.rows != mk || m.values.size() != t.size())
        throw SpecError("fold: matricization does not match target shape");
    const std::size_t inner = t.stride(m.mode);
    const std::size_t block = inner * static_cast<std::size_t>(mk);
    const std::size_t outer = t.size() / block;
    for (std::size_t o = 0; o < outer; ++o) {
        for (int i = 0; i < mk; ++i) {
            const double* src = m.values.data() + static_cast<std::size_t>(i) * m.cols + o * inner;
            double* dst = t.data() + o * block + static_cast<std::size_t>(i) * inner;
            for (std::size_t b = 0; b < inner; ++b) dst[b] = src[b];
        }
    }
    return t;
}

DenseTensor mode_product(const DenseTensor& t, const Eigen::MatrixXd& a, int mode) {
    if (mode < 0 || mode >= t.order())
        throw SpecError("mode_product: mode index out of range: " + std::to_string(mode));
    const int mk = t.dim(mode);
    if (a.rows() != mk || a.cols() != mk)
        throw SpecError("mode_product: matrix is " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + ", mode size is " + std::to_string(mk));

    DenseTensor out(t.shape());
    // Each slab over modes < k is a contiguous (inner x m_k) column-major
    // matrix; the product is slab * A^T.
    const std::size_t inner = t.stride(mode);
    const std::size_t block = inner * static_cast<std::size_t>(mk);
    const std::size_t outer = t.size() / block;
    using Mat = Eigen::MatrixXd;
    for (std::size_t o = 0; o < outer; ++o) {
        Eigen::Map<const Mat> src(t.data() + o * block, static_cast<Eigen::Index>(inner), mk);
        Eigen::Map<Mat> dst(out.data() + o * block, static_cast<Eigen::Index>(inner), mk);
        dst.noalias() = src * a.transpose();
    }
    return out;
}

DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Eigen::MatrixXd> mats) {
    if (static_cast<int>(mats.size()) != t.order())
        throw SpecError("multi_mode_product: need one matrix per mode");
    DenseTensor out = t;
    for (int k = 0; k < t.order(); ++k) out = mode_product(out, mats[static_cast<std::size_t>(k)], k);
    return out;
}

}  // namespace sylgl
