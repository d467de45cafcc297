#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"

namespace fginpaint {

/// Dense row-major tensor of doubles. Layout conventions are owned by the
/// caller; network code uses NCHW, image code uses HWC.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
        std::int64_t n = 1;
        for (std::int64_t d : shape_) {
            if (d <= 0) throw DimensionError("Tensor: nonpositive dimension");
            n *= d;
        }
        data_.assign(static_cast<std::size_t>(n), 0.0);
    }

    static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::int64_t> shape, double value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    /// this += alpha * other (shapes must agree).
    void axpy(double alpha, const Tensor& other) {
        if (!same_shape(other)) throw DimensionError("Tensor::axpy: shape mismatch");
        const double* src = other.data();
        double* dst = data();
        const std::int64_t n = numel();
        for (std::int64_t i = 0; i < n; ++i) dst[i] += alpha * src[i];
    }

    void scale(double alpha) {
        for (double& v : data_) v *= alpha;
    }

    bool bit_equal(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

private:
    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

/// Flat offset into an NCHW tensor.
inline std::int64_t nchw_index(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w,
                               std::int64_t C, std::int64_t H, std::int64_t W) {
    return ((n * C + c) * H + h) * W + w;
}

} // namespace fginpaint
