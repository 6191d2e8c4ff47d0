#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "amrl/errors.hpp"

namespace amrl {

// Dense row-major tensor of doubles. All network activations, parameters and
// gradients live in these; shapes are small enough that value semantics are fine.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), 0.0);
    }

    Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_))
            throw config_error("Tensor: data length " + std::to_string(data_.size()) +
                               " does not match shape (" + shape_string() + ")");
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, double v) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) x = v;
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Rank-3 [c,y,x] accessor used by the conv kernels and the encoders.
    double& at3(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x]; }
    double at3(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double x : data_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double abs_max() const {
        double m = 0.0;
        for (double x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    void fill(double v) {
        for (double& x : data_) x = v;
    }

    std::string shape_string() const {
        std::string s;
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s;
    }

private:
    static std::size_t checked_numel(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw config_error("Tensor: non-positive dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace amrl
