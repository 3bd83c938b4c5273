#pragma once

#include "nbeatsx/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nbeatsx {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Storage aligned for vectorised kernels. Reductions over unaligned buffers
/// peel a different number of leading elements depending on the address, so
/// alignment keeps results bit-reproducible across runs.
using AlignedVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Dense row-major array of doubles.
///
/// Every dimension is strictly positive and `data().size() == product(shape)`.
/// A default-constructed tensor is the scalar 0 with shape `[1]`.
class Tensor {
public:
    Tensor() : shape_{1}, data_(1, 0.0) {}

    explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_size(shape_), fill);
    }

    Tensor(Shape shape, std::initializer_list<double> data)
        : Tensor(std::move(shape), AlignedVector(data.begin(), data.end())) {}

    Tensor(Shape shape, const std::vector<double>& data)
        : Tensor(std::move(shape), AlignedVector(data.begin(), data.end())) {}

    Tensor(Shape shape, AlignedVector data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != shape_size(shape_)) {
            throw ShapeError("tensor: shape " + shape_to_string(shape_) + " needs " +
                             std::to_string(shape_size(shape_)) + " values, got " +
                             std::to_string(data_.size()));
        }
    }

    static Tensor scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

    static Tensor vector(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    /// Row-major matrix from nested rows; all rows must have equal length.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        std::vector<double> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw ShapeError("tensor: ragged matrix literal");
            data.insert(data.end(), row.begin(), row.end());
        }
        return Tensor({r, c}, std::move(data));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    double item() const {
        if (data_.size() != 1) throw ShapeError("tensor: item() on shape " + shape_to_string(shape_));
        return data_[0];
    }

    /// Same data under a new shape of equal element count.
    Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

    void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    /// Bit-exact equality of shape and values.
    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void validate_shape() const {
        if (shape_.empty()) throw ShapeError("tensor: empty shape");
        for (std::size_t d : shape_) {
            if (d == 0) throw ShapeError("tensor: zero-sized dimension in " + shape_to_string(shape_));
        }
    }

    Shape shape_;
    AlignedVector data_;
};

/// Matrix transpose of a rank-2 tensor.
inline Tensor transpose(const Tensor& m) {
    if (m.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_to_string(m.shape()));
    const std::size_t r = m.dim(0), c = m.dim(1);
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
    return out;
}

/// Ordered collection of named tensors (trainable parameters, buffers or their gradients).
class ParameterSet {
public:
    void add(std::string name, Tensor value) {
        if (contains(name)) throw ConfigError("parameter '" + name + "' registered twice");
        names_.push_back(std::move(name));
        values_.push_back(std::move(value));
    }

    bool contains(const std::string& name) const {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }

    std::size_t index_of(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw ConfigError("unknown parameter '" + name + "'");
        return static_cast<std::size_t>(it - names_.begin());
    }

    Tensor& get(const std::string& name) { return values_[index_of(name)]; }
    const Tensor& get(const std::string& name) const { return values_[index_of(name)]; }

    Tensor& operator[](std::size_t i) { return values_[i]; }
    const Tensor& operator[](std::size_t i) const { return values_[i]; }

    const std::string& name(std::size_t i) const { return names_[i]; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    /// Total number of scalar entries across all tensors.
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& v : values_) n += v.size();
        return n;
    }

    /// Same names and shapes, all entries zero.
    ParameterSet zeros_like() const {
        ParameterSet out;
        for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], Tensor(values_[i].shape()));
        return out;
    }

    friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
        return a.names_ == b.names_ && a.values_ == b.values_;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

}  // namespace nbeatsx
