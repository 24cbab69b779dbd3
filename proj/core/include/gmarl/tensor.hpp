#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gmarl/error.hpp"

namespace gmarl {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major tensor of doubles. Rank is unrestricted but almost every
/// tensor in this project is a vector or a matrix.
class Tensor {
public:
    Tensor() : shape_{1}, data_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value) { return Tensor({1}, {value}); }
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_, 0.0); }
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::vector<double> values);
    static Tensor identity(std::size_t n);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1; }

    // Matrix view: rank-1 tensors are treated as a single row.
    std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
    std::size_t cols() const { return shape_.size() >= 2 ? data_.size() / shape_[0] : data_.size(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double item() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& values() const { return data_; }

    Tensor reshaped(Shape shape) const;
    bool all_finite() const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(double factor);

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double factor);

double max_abs_diff(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& t);

/// Named, shape-frozen parameter tensors shared by every agent.
class ParamStore {
public:
    void add(const std::string& name, Tensor value);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    /// Replaces the value of an existing entry; the shape must match.
    void set(const std::string& name, Tensor value);
    /// value += scale * delta, shape-checked.
    void axpy(const std::string& name, double scale, const Tensor& delta);

    std::vector<std::string> names() const;
    std::size_t size() const { return entries_.size(); }
    std::size_t parameter_count() const;
    std::uint64_t version() const { return version_; }

    const std::map<std::string, Tensor>& entries() const { return entries_; }

    friend bool operator==(const ParamStore& a, const ParamStore& b) { return a.entries_ == b.entries_; }

private:
    std::map<std::string, Tensor> entries_;
    std::uint64_t version_ = 0;
};

using Gradients = std::map<std::string, Tensor>;

} // namespace gmarl
