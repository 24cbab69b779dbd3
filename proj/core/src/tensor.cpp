#include "gmarl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace gmarl {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
}

} // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("shape " + shape_to_string(shape_) + " does not match " + std::to_string(data_.size()) +
                             " values");
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double Tensor::item() const {
    if (!is_scalar()) throw DimensionError("item() on non-scalar tensor " + shape_to_string(shape_));
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
    check_shape(shape);
    if (shape_size(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (other.shape_ != shape_) {
        throw DimensionError("cannot add " + shape_to_string(other.shape_) + " to " + shape_to_string(shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double factor) {
    for (auto& v : data_) v *= factor;
    return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator*(Tensor a, double factor) { return a *= factor; }

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return std::sqrt(s);
}

void ParamStore::add(const std::string& name, Tensor value) {
    if (!entries_.emplace(name, std::move(value)).second) {
        throw ConfigError("duplicate parameter name '" + name + "'");
    }
    ++version_;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw IndexError("unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::set(const std::string& name, Tensor value) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw IndexError("unknown parameter '" + name + "'");
    if (it->second.shape() != value.shape()) {
        throw DimensionError("parameter '" + name + "' has shape " + shape_to_string(it->second.shape()) +
                             ", cannot assign " + shape_to_string(value.shape()));
    }
    it->second = std::move(value);
    ++version_;
}

void ParamStore::axpy(const std::string& name, double scale, const Tensor& delta) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw IndexError("unknown parameter '" + name + "'");
    if (it->second.shape() != delta.shape()) {
        throw DimensionError("update for '" + name + "' has shape " + shape_to_string(delta.shape()) +
                             ", expected " + shape_to_string(it->second.shape()));
    }
    auto dst = it->second.data();
    auto src = delta.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    ++version_;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
}

} // namespace gmarl
