#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace xdhs::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major tensor, last index fastest. A rank-0 shape holds one scalar.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<T> data);

    static Tensor full(Shape shape, T value);
    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t numel() const { return data_.size(); }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T>& storage() { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // Rank-3 [C,H,W] accessors.
    T& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    const T& at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    T item() const;

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool value) { requires_grad_ = value; }

    bool all_finite() const;

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        Tensor<U> t(shape_, std::move(out));
        t.set_requires_grad(requires_grad_);
        return t;
    }

private:
    Shape shape_;
    std::vector<T> data_;
    bool requires_grad_ = false;
};

// Same shape and identical bit patterns.
template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b);

// Throws std::invalid_argument naming `what` when the tensor holds NaN or Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const std::string& what);

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace xdhs::nn
