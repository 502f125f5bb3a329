#include "xdhs/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace xdhs::nn {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {
    for (auto d : shape_)
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_str(shape_));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_)
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_str(shape_));
    if (shape_numel(shape_) != data_.size())
        throw std::invalid_argument("tensor shape " + shape_str(shape_) + " does not match " +
                                    std::to_string(data_.size()) + " values");
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

template <typename T>
T Tensor<T>::item() const {
    if (data_.size() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape_));
    return data_[0];
}

template <typename T>
bool Tensor<T>::all_finite() const {
    for (auto v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) return false;
    return std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(T)) == 0;
}

template <typename T>
void require_finite(const Tensor<T>& t, const std::string& what) {
    const auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            std::ostringstream os;
            os << what << " holds a non-finite value at flat index " << i << " (" << data[i] << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

template class Tensor<float>;
template class Tensor<double>;
template bool bitwise_equal(const Tensor<float>&, const Tensor<float>&);
template bool bitwise_equal(const Tensor<double>&, const Tensor<double>&);
template void require_finite(const Tensor<float>&, const std::string&);
template void require_finite(const Tensor<double>&, const std::string&);

} // namespace xdhs::nn
