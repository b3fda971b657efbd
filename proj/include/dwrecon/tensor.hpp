#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dw {

/// Dense row-major N-dimensional array (N <= 4). For feature maps the
/// dimension order is batch x channel x height x width.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        validate_dims();
        data_.assign(element_count(dims_), T{0});
    }

    TensorT(std::vector<std::size_t> dims, std::vector<T> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        validate_dims();
        if (data_.size() != element_count(dims_))
            throw std::invalid_argument("tensor: data length does not match dims");
    }

    TensorT(std::initializer_list<std::size_t> dims)
        : TensorT(std::vector<std::size_t>(dims)) {}

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t dim(std::size_t i) const { return dims_.at(i); }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // 4-D accessors for [B,C,H,W] tensors.
    T& at(std::size_t b, std::size_t c, std::size_t i, std::size_t j) {
        return data_[((b * dims_[1] + c) * dims_[2] + i) * dims_[3] + j];
    }
    const T& at(std::size_t b, std::size_t c, std::size_t i, std::size_t j) const {
        return data_[((b * dims_[1] + c) * dims_[2] + i) * dims_[3] + j];
    }

    // 2-D accessors for [H,W] images.
    T& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool same_dims(const TensorT& other) const { return dims_ == other.dims_; }

    bool all_finite() const;

    template <typename U>
    TensorT<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return TensorT<U>(dims_, std::move(out));
    }

    static std::size_t element_count(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }

private:
    void validate_dims() const {
        if (dims_.empty() || dims_.size() > 4)
            throw std::invalid_argument("tensor: rank must be in [1,4]");
        for (auto d : dims_)
            if (d < 1) throw std::invalid_argument("tensor: all extents must be >= 1");
    }

    std::vector<std::size_t> dims_;
    std::vector<T> data_;
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

std::string dims_to_string(const std::vector<std::size_t>& dims);

}  // namespace dw
