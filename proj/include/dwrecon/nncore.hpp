#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dwrecon/tensor.hpp"

namespace dw {

/// Structural problem with a layer or model configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace nn {

/// 2-D convolution layer, stride fixed at 1, zero padding.
/// weights layout: [num_kernels, in_channels, kernel_h, kernel_w].
template <typename T>
struct ConvLayerT {
    std::size_t in_channels = 0;
    std::size_t num_kernels = 0;
    std::size_t kernel_h = 1, kernel_w = 1;
    std::size_t pad_h = 0, pad_w = 0;
    TensorT<T> weights;
    std::vector<T> biases;

    /// Allocates zeroed weights/biases for the given geometry with
    /// "same" padding pad = (kernel-1)/2. Kernel extents must be odd.
    static ConvLayerT same_padded(std::size_t in_channels, std::size_t num_kernels,
                                  std::size_t kernel_h, std::size_t kernel_w);

    std::size_t weight_count() const {
        return num_kernels * in_channels * kernel_h * kernel_w;
    }
};

template <typename T>
struct ConvGradsT {
    TensorT<T> input;
    TensorT<T> weights;
    std::vector<T> biases;
};

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvLayerT<T>& layer);

template <typename T>
ConvGradsT<T> conv2d_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                              const ConvLayerT<T>& layer);

/// Maxout over contiguous groups of k channels. argmax holds the winning
/// in-group channel offset per output element (ties: lowest index).
template <typename T>
struct MaxoutResultT {
    TensorT<T> output;
    std::vector<std::uint8_t> argmax;
};

template <typename T>
MaxoutResultT<T> maxout_forward(const TensorT<T>& input, std::size_t k);

template <typename T>
TensorT<T> maxout_backward(const TensorT<T>& grad_out,
                           const std::vector<std::uint8_t>& argmax, std::size_t k);

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& input);

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& input);

/// Parallel multi-scale convolution paths concatenated along channels in
/// declaration order. All paths must share in_channels and produce
/// identical spatial dims.
template <typename T>
struct InceptionBlockT {
    std::vector<ConvLayerT<T>> paths;

    std::size_t out_channels() const {
        std::size_t n = 0;
        for (const auto& p : paths) n += p.num_kernels;
        return n;
    }
};

template <typename T>
struct InceptionGradsT {
    TensorT<T> input;
    std::vector<TensorT<T>> weights;
    std::vector<std::vector<T>> biases;
};

template <typename T>
TensorT<T> inception_forward(const TensorT<T>& input, const InceptionBlockT<T>& block);

template <typename T>
InceptionGradsT<T> inception_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                                      const InceptionBlockT<T>& block);

/// Mean over all elements of the squared difference (per-sample mean of the
/// squared error, then mean over the batch). grad = 2*(pred-target)/count.
template <typename T>
struct MseResultT {
    double loss = 0.0;
    TensorT<T> grad_pred;
};

template <typename T>
MseResultT<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target);

}  // namespace nn
}  // namespace dw
