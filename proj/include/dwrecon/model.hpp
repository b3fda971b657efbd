#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dwrecon/nncore.hpp"
#include "dwrecon/tensor.hpp"

namespace dw::model {

enum class Activation { maxout, relu };

/// Geometry of one convolution path; padding is always "same".
struct ConvSpec {
    std::size_t kernel_h = 1, kernel_w = 1;
    std::size_t num_kernels = 1;
};

struct LayerSpec {
    enum class Kind { conv, inception };
    Kind kind = Kind::conv;
    std::vector<ConvSpec> paths;  // one entry for plain conv
    Activation activation = Activation::maxout;
    std::size_t maxout_k = 4;  // ignored for relu

    std::size_t pre_activation_channels() const {
        std::size_t n = 0;
        for (const auto& p : paths) n += p.num_kernels;
        return n;
    }
    std::size_t post_activation_channels() const {
        const std::size_t pre = pre_activation_channels();
        return activation == Activation::maxout ? pre / maxout_k : pre;
    }
};

struct ModelConfig {
    std::string name;
    std::size_t input_channels = 3;
    std::vector<LayerSpec> layers;

    /// Throws ConfigError if channel arithmetic does not close or the final
    /// post-activation channel count is not 1.
    void validate() const;

    /// Post-activation channel count per layer (the Table feature sizes).
    std::vector<std::size_t> channel_trace() const;
};

/// Builtin architectures. `scale` divides every kernel count by the given
/// power of two (receptive fields untouched); `desk_kernels` switches to the
/// reduced kernel-height table sized for 128-row images.
ModelConfig builtin_config(const std::string& name, std::size_t scale = 1,
                           bool desk_kernels = false);

std::size_t param_count(const ModelConfig& config);

/// Per-layer trainable parameters; one weights/biases pair per path.
template <typename T>
struct LayerParamsT {
    std::vector<TensorT<T>> weights;
    std::vector<std::vector<T>> biases;
};

template <typename T>
struct ModelParamsT {
    std::vector<LayerParamsT<T>> layers;

    template <typename U>
    ModelParamsT<U> cast() const {
        ModelParamsT<U> out;
        out.layers.reserve(layers.size());
        for (const auto& l : layers) {
            LayerParamsT<U> lo;
            for (const auto& w : l.weights) lo.weights.push_back(w.template cast<U>());
            for (const auto& b : l.biases)
                lo.biases.emplace_back(b.begin(), b.end());
            out.layers.push_back(std::move(lo));
        }
        return out;
    }
};

struct TrainMeta {
    std::int64_t epoch = 0;
    double learning_rate = 0.0;
    double best_val_loss = 0.0;
    std::uint64_t seed = 0;
};

template <typename T>
struct CheckpointT {
    ModelConfig config;
    ModelParamsT<T> params;
    TrainMeta meta;
};

using Checkpoint = CheckpointT<double>;
using CheckpointF = CheckpointT<float>;

/// Xavier-uniform initialized checkpoint, biases zero, reproducible from seed.
template <typename T>
CheckpointT<T> build(const ModelConfig& config, std::uint64_t seed);

/// Intermediate state kept by forward_cached for the backward pass.
template <typename T>
struct ForwardCacheT {
    TensorT<T> input;
    std::vector<TensorT<T>> pre_activation;   // conv/inception outputs
    std::vector<TensorT<T>> post_activation;  // after maxout/relu
    std::vector<std::vector<std::uint8_t>> argmax;  // empty for relu layers
};

template <typename T>
TensorT<T> forward(const CheckpointT<T>& ckpt, const TensorT<T>& input);

template <typename T>
ForwardCacheT<T> forward_cached(const CheckpointT<T>& ckpt, const TensorT<T>& input);

/// Gradients of a scalar loss wrt all parameters, given d(loss)/d(output).
template <typename T>
ModelParamsT<T> backward(const CheckpointT<T>& ckpt, const ForwardCacheT<T>& cache,
                         const TensorT<T>& grad_output);

/// Instantiates nncore layers for one LayerSpec from its parameters.
template <typename T>
nn::InceptionBlockT<T> make_block(const LayerSpec& spec, std::size_t in_channels,
                                  const LayerParamsT<T>& params);

// Checkpoint file: magic "IDN1", version byte, JSON header (config, metadata,
// tensor offsets), raw little-endian payloads.
void save(const Checkpoint& ckpt, const std::string& path);
Checkpoint load(const std::string& path);

extern template CheckpointT<float> build<float>(const ModelConfig&, std::uint64_t);
extern template CheckpointT<double> build<double>(const ModelConfig&, std::uint64_t);

}  // namespace dw::model
