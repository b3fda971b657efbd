#include "dwrecon/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace dw::analysis {

namespace {

template <typename T>
ActivationMap activation_map_impl(const model::CheckpointT<T>& ckpt, const TensorT<T>& x_stack,
                                  Attribution mode) {
    const auto& layers = ckpt.config.layers;
    if (layers.size() < 2)
        throw ConfigError("activation_map: model too shallow");
    const model::LayerSpec& inc = layers[layers.size() - 2];
    const model::LayerSpec& last = layers.back();
    if (inc.kind != model::LayerSpec::Kind::inception)
        throw ConfigError("activation_map: penultimate layer is not an inception block");
    if (inc.activation != model::Activation::maxout || last.activation != model::Activation::maxout)
        throw ConfigError("activation_map: requires maxout activations");
    if (last.paths.size() != 1 || last.paths[0].kernel_h != 1 || last.paths[0].kernel_w != 1)
        throw ConfigError("activation_map: final layer is not a 1x1 convolution");

    if (x_stack.rank() != 3)
        throw std::invalid_argument("activation_map: input must be [m,h,w]");
    TensorT<T> batched({1, x_stack.dim(0), x_stack.dim(1), x_stack.dim(2)}, x_stack.storage());
    auto cache = model::forward_cached(ckpt, batched);

    const std::size_t L = layers.size();
    const TensorT<T>& features = cache.post_activation[L - 2];  // [1, Cf, h, w]
    const std::vector<std::uint8_t>& final_arg = cache.argmax[L - 1];
    const std::size_t Cf = features.dim(1);
    const std::size_t h = features.dim(2), w = features.dim(3);
    const std::size_t plane = h * w;

    // Post-maxout channel group per path: contiguous, K_p / k channels wide.
    std::vector<std::size_t> path_start, path_len;
    std::size_t off = 0;
    for (const auto& p : inc.paths) {
        if (p.num_kernels % inc.maxout_k != 0)
            throw ConfigError("activation_map: path kernels not divisible by maxout k");
        const std::size_t len = p.num_kernels / inc.maxout_k;
        path_start.push_back(off);
        path_len.push_back(len);
        off += len;
    }
    if (off != Cf) throw ConfigError("activation_map: channel bookkeeping failed");

    const TensorT<T>& w1x1 = ckpt.params.layers[L - 1].weights[0];  // [K, Cf, 1, 1]

    ActivationMap map;
    map.height = h;
    map.width = w;
    map.num_paths = inc.paths.size();
    map.labels.assign(plane, 0);
    for (const auto& p : inc.paths)
        map.legend.push_back(std::to_string(p.kernel_h) + "x" + std::to_string(p.kernel_w));

    for (std::size_t px = 0; px < plane; ++px) {
        const std::size_t winner = final_arg[px];  // winning 1x1 kernel
        double best = -1.0;
        std::uint8_t best_path = 0;
        for (std::size_t p = 0; p < inc.paths.size(); ++p) {
            double score = 0.0;
            for (std::size_t c = path_start[p]; c < path_start[p] + path_len[p]; ++c) {
                const double coeff = static_cast<double>(w1x1[(winner * Cf + c)]);
                if (mode == Attribution::weighted_activation)
                    score += std::abs(coeff * static_cast<double>(features[c * plane + px]));
                else
                    score += std::abs(coeff);
            }
            if (score > best) {
                best = score;
                best_path = static_cast<std::uint8_t>(p);
            }
        }
        map.labels[px] = best_path;
    }
    return map;
}

}  // namespace

ActivationMap activation_map(const model::Checkpoint& ckpt, const Tensor& x_stack,
                             Attribution mode) {
    return activation_map_impl(ckpt, x_stack, mode);
}

ActivationMap activation_map(const model::CheckpointF& ckpt, const TensorF& x_stack,
                             Attribution mode) {
    return activation_map_impl(ckpt, x_stack, mode);
}

DepthContribution depth_contribution(const ActivationMap& map) {
    if (map.height == 0 || map.width == 0 || map.num_paths == 0)
        throw std::invalid_argument("depth_contribution: empty map");
    DepthContribution dc;
    dc.percent.assign(map.height, std::vector<double>(map.num_paths, 0.0));
    for (std::size_t i = 0; i < map.height; ++i) {
        for (std::size_t j = 0; j < map.width; ++j) {
            const std::uint8_t label = map.at(i, j);
            if (label >= map.num_paths)
                throw std::invalid_argument("depth_contribution: label out of range");
            dc.percent[i][label] += 1.0;
        }
        for (double& v : dc.percent[i]) v *= 100.0 / static_cast<double>(map.width);
    }
    return dc;
}

}  // namespace dw::analysis
