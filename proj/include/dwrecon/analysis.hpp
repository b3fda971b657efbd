#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dwrecon/model.hpp"
#include "dwrecon/tensor.hpp"

namespace dw::analysis {

/// How "contributed most" is scored for a pixel: by |coefficient x feature|
/// summed over the path's channels under the winning 1x1 kernel, or by the
/// kernel's |coefficient| alone.
enum class Attribution { weighted_activation, weight_magnitude };

/// Per-pixel index of the inception path that contributed most to the output.
struct ActivationMap {
    std::size_t height = 0, width = 0;
    std::size_t num_paths = 0;
    std::vector<std::uint8_t> labels;         // row-major [height x width]
    std::vector<std::string> legend;          // label -> kernel size "41x11"

    std::uint8_t at(std::size_t i, std::size_t j) const { return labels[i * width + j]; }
};

/// Requires an inception block followed by a 1x1 conv + maxout as the last
/// two layers. x_stack is one input sample [m,h,w].
ActivationMap activation_map(const model::Checkpoint& ckpt, const Tensor& x_stack,
                             Attribution mode = Attribution::weighted_activation);
ActivationMap activation_map(const model::CheckpointF& ckpt, const TensorF& x_stack,
                             Attribution mode = Attribution::weighted_activation);

/// Per depth row, percentage of pixels won by each path (rows sum to 100).
struct DepthContribution {
    std::vector<std::vector<double>> percent;  // [height][num_paths]
};

DepthContribution depth_contribution(const ActivationMap& map);

}  // namespace dw::analysis
