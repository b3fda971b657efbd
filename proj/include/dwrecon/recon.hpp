#pragma once

#include <vector>

#include "dwrecon/model.hpp"
#include "dwrecon/tensor.hpp"
#include "dwrecon/ussim.hpp"

namespace dw::recon {

/// Log-compressed envelope image: nonpositive dB values clamped to
/// [-dynamic_range, 0].
struct BMode {
    Tensor db;  // [h, w]
    double dynamic_range = 50.0;
};

/// Pixel-wise arithmetic mean of the selected beamformed RF slices.
Tensor compound(const Tensor& stack, const std::vector<std::size_t>& subset);

/// CNN inference on an m-transmit RF stack [m,h,w]; returns [h,w].
Tensor reconstruct(const model::Checkpoint& ckpt, const Tensor& x_stack);
TensorF reconstruct(const model::CheckpointF& ckpt, const TensorF& x_stack);

/// Per-line (depth direction) envelope via the discrete analytic signal.
Tensor envelope(const Tensor& rf_image);

BMode log_compress(const Tensor& envelope_image, double dynamic_range = 50.0);

/// Bilinear polar-to-Cartesian resampling. Output raster spans the sector
/// bounding box; out-of-sector pixels get -dynamic_range.
Tensor scan_convert(const BMode& bmode, const sim::PolarGrid& grid,
                    std::size_t out_h, std::size_t out_w);

}  // namespace dw::recon
