#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dwrecon/tensor.hpp"

namespace dw::io {

/// 8-bit grayscale PNG.
void write_png_gray(const std::string& path, std::size_t width, std::size_t height,
                    const std::vector<std::uint8_t>& pixels);

/// Maps a dB image in [-dynamic_range, 0] to 8-bit grayscale and writes it.
void write_bmode_png(const std::string& path, const Tensor& db_image, double dynamic_range);

/// 8-bit paletted PNG for label maps (up to 16 labels).
void write_png_indexed(const std::string& path, std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& labels, std::size_t num_labels);

}  // namespace dw::io
