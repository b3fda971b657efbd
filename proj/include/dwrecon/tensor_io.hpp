#pragma once

#include <string>

#include "dwrecon/tensor.hpp"

namespace dw::io {

// Tensor file format "DWT1": 4-byte magic, 1-byte dtype (0 = f32, 1 = f64),
// 1-byte ndim, ndim x u32 little-endian extents, row-major payload.

void save_tensor(const Tensor& t, const std::string& path);
void save_tensor(const TensorF& t, const std::string& path);

/// Loads either dtype, converting to the requested element type.
Tensor load_tensor(const std::string& path);
TensorF load_tensor_f(const std::string& path);

}  // namespace dw::io
