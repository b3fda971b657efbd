#include "dwrecon/recon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fftw3.h>

namespace dw::recon {

Tensor compound(const Tensor& stack, const std::vector<std::size_t>& subset) {
    if (stack.rank() != 3) throw std::invalid_argument("compound: stack must be [m,h,w]");
    if (subset.empty()) throw std::invalid_argument("compound: empty subset");
    const std::size_t h = stack.dim(1), w = stack.dim(2);
    const std::size_t plane = h * w;
    Tensor img({h, w});
    for (std::size_t s : subset) {
        if (s >= stack.dim(0)) throw std::invalid_argument("compound: subset index out of range");
        const double* src = stack.data() + s * plane;
        for (std::size_t p = 0; p < plane; ++p) img[p] += src[p];
    }
    const double inv = 1.0 / static_cast<double>(subset.size());
    for (std::size_t p = 0; p < plane; ++p) img[p] *= inv;
    return img;
}

namespace {

template <typename T>
TensorT<T> reconstruct_impl(const model::CheckpointT<T>& ckpt, const TensorT<T>& x_stack) {
    if (x_stack.rank() != 3 || x_stack.dim(0) != ckpt.config.input_channels)
        throw std::invalid_argument("reconstruct: input must be [" +
                                    std::to_string(ckpt.config.input_channels) + ",h,w]");
    TensorT<T> batched({1, x_stack.dim(0), x_stack.dim(1), x_stack.dim(2)},
                       x_stack.storage());
    TensorT<T> out = model::forward(ckpt, batched);
    return TensorT<T>({out.dim(2), out.dim(3)}, out.storage());
}

}  // namespace

Tensor reconstruct(const model::Checkpoint& ckpt, const Tensor& x_stack) {
    return reconstruct_impl(ckpt, x_stack);
}

TensorF reconstruct(const model::CheckpointF& ckpt, const TensorF& x_stack) {
    return reconstruct_impl(ckpt, x_stack);
}

Tensor envelope(const Tensor& rf_image) {
    if (rf_image.rank() != 2) throw std::invalid_argument("envelope: image must be [h,w]");
    const std::size_t h = rf_image.dim(0), w = rf_image.dim(1);
    if (h < 4) throw std::invalid_argument("envelope: need at least 4 depth samples");

    fftw_complex* buf = fftw_alloc_complex(h);
    fftw_complex* spec = fftw_alloc_complex(h);
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(h), buf, spec, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(h), spec, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

    Tensor env({h, w});
    for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t i = 0; i < h; ++i) {
            buf[i][0] = rf_image.at(i, j);
            buf[i][1] = 0.0;
        }
        fftw_execute(fwd);
        // Analytic signal: keep DC and Nyquist, double positives, zero negatives.
        const std::size_t half = h / 2;
        for (std::size_t k = 1; k < (h + 1) / 2; ++k) {
            spec[k][0] *= 2.0;
            spec[k][1] *= 2.0;
        }
        for (std::size_t k = (h % 2 == 0) ? half + 1 : half + 1; k < h; ++k) {
            spec[k][0] = 0.0;
            spec[k][1] = 0.0;
        }
        fftw_execute(bwd);
        const double scale = 1.0 / static_cast<double>(h);
        for (std::size_t i = 0; i < h; ++i)
            env.at(i, j) = std::hypot(buf[i][0] * scale, buf[i][1] * scale);
    }

    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
    fftw_free(spec);
    return env;
}

BMode log_compress(const Tensor& envelope_image, double dynamic_range) {
    if (dynamic_range <= 0) throw std::invalid_argument("log_compress: dynamic range must be > 0");
    double peak = 0.0;
    for (std::size_t i = 0; i < envelope_image.size(); ++i)
        peak = std::max(peak, envelope_image[i]);
    if (peak <= 0.0) throw std::invalid_argument("log_compress: all-zero envelope");

    BMode bm;
    bm.dynamic_range = dynamic_range;
    bm.db = Tensor(envelope_image.dims());
    for (std::size_t i = 0; i < envelope_image.size(); ++i) {
        const double v = envelope_image[i] / peak;
        const double db = v > 0.0 ? 20.0 * std::log10(v) : -dynamic_range;
        bm.db[i] = std::clamp(db, -dynamic_range, 0.0);
    }
    return bm;
}

Tensor scan_convert(const BMode& bmode, const sim::PolarGrid& grid,
                    std::size_t out_h, std::size_t out_w) {
    grid.validate();
    if (out_h < 2 || out_w < 2) throw std::invalid_argument("scan_convert: raster too small");
    const std::size_t h = grid.depth_samples, w = grid.line_count;
    if (bmode.db.dim(0) != h || bmode.db.dim(1) != w)
        throw std::invalid_argument("scan_convert: image does not match grid");

    const double half = grid.sector_rad / 2.0;
    const double x_max = grid.depth_max * std::sin(half);
    const double z_max = grid.depth_max;
    const double dr = (grid.depth_max - grid.depth_min) / static_cast<double>(h - 1);
    const double dth = grid.sector_rad / static_cast<double>(w - 1);

    Tensor out({out_h, out_w});
    for (std::size_t i = 0; i < out_h; ++i) {
        const double z = z_max * static_cast<double>(i) / static_cast<double>(out_h - 1);
        for (std::size_t j = 0; j < out_w; ++j) {
            const double x = -x_max + 2.0 * x_max * static_cast<double>(j) /
                                          static_cast<double>(out_w - 1);
            const double r = std::hypot(x, z);
            const double th = std::atan2(x, z);
            double val = -bmode.dynamic_range;
            if (r >= grid.depth_min && r <= grid.depth_max && std::abs(th) <= half) {
                const double fi = (r - grid.depth_min) / dr;
                const double fj = (th + half) / dth;
                const std::size_t i0 = std::min<std::size_t>(h - 2, static_cast<std::size_t>(fi));
                const std::size_t j0 = std::min<std::size_t>(w - 2, static_cast<std::size_t>(fj));
                const double a = fi - static_cast<double>(i0);
                const double b = fj - static_cast<double>(j0);
                val = (1 - a) * (1 - b) * bmode.db.at(i0, j0) +
                      (1 - a) * b * bmode.db.at(i0, j0 + 1) +
                      a * (1 - b) * bmode.db.at(i0 + 1, j0) +
                      a * b * bmode.db.at(i0 + 1, j0 + 1);
            }
            out.at(i, j) = val;
        }
    }
    return out;
}

}  // namespace dw::recon
