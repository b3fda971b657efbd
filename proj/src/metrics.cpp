#include "dwrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dw::metrics {

bool Roi::contains(std::size_t i, std::size_t j) const {
    const double ri = static_cast<double>(i), cj = static_cast<double>(j);
    if (shape == Shape::rectangle)
        return ri >= row0 && ri < row1 && cj >= col0 && cj < col1;
    const double dr = (ri - center_row) / radius_row;
    const double dc = (cj - center_col) / radius_col;
    return dr * dr + dc * dc <= 1.0;
}

Roi Roi::rectangle(double row0, double row1, double col0, double col1) {
    Roi r;
    r.shape = Shape::rectangle;
    r.row0 = row0;
    r.row1 = row1;
    r.col0 = col0;
    r.col1 = col1;
    return r;
}

Roi Roi::ellipse(double center_row, double center_col, double radius_row, double radius_col) {
    Roi r;
    r.shape = Shape::ellipse;
    r.center_row = center_row;
    r.center_col = center_col;
    r.radius_row = radius_row;
    r.radius_col = radius_col;
    return r;
}

RoiStats roi_stats(const Tensor& envelope_image, const Roi& roi) {
    if (envelope_image.rank() != 2)
        throw std::invalid_argument("roi_stats: image must be [h,w]");
    const std::size_t h = envelope_image.dim(0), w = envelope_image.dim(1);
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j)
            if (roi.contains(i, j)) {
                const double v = envelope_image.at(i, j);
                sum += v;
                sum2 += v * v;
                ++n;
            }
    if (n < 25) throw std::invalid_argument("roi_stats: region has fewer than 25 pixels");
    RoiStats st;
    st.pixel_count = n;
    st.mean = sum / static_cast<double>(n);
    st.variance = std::max(0.0, sum2 / static_cast<double>(n) - st.mean * st.mean);
    return st;
}

double psnr(const Tensor& pred, const Tensor& ref) {
    if (!pred.same_dims(ref)) throw std::invalid_argument("psnr: dim mismatch");
    double max_i = 0.0, mse = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        max_i = std::max(max_i, std::abs(ref[i]));
        const double d = pred[i] - ref[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(max_i / std::sqrt(mse));
}

double ssim(const Tensor& pred, const Tensor& ref) {
    if (!pred.same_dims(ref)) throw std::invalid_argument("ssim: dim mismatch");
    const std::size_t n = ref.size();
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(ref[i]));
    const double scale = peak > 0.0 ? 1.0 / peak : 1.0;

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += pred[i] * scale;
        my += ref[i] * scale;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double vx = 0.0, vy = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = pred[i] * scale - mx;
        const double dy = ref[i] * scale - my;
        vx += dx * dx;
        vy += dy * dy;
        cov += dx * dy;
    }
    vx /= static_cast<double>(n);
    vy /= static_cast<double>(n);
    cov /= static_cast<double>(n);

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    return (2.0 * mx * my + c1) * (2.0 * cov + c2) /
           ((mx * mx + my * my + c1) * (vx + vy + c2));
}

namespace {

std::vector<std::size_t> bin_indices(const Tensor& img, std::size_t bins) {
    double lo = img[0], hi = img[0];
    for (std::size_t i = 0; i < img.size(); ++i) {
        lo = std::min(lo, img[i]);
        hi = std::max(hi, img[i]);
    }
    std::vector<std::size_t> idx(img.size());
    if (hi <= lo) return idx;  // constant image: everything in bin 0
    const double scale = static_cast<double>(bins) / (hi - lo);
    for (std::size_t i = 0; i < img.size(); ++i) {
        auto b = static_cast<std::size_t>((img[i] - lo) * scale);
        idx[i] = std::min(b, bins - 1);
    }
    return idx;
}

}  // namespace

double mutual_information(const Tensor& pred, const Tensor& ref, std::size_t bins) {
    if (!pred.same_dims(ref)) throw std::invalid_argument("mi: dim mismatch");
    if (bins < 2) throw std::invalid_argument("mi: need at least 2 bins");
    const std::size_t n = ref.size();
    const auto bx = bin_indices(pred, bins);
    const auto by = bin_indices(ref, bins);

    std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
    const double inc = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[bx[i] * bins + by[i]] += inc;
        px[bx[i]] += inc;
        py[by[i]] += inc;
    }
    // Split logs so MI(A,A) telescopes to the histogram entropy exactly.
    double mi = 0.0;
    for (std::size_t a = 0; a < bins; ++a)
        for (std::size_t b = 0; b < bins; ++b) {
            const double p = joint[a * bins + b];
            if (p > 0.0) mi += p * (std::log(p) - std::log(px[a]) - std::log(py[b]));
        }
    return std::max(0.0, mi);
}

double histogram_entropy(const Tensor& image, std::size_t bins) {
    const auto bx = bin_indices(image, bins);
    std::vector<double> p(bins, 0.0);
    const double inc = 1.0 / static_cast<double>(image.size());
    for (std::size_t b : bx) p[b] += inc;
    double ent = 0.0;
    for (double v : p)
        if (v > 0.0) ent -= v * std::log(v);
    return ent;
}

CrCnr cr_cnr(const Tensor& envelope_image, const Roi& target, const Roi& background) {
    const RoiStats t = roi_stats(envelope_image, target);
    const RoiStats b = roi_stats(envelope_image, background);
    if (!(b.mean > 0.0)) throw std::invalid_argument("cr_cnr: background mean must be positive");

    CrCnr out;
    out.cr_db = t.mean > 0.0 ? -20.0 * std::log10(t.mean / b.mean)
                             : std::numeric_limits<double>::infinity();
    const double diff = std::abs(t.mean - b.mean);
    out.cnr_db = diff > 0.0
                     ? 20.0 * std::log10(diff / std::sqrt(t.variance + b.variance))
                     : -std::numeric_limits<double>::infinity();
    return out;
}

double lateral_resolution_mm(const Tensor& envelope_image, const sim::PolarGrid& grid,
                             double wire_r, double wire_theta) {
    grid.validate();
    const std::size_t h = grid.depth_samples, w = grid.line_count;
    if (envelope_image.dim(0) != h || envelope_image.dim(1) != w)
        throw std::invalid_argument("lateral_resolution: image does not match grid");

    const double dr = (grid.depth_max - grid.depth_min) / static_cast<double>(h - 1);
    const double dth = grid.sector_rad / static_cast<double>(w - 1);
    const auto row_guess = static_cast<std::ptrdiff_t>(
        std::llround((wire_r - grid.depth_min) / dr));
    const auto col_guess = static_cast<std::ptrdiff_t>(
        std::llround((wire_theta + grid.sector_rad / 2.0) / dth));

    // Envelope peak inside a small window around the expected position.
    const std::ptrdiff_t win = 4;
    std::size_t pi = 0, pj = 0;
    double peak = -1.0;
    for (std::ptrdiff_t di = -win; di <= win; ++di)
        for (std::ptrdiff_t dj = -win; dj <= win; ++dj) {
            const std::ptrdiff_t i = row_guess + di, j = col_guess + dj;
            if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(h) ||
                j >= static_cast<std::ptrdiff_t>(w))
                continue;
            const double v = envelope_image.at(i, j);
            if (v > peak) {
                peak = v;
                pi = static_cast<std::size_t>(i);
                pj = static_cast<std::size_t>(j);
            }
        }
    if (peak <= 0.0) throw std::runtime_error("lateral_resolution: no peak found");

    // The peak must stand out against the row's background.
    std::vector<double> row(w);
    for (std::size_t j = 0; j < w; ++j) row[j] = envelope_image.at(pi, j);
    std::vector<double> sorted = row;
    std::nth_element(sorted.begin(), sorted.begin() + w / 2, sorted.end());
    const double median = sorted[w / 2];
    if (peak < 2.0 * median)  // < 6 dB above surroundings
        throw std::runtime_error("lateral_resolution: peak not prominent enough");

    const double half_max = peak / 2.0;
    // Right crossing.
    double right = -1.0;
    for (std::size_t j = pj; j + 1 < w; ++j) {
        if (row[j] >= half_max && row[j + 1] < half_max) {
            const double f = (row[j] - half_max) / (row[j] - row[j + 1]);
            right = static_cast<double>(j) + f;
            break;
        }
    }
    // Left crossing.
    double left = -1.0;
    for (std::size_t j = pj; j > 0; --j) {
        if (row[j] >= half_max && row[j - 1] < half_max) {
            const double f = (row[j] - half_max) / (row[j] - row[j - 1]);
            left = static_cast<double>(j) - f;
            break;
        }
    }
    if (left < 0.0 || right < 0.0)
        throw std::runtime_error("lateral_resolution: unresolved target");

    const double width_rad = (right - left) * dth;
    const double depth_m = grid.radius(pi);
    return width_rad * depth_m * 1000.0;
}

}  // namespace dw::metrics
