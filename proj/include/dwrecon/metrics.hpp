#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dwrecon/tensor.hpp"
#include "dwrecon/ussim.hpp"

namespace dw::metrics {

/// Region in grid coordinates (row/column index space).
struct Roi {
    enum class Shape { rectangle, ellipse };
    Shape shape = Shape::rectangle;
    // rectangle: [row0,row1) x [col0,col1); ellipse: center/radii in index units
    double row0 = 0, row1 = 0, col0 = 0, col1 = 0;
    double center_row = 0, center_col = 0, radius_row = 0, radius_col = 0;

    bool contains(std::size_t i, std::size_t j) const;
    static Roi rectangle(double row0, double row1, double col0, double col1);
    static Roi ellipse(double center_row, double center_col, double radius_row,
                       double radius_col);
};

struct RoiStats {
    double mean = 0.0;
    double variance = 0.0;  // population variance
    std::size_t pixel_count = 0;
};

/// Mean/variance of envelope amplitude over the ROI; needs >= 25 pixels.
RoiStats roi_stats(const Tensor& envelope_image, const Roi& roi);

/// Peak signal-to-noise ratio, MAX_I = max |ref|. Identical images return
/// +infinity (excluded from aggregates by callers).
double psnr(const Tensor& pred, const Tensor& ref);

/// Global-statistics SSIM on images normalized to [0,1] by the reference
/// peak; C1 = (0.01)^2, C2 = (0.03)^2 for L = 1.
double ssim(const Tensor& pred, const Tensor& ref);

/// Mutual information in nats from a bins x bins joint histogram spanning
/// each image's min-max range.
double mutual_information(const Tensor& pred, const Tensor& ref, std::size_t bins = 64);

/// Shannon entropy (nats) of an image's histogram — the MI(A,A) reference.
double histogram_entropy(const Tensor& image, std::size_t bins = 64);

struct CrCnr {
    double cr_db = 0.0;
    double cnr_db = 0.0;
};

/// CR = -20 log10(mu_t/mu_b); CNR = 20 log10(|mu_t-mu_b| / sqrt(var_t+var_b)).
/// Degenerate cases map to +-infinity sentinels.
CrCnr cr_cnr(const Tensor& envelope_image, const Roi& target, const Roi& background);

/// Full width at half maximum of the lateral profile through the wire's
/// envelope peak, in millimeters (width in radians times depth).
/// wire_r/wire_theta give the expected position; the peak is searched in a
/// small window around it.
double lateral_resolution_mm(const Tensor& envelope_image, const sim::PolarGrid& grid,
                             double wire_r, double wire_theta);

struct MetricsReport {
    double psnr_db = 0.0;
    double ssim_value = 0.0;
    double mi_nats = 0.0;
    std::vector<CrCnr> contrast;      // per ROI pair
    std::vector<double> lr_mm;        // per wire target
    double max_i = 0.0;
    std::size_t mi_bins = 64;
};

}  // namespace dw::metrics
