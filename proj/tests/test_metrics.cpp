#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dwrecon/metrics.hpp"
#include "test_util.hpp"

using namespace dw;
using namespace dw::metrics;

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor uniform_image(std::vector<std::size_t> dims, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Tensor t(std::move(dims));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = unif(rng);
    return t;
}

}  // namespace

TEST_CASE("roi_stats on a known ramp") {
    Tensor img({10, 10});
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) img.at(i, j) = static_cast<double>(j);
    RoiStats st = roi_stats(img, Roi::rectangle(0, 10, 0, 10));
    CHECK(st.pixel_count == 100);
    CHECK(st.mean == doctest::Approx(4.5));
    CHECK(st.variance == doctest::Approx(8.25));  // population variance of 0..9

    RoiStats col = roi_stats(img, Roi::rectangle(0, 10, 3, 8));
    CHECK(col.pixel_count == 50);
    CHECK(col.mean == doctest::Approx(5.0));
    CHECK(col.variance == doctest::Approx(2.0));
}

TEST_CASE("roi_stats rejects regions below 25 pixels") {
    Tensor img({10, 10});
    CHECK_THROWS(roi_stats(img, Roi::rectangle(0, 4, 0, 4)));
}

TEST_CASE("elliptical roi covers approximately pi*r1*r2 pixels") {
    Tensor img({64, 64});
    RoiStats st = roi_stats(img, Roi::ellipse(32, 32, 10, 15));
    const double expected = kPi * 10.0 * 15.0;
    CHECK(std::abs(static_cast<double>(st.pixel_count) - expected) < 0.05 * expected);
}

TEST_CASE("psnr of a uniform 0.2 error against a peak-2 reference is 20 dB") {
    Tensor ref({4, 4}), pred({4, 4});
    for (std::size_t i = 0; i < 16; ++i) {
        ref[i] = (i % 2 == 0) ? 2.0 : -1.0;
        pred[i] = ref[i] + 0.2;
    }
    CHECK(psnr(pred, ref) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr of identical images is +infinity") {
    std::mt19937_64 rng(1);
    Tensor a = tu::random_tensor({8, 8}, rng);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, a) > 0);
}

TEST_CASE("psnr matches the closed form on random data") {
    std::mt19937_64 rng(3);
    Tensor ref = tu::random_tensor({16, 16}, rng);
    Tensor pred = tu::random_tensor({16, 16}, rng);
    double max_i = 0.0, mse = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        max_i = std::max(max_i, std::abs(ref[i]));
        mse += (pred[i] - ref[i]) * (pred[i] - ref[i]);
    }
    mse /= 256.0;
    CHECK(psnr(pred, ref) == doctest::Approx(10.0 * std::log10(max_i * max_i / mse)).epsilon(1e-12));
}

TEST_CASE("psnr is invariant to joint scaling and decreases with noise") {
    std::mt19937_64 rng(4);
    Tensor ref = tu::random_tensor({12, 12}, rng);
    Tensor noise = tu::random_tensor({12, 12}, rng);

    double prev = std::numeric_limits<double>::infinity();
    for (double amp : {0.01, 0.1, 1.0}) {
        Tensor pred(ref.dims());
        for (std::size_t i = 0; i < ref.size(); ++i) pred[i] = ref[i] + amp * noise[i];
        const double p = psnr(pred, ref);
        CHECK(p < prev);
        prev = p;

        Tensor pred2(ref.dims()), ref2(ref.dims());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            pred2[i] = 7.5 * pred[i];
            ref2[i] = 7.5 * ref[i];
        }
        CHECK(psnr(pred2, ref2) == doctest::Approx(p).epsilon(1e-9));
    }
}

TEST_CASE("ssim of an image with itself is 1") {
    std::mt19937_64 rng(5);
    Tensor a = tu::random_tensor({9, 9}, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim matches the global formula on a doubled image") {
    Tensor ref({2, 2}), pred({2, 2});
    ref[0] = 0; ref[1] = 1; ref[2] = 0; ref[3] = 1;
    for (std::size_t i = 0; i < 4; ++i) pred[i] = 2.0 * ref[i];
    // normalized by ref peak 1: mx=1, my=0.5, vx=1, vy=0.25, cov=0.5
    const double c1 = 1e-4, c2 = 9e-4;
    const double expected = (2.0 * 1.0 * 0.5 + c1) * (2.0 * 0.5 + c2) /
                            ((1.0 + 0.25 + c1) * (1.0 + 0.25 + c2));
    CHECK(ssim(pred, ref) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ssim penalizes mean shift and noise") {
    std::mt19937_64 rng(6);
    Tensor ref = uniform_image({16, 16}, rng);
    Tensor shifted(ref.dims()), noisy(ref.dims());
    std::normal_distribution<double> g(0.0, 0.3);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        shifted[i] = ref[i] + 0.5;
        noisy[i] = ref[i] + g(rng);
    }
    CHECK(ssim(shifted, ref) < 0.9);
    CHECK(ssim(noisy, ref) < 0.9);
    CHECK(ssim(shifted, ref) > -1.0);
}

TEST_CASE("mutual information of an image with itself equals its entropy") {
    std::mt19937_64 rng(7);
    Tensor a = uniform_image({32, 32}, rng);
    CHECK(mutual_information(a, a) == doctest::Approx(histogram_entropy(a)).epsilon(1e-9));
}

TEST_CASE("mutual information survives a monotone-decreasing relabeling") {
    std::mt19937_64 rng(8);
    Tensor a = uniform_image({32, 32}, rng);
    Tensor b(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = -a[i];
    CHECK(mutual_information(a, b) == doctest::Approx(histogram_entropy(a)).epsilon(1e-9));
}

TEST_CASE("mutual information is symmetric") {
    std::mt19937_64 rng(9);
    Tensor a = uniform_image({24, 24}, rng);
    Tensor b = uniform_image({24, 24}, rng);
    CHECK(mutual_information(a, b) == doctest::Approx(mutual_information(b, a)).epsilon(1e-12));
}

TEST_CASE("independent images share almost no information") {
    std::mt19937_64 rng(10);
    Tensor a = uniform_image({256, 256}, rng);
    Tensor b = uniform_image({256, 256}, rng);
    CHECK(mutual_information(a, b) < 0.05);
}

TEST_CASE("constant images carry zero information") {
    Tensor a({8, 8}), b({8, 8});
    for (std::size_t i = 0; i < 64; ++i) b[i] = 3.0;
    CHECK(mutual_information(a, b) == 0.0);
    CHECK(histogram_entropy(a) == doctest::Approx(0.0));
}

TEST_CASE("cr and cnr on a deterministic two-region image") {
    Tensor img({20, 20});
    // background: columns 10..20, alternating 0.5/1.5 (mean 1, var 0.25)
    // target: columns 0..10, constant 0.5
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j)
            img.at(i, j) = j < 10 ? 0.5 : ((i + j) % 2 == 0 ? 0.5 : 1.5);
    const Roi target = Roi::rectangle(0, 20, 0, 10);
    const Roi background = Roi::rectangle(0, 20, 10, 20);
    CrCnr r = cr_cnr(img, target, background);
    CHECK(r.cr_db == doctest::Approx(-20.0 * std::log10(0.5)).epsilon(1e-12));
    // |0.5 - 1.0| / sqrt(0 + 0.25) = 1 -> 0 dB
    CHECK(r.cnr_db == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("cr and cnr match Rayleigh statistics") {
    std::mt19937_64 rng(11);
    const double sigma_t = 0.2, sigma_b = 1.0;
    Tensor img({400, 200});
    std::uniform_real_distribution<double> unif(1e-12, 1.0);
    for (std::size_t i = 0; i < 400; ++i)
        for (std::size_t j = 0; j < 200; ++j) {
            const double sigma = j < 100 ? sigma_t : sigma_b;
            img.at(i, j) = sigma * std::sqrt(-2.0 * std::log(unif(rng)));
        }
    CrCnr r = cr_cnr(img, Roi::rectangle(0, 400, 0, 100), Roi::rectangle(0, 400, 100, 200));

    // Rayleigh: mean = sigma sqrt(pi/2), var = (2 - pi/2) sigma^2
    const double cr_theory = -20.0 * std::log10(sigma_t / sigma_b);
    const double mu_d = (sigma_b - sigma_t) * std::sqrt(kPi / 2.0);
    const double sd = std::sqrt((2.0 - kPi / 2.0) * (sigma_t * sigma_t + sigma_b * sigma_b));
    const double cnr_theory = 20.0 * std::log10(mu_d / sd);
    CHECK(r.cr_db == doctest::Approx(cr_theory).epsilon(0.02));
    CHECK(r.cnr_db == doctest::Approx(cnr_theory).epsilon(0.02));
}

TEST_CASE("anechoic target yields the +infinity contrast sentinel") {
    Tensor img({20, 20});
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 10; j < 20; ++j) img.at(i, j) = 1.0;
    CrCnr r = cr_cnr(img, Roi::rectangle(0, 20, 0, 10), Roi::rectangle(0, 20, 10, 20));
    CHECK(std::isinf(r.cr_db));
    CHECK(r.cr_db > 0);
}

TEST_CASE("fwhm of a gaussian lateral profile is 2.3548 sigma") {
    sim::PolarGrid g = sim::PolarGrid::desk_scale();
    const double dth = g.sector_rad / static_cast<double>(g.line_count - 1);
    const std::size_t wire_row = 69, wire_col = 32;
    const double sigma_th = 3.0 * dth;
    const double th0 = g.theta(wire_col);

    Tensor env({g.depth_samples, g.line_count});
    for (std::size_t i = 0; i < g.depth_samples; ++i) {
        const double di = static_cast<double>(i) - static_cast<double>(wire_row);
        const double axial = std::exp(-di * di / 8.0);
        for (std::size_t j = 0; j < g.line_count; ++j) {
            const double dt = g.theta(j) - th0;
            env.at(i, j) = axial * std::exp(-dt * dt / (2.0 * sigma_th * sigma_th));
        }
    }
    const double lr = lateral_resolution_mm(env, g, g.radius(wire_row), th0);
    const double expected = 2.3548200450309493 * sigma_th * g.radius(wire_row) * 1000.0;
    CHECK(lr == doctest::Approx(expected).epsilon(0.02));

    // scaling the envelope leaves the width unchanged
    for (std::size_t i = 0; i < env.size(); ++i) env[i] *= 42.0;
    CHECK(lateral_resolution_mm(env, g, g.radius(wire_row), th0) ==
          doctest::Approx(lr).epsilon(1e-12));
}

TEST_CASE("fwhm of a triangular profile equals its half-height width exactly") {
    sim::PolarGrid g = sim::PolarGrid::desk_scale();
    const double dth = g.sector_rad / static_cast<double>(g.line_count - 1);
    const std::size_t wire_row = 50, wire_col = 20;
    const double base_half_width = 6.0;  // pixels; FWHM = 6 pixels

    Tensor env({g.depth_samples, g.line_count});
    for (std::size_t j = 0; j < g.line_count; ++j) {
        const double d = std::abs(static_cast<double>(j) - static_cast<double>(wire_col));
        env.at(wire_row, j) = std::max(0.0, 1.0 - d / base_half_width);
    }
    const double lr = lateral_resolution_mm(env, g, g.radius(wire_row), g.theta(wire_col));
    const double expected = base_half_width * dth * g.radius(wire_row) * 1000.0;
    CHECK(lr == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("fwhm rejects a wire that does not stand out") {
    sim::PolarGrid g = sim::PolarGrid::desk_scale();
    Tensor env({g.depth_samples, g.line_count});
    for (std::size_t i = 0; i < env.size(); ++i) env[i] = 1.0;
    CHECK_THROWS(lateral_resolution_mm(env, g, 0.03, 0.0));
}
