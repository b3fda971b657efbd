#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dwrecon/tensor.hpp"

namespace dw::sim {

struct ProbeConfig {
    std::size_t element_count = 64;
    double pitch = 0.3e-3;             // m
    double center_frequency = 3e6;     // Hz
    double fractional_bandwidth = 0.6; // informational
    double pulse_cycles = 1.5;
    double sampling_frequency = 12e6;  // Hz
    double speed_of_sound = 1540.0;    // m/s

    void validate() const;
    double aperture() const { return static_cast<double>(element_count) * pitch; }
    double wavelength() const { return speed_of_sound / center_frequency; }
    /// Element center abscissa; the array lies on z = 0 centered at x = 0.
    double element_x(std::size_t e) const {
        return (static_cast<double>(e) - (static_cast<double>(element_count) - 1.0) / 2.0) * pitch;
    }
};

/// Steered diverging-wave transmit set. The virtual source for angle a sits
/// at (-R sin a, -R cos a) behind the array, R = virtual_source_radius.
struct SequenceConfig {
    std::vector<double> angles;  // radians
    double virtual_source_radius = 0.0;

    void validate() const;
    /// n angles spanning [-max_angle, +max_angle]; default 31 over +-30 deg.
    static SequenceConfig standard(const ProbeConfig& probe, std::size_t n = 31,
                                   double max_angle_rad = 30.0 * 3.14159265358979323846 / 180.0);
};

/// R such that a diverging wave from the virtual source spans the sector.
double default_virtual_source_radius(const ProbeConfig& probe,
                                     double sector_rad = 3.14159265358979323846 / 2.0);

/// Beamforming grid in (depth, steering angle); apex at the array center.
struct PolarGrid {
    std::size_t depth_samples = 128;  // h
    std::size_t line_count = 64;      // w
    double depth_min = 0.0;           // m
    double depth_max = 0.055;         // m
    double sector_rad = 3.14159265358979323846 / 2.0;

    void validate() const;
    double radius(std::size_t i) const {
        return depth_min + (depth_max - depth_min) * static_cast<double>(i) /
                               static_cast<double>(depth_samples - 1);
    }
    double theta(std::size_t j) const {
        return -sector_rad / 2.0 +
               sector_rad * static_cast<double>(j) / static_cast<double>(line_count - 1);
    }
    static PolarGrid full_scale();  // 512 x 256, 11 cm x 90 deg
    static PolarGrid desk_scale();  // 128 x 64, 5.5 cm x 90 deg
};

struct Scatterer {
    double x = 0.0, z = 0.0;
    double amplitude = 0.0;
};

struct Ellipse {
    double cx = 0.0, cz = 0.0;
    double rx = 0.0, rz = 0.0;
    bool contains(double x, double z) const {
        const double dx = (x - cx) / rx, dz = (z - cz) / rz;
        return dx * dx + dz * dz <= 1.0;
    }
};

struct PhantomSpec {
    std::string kind;
    std::uint64_t seed = 0;
    std::vector<Scatterer> scatterers;
    std::vector<Ellipse> anechoic;        // cyst regions (empty of scatterers)
    std::vector<Scatterer> wire_targets;  // also present in `scatterers`
};

struct PhantomOptions {
    double speckle_per_cell = 10.0;  // scatterers per resolution cell
    double wire_amplitude = 100.0;
    double margin_fraction = 0.03;   // keep scatterers off the sector edges
};

/// kind in {speckle, cyst, wires, mixed}. Scatterers fill the grid sector;
/// cysts are carved at 1/3 and 5/6 of max depth, wires sit at the reference
/// depth fractions 20/110 ... 100/110.
PhantomSpec make_phantom(const std::string& kind, std::uint64_t seed,
                         const ProbeConfig& probe, const PolarGrid& grid,
                         const PhantomOptions& opts = {});

/// Raw per-transmit channel data, elements x time samples, t = 0 when the
/// transmitted wavefront passes the array center.
struct ChannelData {
    std::vector<Tensor> transmits;  // each [element_count, sample_count]
    double sampling_frequency = 0.0;
    std::size_t skipped_scatterers = 0;
};

/// noise_std > 0 adds white Gaussian noise to every channel sample,
/// reproducible from noise_seed independently of the thread count.
ChannelData simulate_rf(const PhantomSpec& phantom, const ProbeConfig& probe,
                        const SequenceConfig& seq, double noise_std = 0.0,
                        std::uint64_t noise_seed = 0);

/// The noise stage of simulate_rf, applicable to an already-synthesized
/// acquisition (one RNG stream per transmit; thread-count independent).
void add_channel_noise(ChannelData& data, double noise_std, std::uint64_t noise_seed);

/// Delay-and-sum with linear temporal interpolation and uniform apodization.
/// Pixels whose delays fall outside the recorded window are zeroed.
struct BeamformStats {
    std::size_t zeroed_pixels = 0;
};

Tensor das_beamform(const Tensor& channels, const ProbeConfig& probe, double angle,
                    double virtual_source_radius, double sampling_frequency,
                    const PolarGrid& grid, BeamformStats* stats = nullptr);

/// Beamformed images for every transmit: [n, h, w].
Tensor beamform_stack(const ChannelData& data, const ProbeConfig& probe,
                      const SequenceConfig& seq, const PolarGrid& grid);

/// Indices of the sequence angles closest to the requested ones.
std::vector<std::size_t> subset_indices(const SequenceConfig& seq,
                                        const std::vector<double>& target_angles);

struct AcquiredSample {
    Tensor full_stack;               // [n, h, w]
    std::vector<std::size_t> x_indices;  // the m-transmit input subset
};

/// Simulates and beamforms every transmit; x_indices selects the
/// {-30, 0, +30} degree subset (nearest angles, in that order).
AcquiredSample acquire_sample(const PhantomSpec& phantom, const ProbeConfig& probe,
                              const SequenceConfig& seq, const PolarGrid& grid,
                              double noise_std = 0.0, std::uint64_t noise_seed = 0);

}  // namespace dw::sim
