#include "dwrecon/ussim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dwrecon/parallel.hpp"

namespace dw::sim {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void ProbeConfig::validate() const {
    if (element_count < 2) throw std::invalid_argument("probe: need at least 2 elements");
    if (pitch <= 0 || center_frequency <= 0 || sampling_frequency <= 0 ||
        speed_of_sound <= 0 || pulse_cycles <= 0)
        throw std::invalid_argument("probe: physical quantities must be positive");
    if (sampling_frequency <= 2.0 * center_frequency)
        throw std::invalid_argument("probe: fs must exceed 2*fc");
}

void SequenceConfig::validate() const {
    if (angles.empty()) throw std::invalid_argument("sequence: no transmit angles");
    for (double a : angles)
        if (std::abs(a) >= kPi / 2)
            throw std::invalid_argument("sequence: angles must lie within +-pi/2");
    if (virtual_source_radius <= 0)
        throw std::invalid_argument("sequence: virtual source radius must be positive");
}

double default_virtual_source_radius(const ProbeConfig& probe, double sector_rad) {
    // Source distance putting the array edges on the sector's limiting rays.
    return probe.aperture() / 2.0 / std::tan(sector_rad / 2.0);
}

SequenceConfig SequenceConfig::standard(const ProbeConfig& probe, std::size_t n,
                                        double max_angle_rad) {
    if (n < 1) throw std::invalid_argument("sequence: need at least one transmit");
    SequenceConfig seq;
    seq.virtual_source_radius = default_virtual_source_radius(probe);
    if (n == 1) {
        seq.angles.push_back(0.0);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            seq.angles.push_back(-max_angle_rad + 2.0 * max_angle_rad * static_cast<double>(i) /
                                                      static_cast<double>(n - 1));
    }
    return seq;
}

void PolarGrid::validate() const {
    if (depth_samples < 2 || line_count < 2)
        throw std::invalid_argument("grid: need at least 2x2 samples");
    if (depth_max <= depth_min || depth_min < 0)
        throw std::invalid_argument("grid: bad depth range");
    if (sector_rad <= 0 || sector_rad > kPi)
        throw std::invalid_argument("grid: bad sector");
}

PolarGrid PolarGrid::full_scale() {
    PolarGrid g;
    g.depth_samples = 512;
    g.line_count = 256;
    g.depth_max = 0.11;
    return g;
}

PolarGrid PolarGrid::desk_scale() { return PolarGrid{}; }

PhantomSpec make_phantom(const std::string& kind, std::uint64_t seed,
                         const ProbeConfig& probe, const PolarGrid& grid,
                         const PhantomOptions& opts) {
    probe.validate();
    grid.validate();
    if (kind != "speckle" && kind != "cyst" && kind != "wires" && kind != "mixed")
        throw std::invalid_argument("make_phantom: unknown kind '" + kind + "'");

    PhantomSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    std::mt19937_64 rng(seed);

    const double margin = opts.margin_fraction;
    const double r_lo = std::max(grid.depth_min, margin * grid.depth_max);
    const double r_hi = grid.depth_max * (1.0 - margin);
    const double th_half = grid.sector_rad / 2.0 * (1.0 - margin);

    // Resolution cell: axial pulse length times mid-depth lateral beam width.
    const double axial_res = probe.speed_of_sound * probe.pulse_cycles /
                             (2.0 * probe.center_frequency);
    const double r_mid = 0.5 * (r_lo + r_hi);
    const double lateral_res = probe.wavelength() * r_mid / probe.aperture();
    const double cell_area = axial_res * lateral_res;
    const double sector_area = th_half * (r_hi * r_hi - r_lo * r_lo);
    const std::size_t n_speckle =
        static_cast<std::size_t>(std::ceil(opts.speckle_per_cell * sector_area / cell_area));

    if (kind == "cyst" || kind == "mixed") {
        const double r1 = grid.depth_max / 3.0;
        const double r2 = grid.depth_max * 5.0 / 6.0;
        spec.anechoic.push_back(Ellipse{0.0, r1, 0.08 * grid.depth_max, 0.08 * grid.depth_max});
        spec.anechoic.push_back(Ellipse{0.0, r2, 0.10 * grid.depth_max, 0.10 * grid.depth_max});
    }

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> amp(0.0, 1.0);
    spec.scatterers.reserve(n_speckle);
    std::size_t placed = 0;
    while (placed < n_speckle) {
        const double u = unif(rng);
        const double r = std::sqrt(r_lo * r_lo + u * (r_hi * r_hi - r_lo * r_lo));
        const double th = -th_half + 2.0 * th_half * unif(rng);
        const double a = amp(rng);
        const double x = r * std::sin(th), z = r * std::cos(th);
        ++placed;  // anechoic carving removes scatterers, it does not resample
        bool inside = false;
        for (const auto& e : spec.anechoic)
            if (e.contains(x, z)) { inside = true; break; }
        if (!inside) spec.scatterers.push_back(Scatterer{x, z, a});
    }

    if (kind == "wires" || kind == "mixed") {
        // Reference wire depths 20..100 mm on an 110 mm image, scaled to the grid.
        const double fractions[6] = {20.0 / 110.0, 40.0 / 110.0, 60.0 / 110.0,
                                     80.0 / 110.0, 90.0 / 110.0, 100.0 / 110.0};
        for (double f : fractions) {
            const double r = f * grid.depth_max;
            if (r <= r_lo || r >= r_hi) continue;
            Scatterer w{0.0, r, opts.wire_amplitude};
            spec.wire_targets.push_back(w);
            spec.scatterers.push_back(w);
        }
    }
    return spec;
}

namespace {

/// Gaussian-windowed cosine pulse sampled on a fine grid for fast lookup.
struct PulseTable {
    std::vector<double> values;
    double dt = 0.0;      // table step
    double half_span = 0.0;  // support is [-half_span, +half_span]

    PulseTable(const ProbeConfig& probe, std::size_t oversample = 64) {
        const double duration = probe.pulse_cycles / probe.center_frequency;
        const double sigma = duration / 2.3548200450309493;  // envelope FWHM = duration
        half_span = 3.0 * sigma;
        dt = 1.0 / (probe.sampling_frequency * static_cast<double>(oversample));
        const std::size_t n = static_cast<std::size_t>(std::ceil(2.0 * half_span / dt)) + 2;
        values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = -half_span + static_cast<double>(i) * dt;
            values[i] = std::cos(2.0 * kPi * probe.center_frequency * t) *
                        std::exp(-t * t / (2.0 * sigma * sigma));
        }
    }

    double operator()(double t) const {
        const double pos = (t + half_span) / dt;
        if (pos < 0.0) return 0.0;
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= values.size()) return 0.0;
        const double f = pos - static_cast<double>(i);
        return values[i] * (1.0 - f) + values[i + 1] * f;
    }
};

inline double dist(double x0, double z0, double x1, double z1) {
    const double dx = x0 - x1, dz = z0 - z1;
    return std::sqrt(dx * dx + dz * dz);
}

constexpr double kMinLeg = 1e-3;  // spreading-loss clamp, 1 mm

}  // namespace

ChannelData simulate_rf(const PhantomSpec& phantom, const ProbeConfig& probe,
                        const SequenceConfig& seq, double noise_std,
                        std::uint64_t noise_seed) {
    probe.validate();
    seq.validate();
    if (noise_std < 0.0) throw std::invalid_argument("simulate_rf: negative noise_std");
    const double c = probe.speed_of_sound;
    const double fs = probe.sampling_frequency;
    const double R = seq.virtual_source_radius;
    const PulseTable pulse(probe);

    // Recording window: latest possible echo over all transmits and elements.
    double t_max = 0.0;
    const double half_ap = probe.aperture() / 2.0;
    for (const auto& s : phantom.scatterers) {
        const double r = std::sqrt(s.x * s.x + s.z * s.z);
        const double tx = (r + R) - R;  // worst case |r-s| <= r + R
        const double rx = r + half_ap;
        t_max = std::max(t_max, (tx + rx) / c);
    }
    t_max += pulse.half_span + 2.0 / fs;
    const std::size_t nt = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(t_max * fs)) + 1);

    ChannelData out;
    out.sampling_frequency = fs;
    out.transmits.assign(seq.angles.size(), Tensor({probe.element_count, nt}));

    std::vector<std::size_t> skipped(seq.angles.size(), 0);
    parallel_for(seq.angles.size(), [&](std::size_t ti) {
        const double a = seq.angles[ti];
        const double sx = -R * std::sin(a), sz = -R * std::cos(a);
        Tensor& ch = out.transmits[ti];
        for (const auto& sc : phantom.scatterers) {
            const double d_tx = dist(sc.x, sc.z, sx, sz) - R;
            const double amp_tx = sc.amplitude / std::max(dist(sc.x, sc.z, sx, sz), kMinLeg);
            for (std::size_t e = 0; e < probe.element_count; ++e) {
                const double d_rx = dist(sc.x, sc.z, probe.element_x(e), 0.0);
                const double t_arr = (d_tx + d_rx) / c;
                const double amp = amp_tx / std::max(d_rx, kMinLeg);
                const double lo = (t_arr - pulse.half_span) * fs;
                const double hi = (t_arr + pulse.half_span) * fs;
                if (hi < 0.0 || lo > static_cast<double>(nt - 1)) {
                    ++skipped[ti];
                    continue;
                }
                const std::size_t n0 = lo < 0.0 ? 0 : static_cast<std::size_t>(std::ceil(lo));
                const std::size_t n1 =
                    std::min<std::size_t>(nt - 1, static_cast<std::size_t>(std::floor(hi)));
                double* row = ch.data() + e * nt;
                for (std::size_t n = n0; n <= n1; ++n)
                    row[n] += amp * pulse(static_cast<double>(n) / fs - t_arr);
            }
        }
    });
    for (std::size_t s : skipped) out.skipped_scatterers += s;
    add_channel_noise(out, noise_std, noise_seed);
    return out;
}

void add_channel_noise(ChannelData& data, double noise_std, std::uint64_t noise_seed) {
    if (noise_std < 0.0) throw std::invalid_argument("add_channel_noise: negative noise_std");
    if (noise_std == 0.0) return;
    parallel_for(data.transmits.size(), [&](std::size_t ti) {
        std::mt19937_64 rng(noise_seed * 31ull + ti);
        std::normal_distribution<double> noise(0.0, noise_std);
        Tensor& ch = data.transmits[ti];
        for (std::size_t i = 0; i < ch.size(); ++i) ch[i] += noise(rng);
    });
}

Tensor das_beamform(const Tensor& channels, const ProbeConfig& probe, double angle,
                    double virtual_source_radius, double sampling_frequency,
                    const PolarGrid& grid, BeamformStats* stats) {
    probe.validate();
    grid.validate();
    if (channels.rank() != 2 || channels.dim(0) != probe.element_count)
        throw std::invalid_argument("das: channel data must be [elements, samples]");
    const std::size_t nt = channels.dim(1);
    const double c = probe.speed_of_sound;
    const double fs = sampling_frequency;
    const double R = virtual_source_radius;
    const double sx = -R * std::sin(angle), sz = -R * std::cos(angle);
    const std::size_t h = grid.depth_samples, w = grid.line_count;
    const std::size_t ne = probe.element_count;

    std::vector<double> ex(ne);
    for (std::size_t e = 0; e < ne; ++e) ex[e] = probe.element_x(e);

    Tensor img({h, w});
    std::vector<std::size_t> zeroed_per_row(h, 0);
    parallel_for(h, [&](std::size_t i) {
        const double r = grid.radius(i);
        for (std::size_t j = 0; j < w; ++j) {
            const double th = grid.theta(j);
            const double px = r * std::sin(th), pz = r * std::cos(th);
            const double d_tx = dist(px, pz, sx, sz) - R;
            double acc = 0.0;
            bool ok = true;
            for (std::size_t e = 0; e < ne; ++e) {
                const double tau = (d_tx + dist(px, pz, ex[e], 0.0)) / c;
                const double pos = tau * fs;
                if (pos < 0.0 || pos > static_cast<double>(nt - 2)) {
                    ok = false;
                    break;
                }
                const std::size_t n = static_cast<std::size_t>(pos);
                const double f = pos - static_cast<double>(n);
                const double* row = channels.data() + e * nt;
                acc += row[n] * (1.0 - f) + row[n + 1] * f;
            }
            if (ok) {
                img.at(i, j) = acc / static_cast<double>(ne);
            } else {
                img.at(i, j) = 0.0;
                ++zeroed_per_row[i];
            }
        }
    });
    if (stats)
        for (std::size_t z : zeroed_per_row) stats->zeroed_pixels += z;
    return img;
}

Tensor beamform_stack(const ChannelData& data, const ProbeConfig& probe,
                      const SequenceConfig& seq, const PolarGrid& grid) {
    if (data.transmits.size() != seq.angles.size())
        throw std::invalid_argument("beamform_stack: transmit count mismatch");
    const std::size_t n = seq.angles.size();
    Tensor stack({n, grid.depth_samples, grid.line_count});
    const std::size_t plane = grid.depth_samples * grid.line_count;
    for (std::size_t t = 0; t < n; ++t) {
        Tensor img = das_beamform(data.transmits[t], probe, seq.angles[t],
                                  seq.virtual_source_radius, data.sampling_frequency, grid);
        std::copy(img.data(), img.data() + plane, stack.data() + t * plane);
    }
    return stack;
}

std::vector<std::size_t> subset_indices(const SequenceConfig& seq,
                                        const std::vector<double>& target_angles) {
    std::vector<std::size_t> idx;
    for (double target : target_angles) {
        std::size_t best = 0;
        double best_d = std::abs(seq.angles[0] - target);
        for (std::size_t i = 1; i < seq.angles.size(); ++i) {
            const double d = std::abs(seq.angles[i] - target);
            if (d < best_d) {
                best = i;
                best_d = d;
            }
        }
        idx.push_back(best);
    }
    return idx;
}

AcquiredSample acquire_sample(const PhantomSpec& phantom, const ProbeConfig& probe,
                              const SequenceConfig& seq, const PolarGrid& grid,
                              double noise_std, std::uint64_t noise_seed) {
    ChannelData data = simulate_rf(phantom, probe, seq, noise_std, noise_seed);
    AcquiredSample sample;
    sample.full_stack = beamform_stack(data, probe, seq, grid);
    const double deg30 = 30.0 * kPi / 180.0;
    sample.x_indices = subset_indices(seq, {-deg30, 0.0, deg30});
    return sample;
}

}  // namespace dw::sim
