#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dwrecon/metrics.hpp"
#include "dwrecon/trainer.hpp"
#include "dwrecon/ussim.hpp"

namespace dw::data {

/// Everything needed to synthesize one acquisition.
struct WorldConfig {
    sim::ProbeConfig probe;
    sim::SequenceConfig seq;
    sim::PolarGrid grid;
    std::vector<std::string> phantom_kinds = {"speckle", "cyst", "wires", "mixed"};
    double channel_noise_std = 0.0;     // additive white noise on raw channels
    double channel_noise_jitter = 0.0;  // per-sample level spread: sigma_i in
                                        // [std*(1-jitter), std], seeded by the
                                        // phantom seed

    static WorldConfig desk_scale();
};

/// One simulated (X, Y) pair before normalization: X = the 3-DW input stack
/// (noisy if the world says so), Y = the noise-free full compound,
/// full_stack retained for compounding sweeps.
struct RawSample {
    Tensor x;           // [m, h, w]
    Tensor y;           // [1, h, w]
    Tensor full_stack;  // [n, h, w]
    std::string kind;
    std::uint64_t phantom_seed = 0;
    sim::PhantomSpec phantom;
};

RawSample simulate_sample(const WorldConfig& world, const std::string& kind,
                          std::uint64_t phantom_seed);

struct BuiltDataset {
    train::Dataset ds;
    double global_scale = 1.0;  // all values were multiplied by this
    std::vector<std::string> kinds;
    std::vector<std::uint64_t> seeds;
};

/// `count` samples cycling through the world's phantom kinds, globally
/// normalized to unit max-abs, split by the given fractions.
BuiltDataset build_dataset(const WorldConfig& world, std::size_t count, std::uint64_t seed,
                           const double fractions[3],
                           const std::function<void(std::size_t, std::size_t)>& progress = nullptr);

/// Target/background ROI pair per anechoic region, in grid coordinates.
struct CystRois {
    metrics::Roi target;
    metrics::Roi background;
};

std::vector<CystRois> cyst_rois(const sim::PhantomSpec& phantom, const sim::PolarGrid& grid);

// --- JSON config and manifest plumbing -------------------------------------

std::string world_to_json_string(const WorldConfig& world);
WorldConfig world_from_json_string(const std::string& text);
WorldConfig load_world_config(const std::string& path);  // JSON file; "{}" = desk defaults

struct ManifestEntry {
    std::string id;
    std::string x_path, y_path;
    std::string kind;
    std::uint64_t phantom_seed = 0;
    std::string split;  // train | val | test
};

struct Manifest {
    std::string root;
    std::vector<ManifestEntry> entries;
    double global_scale = 1.0;
    WorldConfig world;
    int format_version = 1;
};

void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

/// Loads every referenced tensor into a training dataset.
BuiltDataset load_dataset(const Manifest& m);

}  // namespace dw::data
