#include "dwrecon/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "dwrecon/tensor_io.hpp"

namespace dw::data {

using nlohmann::json;

WorldConfig WorldConfig::desk_scale() {
    WorldConfig w;
    w.probe = sim::ProbeConfig{};
    w.grid = sim::PolarGrid::desk_scale();
    w.seq = sim::SequenceConfig::standard(w.probe);
    return w;
}

RawSample simulate_sample(const WorldConfig& world, const std::string& kind,
                          std::uint64_t phantom_seed) {
    RawSample out;
    out.kind = kind;
    out.phantom_seed = phantom_seed;
    out.phantom = sim::make_phantom(kind, phantom_seed, world.probe, world.grid);
    double noise_std = world.channel_noise_std;
    if (world.channel_noise_jitter > 0.0) {
        std::mt19937_64 rng(phantom_seed ^ 0xd1b54a32d192ed03ull);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        noise_std *= 1.0 - world.channel_noise_jitter * u(rng);
    }

    sim::ChannelData rf = sim::simulate_rf(out.phantom, world.probe, world.seq);
    Tensor clean_stack = sim::beamform_stack(rf, world.probe, world.seq, world.grid);

    const std::size_t h = world.grid.depth_samples, w = world.grid.line_count;
    const std::size_t plane = h * w;
    const std::size_t n = clean_stack.dim(0);
    Tensor compounded({h, w});
    {
        // mean of all transmits, noise-free: the target never inherits
        // acquisition noise
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double* src = clean_stack.data() + t * plane;
            for (std::size_t p = 0; p < plane; ++p) compounded[p] += src[p] * inv;
        }
    }
    out.y = Tensor({1, h, w}, std::move(compounded.storage()));

    Tensor stack;
    if (noise_std > 0.0) {
        sim::add_channel_noise(rf, noise_std, phantom_seed ^ 0x9e3779b97f4a7c15ull);
        stack = sim::beamform_stack(rf, world.probe, world.seq, world.grid);
    } else {
        stack = std::move(clean_stack);
    }

    const double deg30 = 30.0 * 3.14159265358979323846 / 180.0;
    const std::vector<std::size_t> x_idx =
        sim::subset_indices(world.seq, {-deg30, 0.0, deg30});
    out.x = Tensor({x_idx.size(), h, w});
    for (std::size_t s = 0; s < x_idx.size(); ++s)
        std::copy(stack.data() + x_idx[s] * plane,
                  stack.data() + (x_idx[s] + 1) * plane,
                  out.x.data() + s * plane);
    out.full_stack = std::move(stack);
    return out;
}

BuiltDataset build_dataset(const WorldConfig& world, std::size_t count, std::uint64_t seed,
                           const double fractions[3],
                           const std::function<void(std::size_t, std::size_t)>& progress) {
    if (count == 0) throw std::invalid_argument("build_dataset: count must be positive");
    BuiltDataset out;
    out.ds.samples.reserve(count);

    double max_abs = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::string& kind = world.phantom_kinds[i % world.phantom_kinds.size()];
        const std::uint64_t phantom_seed = seed * 1000003ull + i;
        RawSample raw = simulate_sample(world, kind, phantom_seed);
        for (std::size_t p = 0; p < raw.x.size(); ++p)
            max_abs = std::max(max_abs, std::abs(raw.x[p]));
        for (std::size_t p = 0; p < raw.y.size(); ++p)
            max_abs = std::max(max_abs, std::abs(raw.y[p]));
        train::Sample s;
        s.x = raw.x.cast<float>();
        s.y = raw.y.cast<float>();
        out.ds.samples.push_back(std::move(s));
        out.kinds.push_back(kind);
        out.seeds.push_back(phantom_seed);
        if (progress) progress(i + 1, count);
    }

    out.global_scale = max_abs > 0.0 ? 1.0 / max_abs : 1.0;
    const float scale = static_cast<float>(out.global_scale);
    for (auto& s : out.ds.samples) {
        for (auto& v : s.x.storage()) v *= scale;
        for (auto& v : s.y.storage()) v *= scale;
    }
    train::split_dataset(out.ds, fractions, seed);
    return out;
}

std::vector<CystRois> cyst_rois(const sim::PhantomSpec& phantom, const sim::PolarGrid& grid) {
    if (phantom.anechoic.empty())
        throw std::invalid_argument("cyst_rois: phantom has no anechoic regions");
    const std::size_t h = grid.depth_samples, w = grid.line_count;
    const double dr = (grid.depth_max - grid.depth_min) / static_cast<double>(h - 1);
    const double dth = grid.sector_rad / static_cast<double>(w - 1);

    std::vector<CystRois> rois;
    for (const auto& e : phantom.anechoic) {
        const double r_c = std::hypot(e.cx, e.cz);
        const double th_c = std::atan2(e.cx, e.cz);
        const double row_c = (r_c - grid.depth_min) / dr;
        const double col_c = (th_c + grid.sector_rad / 2.0) / dth;
        const double row_r = e.rz / dr;
        const double col_r = e.rx / r_c / dth;  // angular extent at the cyst depth

        CystRois pair;
        // Shrunk target to stay clear of the cyst boundary.
        pair.target = metrics::Roi::ellipse(row_c, col_c, 0.6 * row_r, 0.6 * col_r);
        // Background at the same depth, laterally offset.
        const double bg_lo = col_c + 2.0 * col_r;
        const double bg_hi = std::min(static_cast<double>(w) - 1.0, bg_lo + 2.0 * col_r);
        pair.background = metrics::Roi::rectangle(row_c - 0.6 * row_r, row_c + 0.6 * row_r,
                                                  bg_lo, bg_hi);
        rois.push_back(pair);
    }
    return rois;
}

// --- JSON ------------------------------------------------------------------

namespace {

json probe_to_json(const sim::ProbeConfig& p) {
    return {{"element_count", p.element_count},       {"pitch", p.pitch},
            {"center_frequency", p.center_frequency}, {"fractional_bandwidth", p.fractional_bandwidth},
            {"pulse_cycles", p.pulse_cycles},         {"sampling_frequency", p.sampling_frequency},
            {"speed_of_sound", p.speed_of_sound}};
}

sim::ProbeConfig probe_from_json(const json& j) {
    sim::ProbeConfig p;
    p.element_count = j.value("element_count", p.element_count);
    p.pitch = j.value("pitch", p.pitch);
    p.center_frequency = j.value("center_frequency", p.center_frequency);
    p.fractional_bandwidth = j.value("fractional_bandwidth", p.fractional_bandwidth);
    p.pulse_cycles = j.value("pulse_cycles", p.pulse_cycles);
    p.sampling_frequency = j.value("sampling_frequency", p.sampling_frequency);
    p.speed_of_sound = j.value("speed_of_sound", p.speed_of_sound);
    p.validate();
    return p;
}

json grid_to_json(const sim::PolarGrid& g) {
    return {{"depth_samples", g.depth_samples}, {"line_count", g.line_count},
            {"depth_min", g.depth_min},         {"depth_max", g.depth_max},
            {"sector_rad", g.sector_rad}};
}

sim::PolarGrid grid_from_json(const json& j) {
    sim::PolarGrid g;
    g.depth_samples = j.value("depth_samples", g.depth_samples);
    g.line_count = j.value("line_count", g.line_count);
    g.depth_min = j.value("depth_min", g.depth_min);
    g.depth_max = j.value("depth_max", g.depth_max);
    g.sector_rad = j.value("sector_rad", g.sector_rad);
    g.validate();
    return g;
}

json seq_to_json(const sim::SequenceConfig& s) {
    return {{"angles", s.angles}, {"virtual_source_radius", s.virtual_source_radius}};
}

json world_to_json(const WorldConfig& w) {
    return {{"probe", probe_to_json(w.probe)},
            {"grid", grid_to_json(w.grid)},
            {"sequence", seq_to_json(w.seq)},
            {"phantom_kinds", w.phantom_kinds},
            {"channel_noise_std", w.channel_noise_std},
            {"channel_noise_jitter", w.channel_noise_jitter}};
}

WorldConfig world_from_json(const json& j) {
    WorldConfig w = WorldConfig::desk_scale();
    if (j.contains("probe")) w.probe = probe_from_json(j.at("probe"));
    if (j.contains("grid")) w.grid = grid_from_json(j.at("grid"));
    if (j.contains("sequence")) {
        const json& js = j.at("sequence");
        w.seq.angles = js.value("angles", w.seq.angles);
        w.seq.virtual_source_radius =
            js.value("virtual_source_radius", sim::default_virtual_source_radius(w.probe));
    } else {
        w.seq = sim::SequenceConfig::standard(w.probe);
    }
    if (j.contains("phantom_kinds"))
        w.phantom_kinds = j.at("phantom_kinds").get<std::vector<std::string>>();
    w.channel_noise_std = j.value("channel_noise_std", 0.0);
    if (w.channel_noise_std < 0.0)
        throw std::invalid_argument("config: channel_noise_std must be >= 0");
    w.channel_noise_jitter = j.value("channel_noise_jitter", 0.0);
    if (w.channel_noise_jitter < 0.0 || w.channel_noise_jitter > 1.0)
        throw std::invalid_argument("config: channel_noise_jitter must be in [0, 1]");
    w.seq.validate();
    return w;
}

}  // namespace

std::string world_to_json_string(const WorldConfig& world) {
    return world_to_json(world).dump(2);
}

WorldConfig world_from_json_string(const std::string& text) {
    return world_from_json(json::parse(text));
}

WorldConfig load_world_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    json j;
    is >> j;
    return world_from_json(j);
}

void save_manifest(const Manifest& m, const std::string& path) {
    json entries = json::array();
    for (const auto& e : m.entries)
        entries.push_back({{"id", e.id}, {"x", e.x_path}, {"y", e.y_path},
                           {"kind", e.kind}, {"phantom_seed", e.phantom_seed},
                           {"split", e.split}});
    json j = {{"format_version", m.format_version},
              {"root", m.root},
              {"global_scale", m.global_scale},
              {"world", world_to_json(m.world)},
              {"samples", entries}};
    std::ofstream os(path);
    if (!os) throw std::runtime_error("manifest: cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
}

Manifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("manifest: cannot open " + path);
    json j;
    is >> j;
    Manifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
        throw std::runtime_error("manifest: unsupported format version");
    m.root = j.at("root").get<std::string>();
    m.global_scale = j.at("global_scale").get<double>();
    m.world = world_from_json(j.at("world"));
    for (const auto& je : j.at("samples")) {
        ManifestEntry e;
        e.id = je.at("id").get<std::string>();
        e.x_path = je.at("x").get<std::string>();
        e.y_path = je.at("y").get<std::string>();
        e.kind = je.at("kind").get<std::string>();
        e.phantom_seed = je.at("phantom_seed").get<std::uint64_t>();
        e.split = je.at("split").get<std::string>();
        m.entries.push_back(std::move(e));
    }
    return m;
}

BuiltDataset load_dataset(const Manifest& m) {
    namespace fs = std::filesystem;
    BuiltDataset out;
    out.global_scale = m.global_scale;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        train::Sample s;
        s.x = io::load_tensor_f((fs::path(m.root) / e.x_path).string());
        s.y = io::load_tensor_f((fs::path(m.root) / e.y_path).string());
        out.ds.samples.push_back(std::move(s));
        out.kinds.push_back(e.kind);
        out.seeds.push_back(e.phantom_seed);
        if (e.split == "train")
            out.ds.train_idx.push_back(i);
        else if (e.split == "val")
            out.ds.val_idx.push_back(i);
        else if (e.split == "test")
            out.ds.test_idx.push_back(i);
        else
            throw std::runtime_error("manifest: unknown split '" + e.split + "'");
    }
    return out;
}

}  // namespace dw::data
