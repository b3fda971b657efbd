#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dwrecon/analysis.hpp"
#include "dwrecon/dataset.hpp"
#include "dwrecon/metrics.hpp"
#include "dwrecon/png_io.hpp"
#include "dwrecon/recon.hpp"
#include "dwrecon/tensor_io.hpp"
#include "dwrecon/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dw;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct MeanStd {
    double mean = 0.0, std = 0.0;
    std::size_t count = 0;
};

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd ms;
    for (double v : values)
        if (std::isfinite(v)) {
            ms.mean += v;
            ++ms.count;
        }
    if (ms.count == 0) return ms;
    ms.mean /= static_cast<double>(ms.count);
    for (double v : values)
        if (std::isfinite(v)) ms.std += (v - ms.mean) * (v - ms.mean);
    ms.std = std::sqrt(ms.std / static_cast<double>(ms.count));
    return ms;
}

Tensor to_double(const TensorF& t) { return t.cast<double>(); }

model::CheckpointF load_checkpoint_f(const std::string& path) {
    model::Checkpoint ckpt = model::load(path);
    model::CheckpointF out;
    out.config = ckpt.config;
    out.meta = ckpt.meta;
    out.params = ckpt.params.cast<float>();
    return out;
}

/// Mean of the m input transmits, as used for the 3-DW comparison images.
Tensor compound_input(const Tensor& x) {
    std::vector<std::size_t> all(x.dim(0));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return recon::compound(x, all);
}

/// k contiguous transmits centered on broadside; nested windows make the
/// compounding sweeps monotone in k.
std::vector<std::size_t> central_window(const sim::SequenceConfig& seq, std::size_t k) {
    if (k > seq.angles.size())
        throw std::invalid_argument("compound count exceeds the transmit count");
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = (seq.angles.size() - k) / 2 + i;
    return idx;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << text;
}

std::string split_name(const train::Dataset& ds, std::size_t i) {
    for (auto t : ds.train_idx)
        if (t == i) return "train";
    for (auto v : ds.val_idx)
        if (v == i) return "val";
    return "test";
}

const std::vector<std::size_t>& split_indices(const train::Dataset& ds,
                                              const std::string& name) {
    if (name == "train") return ds.train_idx;
    if (name == "val") return ds.val_idx;
    if (name == "test") return ds.test_idx;
    throw CLI::ValidationError("--split", "unknown split '" + name + "'");
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::size_t count, std::uint64_t seed) {
    data::WorldConfig world = config_path.empty() ? data::WorldConfig::desk_scale()
                                                  : data::load_world_config(config_path);
    fs::create_directories(out_dir);

    const double fractions[3] = {5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0};
    data::BuiltDataset built =
        data::build_dataset(world, count, seed, fractions, [](std::size_t i, std::size_t n) {
            std::cerr << "\rsimulating sample " << i << "/" << n << std::flush;
        });
    std::cerr << "\n";

    data::Manifest manifest;
    manifest.root = out_dir;
    manifest.global_scale = built.global_scale;
    manifest.world = world;
    for (std::size_t i = 0; i < built.ds.samples.size(); ++i) {
        data::ManifestEntry e;
        e.id = "sample_" + std::to_string(i);
        e.x_path = e.id + "_x.dwt";
        e.y_path = e.id + "_y.dwt";
        e.kind = built.kinds[i];
        e.phantom_seed = built.seeds[i];
        e.split = split_name(built.ds, i);
        io::save_tensor(built.ds.samples[i].x, (fs::path(out_dir) / e.x_path).string());
        io::save_tensor(built.ds.samples[i].y, (fs::path(out_dir) / e.y_path).string());
        manifest.entries.push_back(std::move(e));
    }
    data::save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    std::cout << "wrote " << count << " samples + manifest to " << out_dir << "\n";
    return 0;
}

// --- train ------------------------------------------------------------------

int cmd_train(const std::string& manifest_path, const std::string& model_name,
              std::size_t scale, bool desk_kernels, const train::TrainConfig& tc,
              const std::string& out_path, const std::string& log_path,
              const std::string& resume_path) {
    data::Manifest manifest = data::load_manifest(manifest_path);
    data::BuiltDataset built = data::load_dataset(manifest);

    model::ModelConfig config = model::builtin_config(model_name, scale, desk_kernels);
    std::optional<model::CheckpointF> warm;
    if (!resume_path.empty()) warm = load_checkpoint_f(resume_path);

    std::ofstream log(log_path);
    if (!log) throw std::runtime_error("cannot open " + log_path + " for writing");

    train::TrainResult result = train::train(
        config, built.ds, tc, &log,
        [](const train::EpochRecord& r) {
            std::cerr << "epoch " << r.epoch << "  train " << r.train_loss << "  val "
                      << r.val_loss << "  lr " << r.lr << "\n";
        },
        warm ? &*warm : nullptr);

    if (result.diverged) {
        std::cerr << "training diverged\n";
        return 2;
    }
    model::Checkpoint best;
    best.config = result.best.config;
    best.meta = result.best.meta;
    best.meta.seed = tc.seed;
    best.params = result.best.params.cast<double>();
    model::save(best, out_path);
    std::cout << "best val loss " << best.meta.best_val_loss << " (epoch "
              << best.meta.epoch << "), checkpoint: " << out_path << "\n";
    return 0;
}

// --- eval -------------------------------------------------------------------

json metric_json(const MeanStd& ms) {
    return {{"mean", ms.mean}, {"std", ms.std}, {"count", ms.count}};
}

int cmd_eval(const std::string& manifest_path, const std::string& ckpt_path,
             const std::string& out_dir, const std::string& split, std::size_t bins) {
    data::Manifest manifest = data::load_manifest(manifest_path);
    data::BuiltDataset built = data::load_dataset(manifest);
    const auto& idx = split_indices(built.ds, split);
    if (idx.empty()) throw std::runtime_error("eval: split '" + split + "' is empty");
    model::CheckpointF ckpt = load_checkpoint_f(ckpt_path);
    fs::create_directories(out_dir);

    // All full-image metrics are taken on envelope-detected images.
    std::vector<double> psnr_net, ssim_net, mi_net, psnr_cmp, ssim_cmp, mi_cmp;
    for (std::size_t i : idx) {
        const Tensor x = to_double(built.ds.samples[i].x);
        const Tensor y_env = recon::envelope(
            Tensor({x.dim(1), x.dim(2)}, to_double(built.ds.samples[i].y).storage()));
        const Tensor pred_env =
            recon::envelope(to_double(recon::reconstruct(ckpt, built.ds.samples[i].x)));
        const Tensor cmp_env = recon::envelope(compound_input(x));
        psnr_net.push_back(metrics::psnr(pred_env, y_env));
        ssim_net.push_back(metrics::ssim(pred_env, y_env));
        mi_net.push_back(metrics::mutual_information(pred_env, y_env, bins));
        psnr_cmp.push_back(metrics::psnr(cmp_env, y_env));
        ssim_cmp.push_back(metrics::ssim(cmp_env, y_env));
        mi_cmp.push_back(metrics::mutual_information(cmp_env, y_env, bins));
    }

    json report = {
        {"split", split},
        {"samples", idx.size()},
        {"mi_bins", bins},
        {"idnet",
         {{"psnr_db", metric_json(mean_std(psnr_net))},
          {"ssim", metric_json(mean_std(ssim_net))},
          {"mi_nats", metric_json(mean_std(mi_net))}}},
        {"compound_3dw",
         {{"psnr_db", metric_json(mean_std(psnr_cmp))},
          {"ssim", metric_json(mean_std(ssim_cmp))},
          {"mi_nats", metric_json(mean_std(mi_cmp))}}}};

    // Compounding sweep on the first cyst and wires samples of the split.
    std::ptrdiff_t cyst_i = -1, wires_i = -1;
    for (std::size_t i : idx) {
        const std::string& kind = built.kinds[i];
        if (cyst_i < 0 && (kind == "cyst" || kind == "mixed"))
            cyst_i = static_cast<std::ptrdiff_t>(i);
        if (wires_i < 0 && (kind == "wires" || kind == "mixed"))
            wires_i = static_cast<std::ptrdiff_t>(i);
    }

    const sim::PolarGrid& grid = manifest.world.grid;
    const std::size_t n_tx = manifest.world.seq.angles.size();

    if (cyst_i >= 0) try {
        const auto i = static_cast<std::size_t>(cyst_i);
        sim::PhantomSpec phantom = sim::make_phantom(built.kinds[i], built.seeds[i],
                                                     manifest.world.probe, grid);
        data::RawSample raw = data::simulate_sample(manifest.world, built.kinds[i],
                                                    built.seeds[i]);
        auto rois = data::cyst_rois(phantom, grid);

        std::string csv = "dw_count";
        for (std::size_t r = 0; r < rois.size(); ++r)
            csv += ",cnr_db_roi" + std::to_string(r) + ",cr_db_roi" + std::to_string(r);
        csv += "\n";
        for (std::size_t k = 1; k <= n_tx; k += 2) {
            Tensor env = recon::envelope(
                recon::compound(raw.full_stack, central_window(manifest.world.seq, k)));
            csv += std::to_string(k);
            for (const auto& pair : rois) {
                const metrics::CrCnr c = metrics::cr_cnr(env, pair.target, pair.background);
                csv += "," + std::to_string(c.cnr_db) + "," + std::to_string(c.cr_db);
            }
            csv += "\n";
        }
        TensorF xf = raw.x.cast<float>();
        for (auto& v : xf.storage()) v *= static_cast<float>(built.global_scale);
        Tensor env_net = recon::envelope(to_double(recon::reconstruct(ckpt, xf)));
        csv += "idnet";
        for (const auto& pair : rois) {
            const metrics::CrCnr c = metrics::cr_cnr(env_net, pair.target, pair.background);
            csv += "," + std::to_string(c.cnr_db) + "," + std::to_string(c.cr_db);
        }
        csv += "\n";
        write_text((fs::path(out_dir) / "cnr_sweep.csv").string(), csv);
        report["cnr_sweep_csv"] = "cnr_sweep.csv";
    } catch (const std::exception& e) {
        std::cerr << "warning: skipping contrast sweep: " << e.what() << "\n";
    }

    if (wires_i >= 0) try {
        const auto i = static_cast<std::size_t>(wires_i);
        sim::PhantomSpec phantom = sim::make_phantom(built.kinds[i], built.seeds[i],
                                                     manifest.world.probe, grid);
        data::RawSample raw = data::simulate_sample(manifest.world, built.kinds[i],
                                                    built.seeds[i]);

        std::string csv = "dw_count";
        for (std::size_t t = 0; t < phantom.wire_targets.size(); ++t)
            csv += ",fwhm_mm_wire" + std::to_string(t);
        csv += "\n";
        auto fwhm_row = [&](const Tensor& env, const std::string& label) {
            std::string row = label;
            for (const auto& wt : phantom.wire_targets) {
                double v = std::numeric_limits<double>::quiet_NaN();
                try {
                    v = metrics::lateral_resolution_mm(env, grid, std::hypot(wt.x, wt.z),
                                                       std::atan2(wt.x, wt.z));
                } catch (const std::exception&) {
                }
                row += "," + std::to_string(v);
            }
            return row + "\n";
        };
        for (std::size_t k = 1; k <= n_tx; k += 2) {
            Tensor env = recon::envelope(
                recon::compound(raw.full_stack, central_window(manifest.world.seq, k)));
            csv += fwhm_row(env, std::to_string(k));
        }
        TensorF xf = raw.x.cast<float>();
        for (auto& v : xf.storage()) v *= static_cast<float>(built.global_scale);
        csv += fwhm_row(recon::envelope(to_double(recon::reconstruct(ckpt, xf))), "idnet");
        write_text((fs::path(out_dir) / "fwhm_sweep.csv").string(), csv);
        report["fwhm_sweep_csv"] = "fwhm_sweep.csv";
    } catch (const std::exception& e) {
        std::cerr << "warning: skipping resolution sweep: " << e.what() << "\n";
    }

    write_text((fs::path(out_dir) / "report.json").string(), report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

// --- reconstruct ------------------------------------------------------------

Tensor render_panel(const Tensor& rf, const sim::PolarGrid& grid, double dynamic_range,
                    std::size_t out_h, std::size_t out_w) {
    return recon::scan_convert(recon::log_compress(recon::envelope(rf), dynamic_range),
                               grid, out_h, out_w);
}

int cmd_reconstruct(const std::string& ckpt_path, const std::string& x_path,
                    const std::string& manifest_path, std::ptrdiff_t index,
                    std::size_t compound_k, const std::string& out_png,
                    const std::string& out_rf, double dynamic_range) {
    model::CheckpointF ckpt = load_checkpoint_f(ckpt_path);

    TensorF x;
    std::optional<Tensor> full_stack;
    sim::PolarGrid grid = sim::PolarGrid::desk_scale();
    sim::SequenceConfig seq;
    if (!x_path.empty()) {
        x = io::load_tensor_f(x_path);
    } else {
        data::Manifest manifest = data::load_manifest(manifest_path);
        if (index < 0 || index >= static_cast<std::ptrdiff_t>(manifest.entries.size()))
            throw CLI::ValidationError("--index", "sample index out of range");
        const auto& e = manifest.entries[static_cast<std::size_t>(index)];
        data::RawSample raw = data::simulate_sample(manifest.world, e.kind, e.phantom_seed);
        grid = manifest.world.grid;
        seq = manifest.world.seq;
        for (auto& v : raw.x.storage()) v *= manifest.global_scale;
        for (auto& v : raw.full_stack.storage()) v *= manifest.global_scale;
        x = raw.x.cast<float>();
        full_stack = std::move(raw.full_stack);
    }
    if (x.rank() != 3 || x.dim(0) != ckpt.config.input_channels)
        throw std::invalid_argument("reconstruct: input must be [" +
                                 std::to_string(ckpt.config.input_channels) + ",h,w]");
    if (grid.depth_samples != x.dim(1) || grid.line_count != x.dim(2)) {
        grid.depth_samples = x.dim(1);
        grid.line_count = x.dim(2);
    }

    const Tensor pred = to_double(recon::reconstruct(ckpt, x));
    if (!out_rf.empty()) io::save_tensor(pred, out_rf);

    const std::size_t ph = 256;
    const std::size_t pw = static_cast<std::size_t>(
        std::ceil(2.0 * std::sin(grid.sector_rad / 2.0) * static_cast<double>(ph)));
    std::vector<Tensor> panels;
    panels.push_back(render_panel(compound_input(to_double(x)), grid, dynamic_range, ph, pw));
    panels.push_back(render_panel(pred, grid, dynamic_range, ph, pw));
    if (full_stack) {
        const std::size_t k = std::min(compound_k, full_stack->dim(0));
        panels.push_back(render_panel(recon::compound(*full_stack, central_window(seq, k)),
                                      grid, dynamic_range, ph, pw));
    }

    const std::size_t gap = 8;
    const std::size_t total_w = panels.size() * pw + (panels.size() - 1) * gap;
    std::vector<std::uint8_t> pixels(ph * total_w, 0);
    for (std::size_t p = 0; p < panels.size(); ++p)
        for (std::size_t i = 0; i < ph; ++i)
            for (std::size_t j = 0; j < pw; ++j) {
                const double v = (panels[p].at(i, j) + dynamic_range) / dynamic_range;
                pixels[i * total_w + p * (pw + gap) + j] =
                    static_cast<std::uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
            }
    io::write_png_gray(out_png, total_w, ph, pixels);
    std::cout << "wrote " << panels.size() << "-panel figure: " << out_png << "\n";
    return 0;
}

// --- analyze ----------------------------------------------------------------

int cmd_analyze(const std::string& ckpt_path, const std::string& x_path,
                const std::string& manifest_path, std::ptrdiff_t index,
                const std::string& out_dir, const std::string& attribution) {
    model::CheckpointF ckpt = load_checkpoint_f(ckpt_path);
    const analysis::Attribution mode = attribution == "weight"
                                           ? analysis::Attribution::weight_magnitude
                                           : analysis::Attribution::weighted_activation;
    TensorF x;
    if (!x_path.empty()) {
        x = io::load_tensor_f(x_path);
    } else {
        data::Manifest manifest = data::load_manifest(manifest_path);
        if (index < 0 || index >= static_cast<std::ptrdiff_t>(manifest.entries.size()))
            throw CLI::ValidationError("--index", "sample index out of range");
        const auto& e = manifest.entries[static_cast<std::size_t>(index)];
        x = io::load_tensor_f((fs::path(manifest.root) / e.x_path).string());
    }

    fs::create_directories(out_dir);
    analysis::ActivationMap map = analysis::activation_map(ckpt, x, mode);
    io::write_png_indexed((fs::path(out_dir) / "activation_map.png").string(), map.width,
                          map.height, map.labels, map.num_paths);

    json legend = {{"attribution", attribution}, {"paths", map.legend}};
    write_text((fs::path(out_dir) / "legend.json").string(), legend.dump(2) + "\n");

    analysis::DepthContribution dc = analysis::depth_contribution(map);
    std::string csv = "depth_row";
    for (const auto& name : map.legend) csv += ",percent_" + name;
    csv += "\n";
    for (std::size_t i = 0; i < dc.percent.size(); ++i) {
        csv += std::to_string(i);
        for (double v : dc.percent[i]) csv += "," + std::to_string(v);
        csv += "\n";
    }
    write_text((fs::path(out_dir) / "depth_contribution.csv").string(), csv);
    std::cout << "wrote activation map + depth curves to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diverging-wave ultrasound reconstruction workbench"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "synthesize a training dataset");
    std::string sim_config, sim_out;
    std::size_t sim_count = 7;
    std::uint64_t sim_seed = 0;
    sim_cmd->add_option("--config", sim_config, "world config JSON ({} = desk defaults)");
    sim_cmd->add_option("--out", sim_out, "output directory")->required();
    sim_cmd->add_option("--count", sim_count, "number of samples")
        ->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim_seed, "base RNG seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a reconstruction model");
    std::string tr_manifest, tr_model = "idnet4", tr_out = "model.idn", tr_log, tr_resume;
    std::size_t tr_scale = 1;
    bool tr_desk = false;
    train::TrainConfig tc;
    train_cmd->add_option("--manifest", tr_manifest, "dataset manifest")->required();
    train_cmd->add_option("--model", tr_model, "idnet4|idnet2|idnet8|idnet_relu|fixed_kernel_baseline");
    train_cmd->add_option("--scale", tr_scale, "divide kernel counts by this power of two");
    train_cmd->add_flag("--desk-kernels", tr_desk, "use the reduced kernel-height table");
    train_cmd->add_option("--out", tr_out, "output checkpoint path");
    train_cmd->add_option("--log", tr_log, "JSONL epoch log (default: <out>.jsonl)");
    train_cmd->add_option("--resume", tr_resume, "continue from an existing checkpoint");
    train_cmd->add_option("--epochs", tc.max_epochs, "maximum epochs");
    train_cmd->add_option("--batch", tc.batch_size, "mini-batch size");
    train_cmd->add_option("--lr", tc.initial_lr, "initial learning rate");
    train_cmd->add_option("--seed", tc.seed, "init + shuffle seed");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "metric report + compounding sweeps");
    std::string ev_manifest, ev_ckpt, ev_out = "eval", ev_split = "test";
    std::size_t ev_bins = 64;
    eval_cmd->add_option("--manifest", ev_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
    eval_cmd->add_option("--out", ev_out, "report directory");
    eval_cmd->add_option("--split", ev_split, "train|val|test");
    eval_cmd->add_option("--bins", ev_bins, "mutual-information histogram bins")
        ->check(CLI::Range(std::size_t{2}, std::size_t{4096}));

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "single-sample inference + B-mode figure");
    std::string rc_ckpt, rc_x, rc_manifest, rc_png = "recon.png", rc_rf;
    std::ptrdiff_t rc_index = -1;
    std::size_t rc_compound = 31;
    double rc_dr = 50.0;
    rec_cmd->add_option("--checkpoint", rc_ckpt, "trained checkpoint")->required();
    rec_cmd->add_option("--x", rc_x, "input stack tensor [m,h,w]");
    rec_cmd->add_option("--manifest", rc_manifest, "manifest for --index mode");
    rec_cmd->add_option("--index", rc_index, "re-simulate this manifest sample");
    rec_cmd->add_option("--compound", rc_compound, "DW count for the comparison panel");
    rec_cmd->add_option("--out-png", rc_png, "output figure");
    rec_cmd->add_option("--out-rf", rc_rf, "write the network RF output (DWT1)");
    rec_cmd->add_option("--dynamic-range", rc_dr, "display dynamic range in dB")
        ->check(CLI::PositiveNumber);

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "inception activation map + depth curves");
    std::string an_ckpt, an_x, an_manifest, an_out = "analysis", an_mode = "activation";
    std::ptrdiff_t an_index = -1;
    an_cmd->add_option("--checkpoint", an_ckpt, "trained checkpoint")->required();
    an_cmd->add_option("--x", an_x, "input stack tensor [m,h,w]");
    an_cmd->add_option("--manifest", an_manifest, "manifest for --index mode");
    an_cmd->add_option("--index", an_index, "analyze this manifest sample");
    an_cmd->add_option("--out", an_out, "output directory");
    an_cmd->add_option("--attribution", an_mode, "weight|activation")
        ->check(CLI::IsMember({"weight", "activation"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_out, sim_count, sim_seed);
        if (train_cmd->parsed()) {
            if (tr_log.empty()) tr_log = tr_out + ".jsonl";
            return cmd_train(tr_manifest, tr_model, tr_scale, tr_desk, tc, tr_out, tr_log,
                             tr_resume);
        }
        if (eval_cmd->parsed())
            return cmd_eval(ev_manifest, ev_ckpt, ev_out, ev_split, ev_bins);
        if (rec_cmd->parsed()) {
            if (rc_x.empty() == rc_manifest.empty())
                throw CLI::ValidationError("reconstruct",
                                           "provide exactly one of --x or --manifest/--index");
            return cmd_reconstruct(rc_ckpt, rc_x, rc_manifest, rc_index, rc_compound, rc_png,
                                   rc_rf, rc_dr);
        }
        if (an_cmd->parsed()) {
            if (an_x.empty() == an_manifest.empty())
                throw CLI::ValidationError("analyze",
                                           "provide exactly one of --x or --manifest/--index");
            return cmd_analyze(an_ckpt, an_x, an_manifest, an_index, an_out, an_mode);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
