#include "dwrecon/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"

namespace dw::model {

using nlohmann::json;

void ModelConfig::validate() const {
    if (layers.empty()) throw ConfigError("model: no layers");
    std::size_t ch = input_channels;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerSpec& spec = layers[l];
        if (spec.paths.empty()) throw ConfigError("model: layer without paths");
        if (spec.kind == LayerSpec::Kind::conv && spec.paths.size() != 1)
            throw ConfigError("model: plain conv layer must have exactly one path");
        for (const auto& p : spec.paths) {
            if (p.kernel_h % 2 == 0 || p.kernel_w % 2 == 0)
                throw ConfigError("model: kernel extents must be odd");
            if (p.num_kernels < 1) throw ConfigError("model: empty path");
        }
        if (spec.activation == Activation::maxout) {
            if (spec.maxout_k < 1 || spec.pre_activation_channels() % spec.maxout_k != 0)
                throw ConfigError("model: layer " + std::to_string(l) +
                                  " kernel count not divisible by maxout k");
        }
        ch = spec.post_activation_channels();
    }
    if (ch != 1) throw ConfigError("model: final post-activation channel count must be 1");
}

std::vector<std::size_t> ModelConfig::channel_trace() const {
    std::vector<std::size_t> trace;
    for (const auto& l : layers) trace.push_back(l.post_activation_channels());
    return trace;
}

namespace {

LayerSpec conv_layer(std::size_t kh, std::size_t kw, std::size_t kernels, Activation act,
                     std::size_t k = 4) {
    LayerSpec s;
    s.kind = LayerSpec::Kind::conv;
    s.paths = {ConvSpec{kh, kw, kernels}};
    s.activation = act;
    s.maxout_k = k;
    return s;
}

std::size_t scaled_kernels(std::size_t n, std::size_t scale, std::size_t floor) {
    const std::size_t v = n / scale;
    return v < floor ? floor : v;
}

}  // namespace

ModelConfig builtin_config(const std::string& name, std::size_t scale, bool desk_kernels) {
    if (scale < 1 || (scale & (scale - 1)) != 0)
        throw ConfigError("builtin_config: scale must be a power of two");

    // Kernel geometry: full-scale heights come from the architecture tables;
    // the desk table shrinks heights to fit 128-row images.
    struct K2 { std::size_t h, w; };
    const K2 conv_k[3] = {desk_kernels ? K2{9, 3} : K2{9, 3},
                          desk_kernels ? K2{5, 5} : K2{17, 5},
                          desk_kernels ? K2{9, 9} : K2{33, 9}};
    auto inc_k = [&](std::size_t full_h, std::size_t w) {
        return desk_kernels ? K2{w, w} : K2{full_h, w};
    };

    const Activation act = (name == "idnet_relu") ? Activation::relu : Activation::maxout;
    // IDNet-ReLU keeps the post-activation channel widths of the maxout
    // models, so its kernel counts are divided by the maxout piece count.
    const std::size_t act_div = (act == Activation::relu) ? 4 : 1;
    const std::size_t floor_k = (act == Activation::relu) ? 1 : 4;
    auto kernels = [&](std::size_t full) {
        return scaled_kernels(full / act_div, scale, floor_k);
    };

    ModelConfig cfg;
    cfg.name = name + (scale > 1 ? "_s" + std::to_string(scale) : "") +
               (desk_kernels ? "_desk" : "");
    cfg.input_channels = 3;

    cfg.layers.push_back(conv_layer(conv_k[0].h, conv_k[0].w, kernels(256), act));
    cfg.layers.push_back(conv_layer(conv_k[1].h, conv_k[1].w, kernels(128), act));
    cfg.layers.push_back(conv_layer(conv_k[2].h, conv_k[2].w, kernels(64), act));

    LayerSpec inception;
    inception.kind = LayerSpec::Kind::inception;
    inception.activation = act;
    inception.maxout_k = 4;
    auto inc_path = [&](std::size_t full_h, std::size_t w, std::size_t full_kernels) {
        const K2 k = inc_k(full_h, w);
        const std::size_t nk =
            scaled_kernels(full_kernels / act_div, scale, floor_k);
        inception.paths.push_back(ConvSpec{k.h, k.w, nk});
    };

    if (name == "idnet4" || name == "idnet_relu") {
        inc_path(41, 11, 8);
        inc_path(49, 13, 8);
        inc_path(57, 15, 8);
        inc_path(65, 17, 8);
    } else if (name == "idnet2") {
        inc_path(49, 13, 16);
        inc_path(65, 17, 16);
    } else if (name == "idnet8") {
        inc_path(37, 11, 4);
        inc_path(41, 11, 4);
        inc_path(45, 13, 4);
        inc_path(49, 13, 4);
        inc_path(53, 15, 4);
        inc_path(57, 15, 4);
        inc_path(61, 17, 4);
        inc_path(65, 17, 4);
    } else if (name == "fixed_kernel_baseline") {
        const K2 k = inc_k(65, 17);
        inception.kind = LayerSpec::Kind::conv;
        inception.paths.push_back(ConvSpec{k.h, k.w, scaled_kernels(32 / act_div, scale, floor_k)});
    } else {
        throw ConfigError("builtin_config: unknown model '" + name + "'");
    }
    cfg.layers.push_back(inception);

    cfg.layers.push_back(conv_layer(1, 1, act == Activation::relu ? 1 : 4, act));

    cfg.validate();
    return cfg;
}

std::size_t param_count(const ModelConfig& config) {
    config.validate();
    std::size_t total = 0;
    std::size_t in_ch = config.input_channels;
    for (const auto& layer : config.layers) {
        for (const auto& p : layer.paths)
            total += p.num_kernels * in_ch * p.kernel_h * p.kernel_w + p.num_kernels;
        in_ch = layer.post_activation_channels();
    }
    return total;
}

template <typename T>
CheckpointT<T> build(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    CheckpointT<T> ckpt;
    ckpt.config = config;
    ckpt.meta.seed = seed;

    std::mt19937_64 rng(seed);
    std::size_t in_ch = config.input_channels;
    for (const auto& layer : config.layers) {
        LayerParamsT<T> lp;
        for (const auto& p : layer.paths) {
            const double fan_in = static_cast<double>(in_ch * p.kernel_h * p.kernel_w);
            const double fan_out = static_cast<double>(p.num_kernels * p.kernel_h * p.kernel_w);
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-bound, bound);
            TensorT<T> w({p.num_kernels, in_ch, p.kernel_h, p.kernel_w});
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(dist(rng));
            lp.weights.push_back(std::move(w));
            lp.biases.emplace_back(p.num_kernels, T{0});
        }
        ckpt.params.layers.push_back(std::move(lp));
        in_ch = layer.post_activation_channels();
    }
    return ckpt;
}

template <typename T>
nn::InceptionBlockT<T> make_block(const LayerSpec& spec, std::size_t in_channels,
                                  const LayerParamsT<T>& params) {
    nn::InceptionBlockT<T> block;
    for (std::size_t p = 0; p < spec.paths.size(); ++p) {
        const ConvSpec& cs = spec.paths[p];
        auto conv = nn::ConvLayerT<T>::same_padded(in_channels, cs.num_kernels,
                                                   cs.kernel_h, cs.kernel_w);
        conv.weights = params.weights.at(p);
        conv.biases = params.biases.at(p);
        block.paths.push_back(std::move(conv));
    }
    return block;
}

template <typename T>
ForwardCacheT<T> forward_cached(const CheckpointT<T>& ckpt, const TensorT<T>& input) {
    if (input.rank() != 4 || input.dim(1) != ckpt.config.input_channels)
        throw std::invalid_argument("model forward: input must be [B," +
                                    std::to_string(ckpt.config.input_channels) + ",H,W]");
    ForwardCacheT<T> cache;
    cache.input = input;
    TensorT<T> x = input;
    std::size_t in_ch = ckpt.config.input_channels;
    for (std::size_t l = 0; l < ckpt.config.layers.size(); ++l) {
        const LayerSpec& spec = ckpt.config.layers[l];
        auto block = make_block(spec, in_ch, ckpt.params.layers[l]);
        TensorT<T> pre = nn::inception_forward(x, block);
        if (spec.activation == Activation::maxout) {
            auto mo = nn::maxout_forward(pre, spec.maxout_k);
            x = std::move(mo.output);
            cache.argmax.push_back(std::move(mo.argmax));
        } else {
            x = nn::relu_forward(pre);
            cache.argmax.emplace_back();
        }
        cache.pre_activation.push_back(std::move(pre));
        cache.post_activation.push_back(x);
        in_ch = spec.post_activation_channels();
    }
    return cache;
}

template <typename T>
TensorT<T> forward(const CheckpointT<T>& ckpt, const TensorT<T>& input) {
    if (input.rank() != 4 || input.dim(1) != ckpt.config.input_channels)
        throw std::invalid_argument("model forward: input must be [B," +
                                    std::to_string(ckpt.config.input_channels) + ",H,W]");
    TensorT<T> x = input;
    std::size_t in_ch = ckpt.config.input_channels;
    for (std::size_t l = 0; l < ckpt.config.layers.size(); ++l) {
        const LayerSpec& spec = ckpt.config.layers[l];
        auto block = make_block(spec, in_ch, ckpt.params.layers[l]);
        TensorT<T> pre = nn::inception_forward(x, block);
        if (spec.activation == Activation::maxout)
            x = nn::maxout_forward(pre, spec.maxout_k).output;
        else
            x = nn::relu_forward(pre);
        in_ch = spec.post_activation_channels();
    }
    return x;
}

template <typename T>
ModelParamsT<T> backward(const CheckpointT<T>& ckpt, const ForwardCacheT<T>& cache,
                         const TensorT<T>& grad_output) {
    const std::size_t L = ckpt.config.layers.size();
    ModelParamsT<T> grads;
    grads.layers.resize(L);

    TensorT<T> g = grad_output;
    std::vector<std::size_t> in_ch(L);
    std::size_t ch = ckpt.config.input_channels;
    for (std::size_t l = 0; l < L; ++l) {
        in_ch[l] = ch;
        ch = ckpt.config.layers[l].post_activation_channels();
    }

    for (std::size_t li = L; li-- > 0;) {
        const LayerSpec& spec = ckpt.config.layers[li];
        if (spec.activation == Activation::maxout)
            g = nn::maxout_backward(g, cache.argmax[li], spec.maxout_k);
        else
            g = nn::relu_backward(g, cache.pre_activation[li]);

        const TensorT<T>& layer_input = (li == 0) ? cache.input : cache.post_activation[li - 1];
        auto block = make_block(spec, in_ch[li], ckpt.params.layers[li]);
        auto bg = nn::inception_backward(g, layer_input, block);
        grads.layers[li].weights = std::move(bg.weights);
        grads.layers[li].biases = std::move(bg.biases);
        g = std::move(bg.input);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Config JSON and checkpoint serialization.

json config_to_json(const ModelConfig& cfg) {
    json layers = json::array();
    for (const auto& l : cfg.layers) {
        json paths = json::array();
        for (const auto& p : l.paths)
            paths.push_back({{"kh", p.kernel_h}, {"kw", p.kernel_w}, {"kernels", p.num_kernels}});
        layers.push_back({{"kind", l.kind == LayerSpec::Kind::conv ? "conv" : "inception"},
                          {"paths", paths},
                          {"activation", l.activation == Activation::maxout ? "maxout" : "relu"},
                          {"maxout_k", l.maxout_k}});
    }
    return {{"name", cfg.name}, {"input_channels", cfg.input_channels}, {"layers", layers}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.name = j.at("name").get<std::string>();
    cfg.input_channels = j.at("input_channels").get<std::size_t>();
    for (const auto& jl : j.at("layers")) {
        LayerSpec l;
        l.kind = jl.at("kind").get<std::string>() == "conv" ? LayerSpec::Kind::conv
                                                            : LayerSpec::Kind::inception;
        for (const auto& jp : jl.at("paths"))
            l.paths.push_back(ConvSpec{jp.at("kh").get<std::size_t>(),
                                       jp.at("kw").get<std::size_t>(),
                                       jp.at("kernels").get<std::size_t>()});
        l.activation = jl.at("activation").get<std::string>() == "maxout" ? Activation::maxout
                                                                          : Activation::relu;
        l.maxout_k = jl.at("maxout_k").get<std::size_t>();
        cfg.layers.push_back(std::move(l));
    }
    cfg.validate();
    return cfg;
}

namespace {

constexpr char kMagic[4] = {'I', 'D', 'N', '1'};
constexpr std::uint8_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload I/O assumes a little-endian host");

}  // namespace

void save(const Checkpoint& ckpt, const std::string& path) {
    json tensors = json::array();
    std::size_t offset = 0;
    for (std::size_t l = 0; l < ckpt.params.layers.size(); ++l) {
        const auto& lp = ckpt.params.layers[l];
        for (std::size_t p = 0; p < lp.weights.size(); ++p) {
            tensors.push_back({{"layer", l}, {"path", p}, {"kind", "weights"},
                               {"dims", lp.weights[p].dims()}, {"offset", offset}});
            offset += lp.weights[p].size() * sizeof(double);
            tensors.push_back({{"layer", l}, {"path", p}, {"kind", "biases"},
                               {"dims", json::array({lp.biases[p].size()})}, {"offset", offset}});
            offset += lp.biases[p].size() * sizeof(double);
        }
    }
    json header = {{"config", config_to_json(ckpt.config)},
                   {"meta", {{"epoch", ckpt.meta.epoch},
                             {"learning_rate", ckpt.meta.learning_rate},
                             {"best_val_loss", ckpt.meta.best_val_loss},
                             {"seed", ckpt.meta.seed}}},
                   {"tensors", tensors}};
    const std::string hs = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    write_u32(os, static_cast<std::uint32_t>(hs.size()));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& lp : ckpt.params.layers) {
        for (std::size_t p = 0; p < lp.weights.size(); ++p) {
            os.write(reinterpret_cast<const char*>(lp.weights[p].data()),
                     static_cast<std::streamsize>(lp.weights[p].size() * sizeof(double)));
            os.write(reinterpret_cast<const char*>(lp.biases[p].data()),
                     static_cast<std::streamsize>(lp.biases[p].size() * sizeof(double)));
        }
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const int version = is.get();
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t hlen = read_u32(is);
    std::string hs(hlen, '\0');
    is.read(hs.data(), hlen);
    if (!is) throw std::runtime_error("checkpoint: truncated header in " + path);

    json header = json::parse(hs);
    Checkpoint ckpt;
    ckpt.config = config_from_json(header.at("config"));
    const json& meta = header.at("meta");
    ckpt.meta.epoch = meta.at("epoch").get<std::int64_t>();
    ckpt.meta.learning_rate = meta.at("learning_rate").get<double>();
    ckpt.meta.best_val_loss = meta.at("best_val_loss").get<double>();
    ckpt.meta.seed = meta.at("seed").get<std::uint64_t>();

    // Expected geometry from the config; the header dims must agree.
    std::size_t in_ch = ckpt.config.input_channels;
    ckpt.params.layers.resize(ckpt.config.layers.size());
    std::size_t ti = 0;
    const json& tensors = header.at("tensors");
    for (std::size_t l = 0; l < ckpt.config.layers.size(); ++l) {
        const LayerSpec& spec = ckpt.config.layers[l];
        for (const auto& p : spec.paths) {
            const std::vector<std::size_t> wdims = {p.num_kernels, in_ch, p.kernel_h, p.kernel_w};
            if (ti + 2 > tensors.size())
                throw std::runtime_error("checkpoint: tensor table too short");
            const json& tw = tensors.at(ti++);
            const json& tb = tensors.at(ti++);
            if (tw.at("dims").get<std::vector<std::size_t>>() != wdims ||
                tb.at("dims").get<std::vector<std::size_t>>() !=
                    std::vector<std::size_t>{p.num_kernels})
                throw std::runtime_error("checkpoint: tensor dims do not match config");
            TensorT<double> w(wdims);
            is.read(reinterpret_cast<char*>(w.data()),
                    static_cast<std::streamsize>(w.size() * sizeof(double)));
            std::vector<double> b(p.num_kernels);
            is.read(reinterpret_cast<char*>(b.data()),
                    static_cast<std::streamsize>(b.size() * sizeof(double)));
            if (!is) throw std::runtime_error("checkpoint: truncated payload in " + path);
            ckpt.params.layers[l].weights.push_back(std::move(w));
            ckpt.params.layers[l].biases.push_back(std::move(b));
        }
        in_ch = spec.post_activation_channels();
    }
    return ckpt;
}

#define DW_INSTANTIATE(T)                                                                  \
    template CheckpointT<T> build<T>(const ModelConfig&, std::uint64_t);                   \
    template nn::InceptionBlockT<T> make_block<T>(const LayerSpec&, std::size_t,           \
                                                  const LayerParamsT<T>&);                 \
    template ForwardCacheT<T> forward_cached<T>(const CheckpointT<T>&, const TensorT<T>&); \
    template TensorT<T> forward<T>(const CheckpointT<T>&, const TensorT<T>&);              \
    template ModelParamsT<T> backward<T>(const CheckpointT<T>&, const ForwardCacheT<T>&,   \
                                         const TensorT<T>&);

DW_INSTANTIATE(float)
DW_INSTANTIATE(double)
#undef DW_INSTANTIATE

}  // namespace dw::model
