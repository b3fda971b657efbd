#include "dwrecon/nncore.hpp"

#include <algorithm>
#include <cmath>

#include "dwrecon/parallel.hpp"

namespace dw::nn {

template <typename T>
ConvLayerT<T> ConvLayerT<T>::same_padded(std::size_t in_channels, std::size_t num_kernels,
                                         std::size_t kernel_h, std::size_t kernel_w) {
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0)
        throw ConfigError("conv: kernel extents must be odd for same padding");
    ConvLayerT<T> layer;
    layer.in_channels = in_channels;
    layer.num_kernels = num_kernels;
    layer.kernel_h = kernel_h;
    layer.kernel_w = kernel_w;
    layer.pad_h = (kernel_h - 1) / 2;
    layer.pad_w = (kernel_w - 1) / 2;
    layer.weights = TensorT<T>({num_kernels, in_channels, kernel_h, kernel_w});
    layer.biases.assign(num_kernels, T{0});
    return layer;
}

namespace {

template <typename T>
void check_conv_input(const TensorT<T>& input, const ConvLayerT<T>& layer) {
    if (input.rank() != 4)
        throw std::invalid_argument("conv: input must be 4-D [B,C,H,W]");
    if (input.dim(1) != layer.in_channels)
        throw ConfigError("conv: input has " + std::to_string(input.dim(1)) +
                          " channels, layer expects " + std::to_string(layer.in_channels));
    if (input.dim(2) + 2 * layer.pad_h < layer.kernel_h ||
        input.dim(3) + 2 * layer.pad_w < layer.kernel_w)
        throw ConfigError("conv: kernel larger than padded input");
    if (layer.weights.size() != layer.weight_count() || layer.biases.size() != layer.num_kernels)
        throw ConfigError("conv: weight/bias storage does not match geometry");
}

}  // namespace

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvLayerT<T>& layer) {
    check_conv_input(input, layer);
    const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::size_t K = layer.num_kernels, kh = layer.kernel_h, kw = layer.kernel_w;
    const std::size_t ph = layer.pad_h, pw = layer.pad_w;
    const std::size_t Ho = H + 2 * ph - kh + 1;
    const std::size_t Wo = W + 2 * pw - kw + 1;

    TensorT<T> out({B, K, Ho, Wo});
    const T* in = input.data();
    const T* wts = layer.weights.data();
    T* o = out.data();

    parallel_for(B * K, [&](std::size_t bk) {
        const std::size_t b = bk / K, k = bk % K;
        T* plane = o + (b * K + k) * Ho * Wo;
        std::fill(plane, plane + Ho * Wo, layer.biases[k]);
        for (std::size_t c = 0; c < C; ++c) {
            const T* in_plane = in + (b * C + c) * H * W;
            const T* wk = wts + (k * C + c) * kh * kw;
            for (std::size_t u = 0; u < kh; ++u) {
                // output row i reads input row i + u - ph
                const std::ptrdiff_t du = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(ph);
                const std::size_t i_lo = du < 0 ? static_cast<std::size_t>(-du) : 0;
                const std::ptrdiff_t i_hi_s = static_cast<std::ptrdiff_t>(H) - 1 - du;
                const std::size_t i_hi = std::min<std::size_t>(Ho - 1, i_hi_s < 0 ? 0 : static_cast<std::size_t>(i_hi_s));
                if (i_hi_s < 0) continue;
                for (std::size_t v = 0; v < kw; ++v) {
                    const T wv = wk[u * kw + v];
                    if (wv == T{0}) continue;
                    const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - static_cast<std::ptrdiff_t>(pw);
                    const std::size_t j_lo = dv < 0 ? static_cast<std::size_t>(-dv) : 0;
                    const std::ptrdiff_t j_hi_s = static_cast<std::ptrdiff_t>(W) - 1 - dv;
                    if (j_hi_s < 0) continue;
                    const std::size_t j_hi = std::min<std::size_t>(Wo - 1, static_cast<std::size_t>(j_hi_s));
                    for (std::size_t i = i_lo; i <= i_hi; ++i) {
                        const T* in_row = in_plane + (static_cast<std::ptrdiff_t>(i) + du) * W + dv;
                        T* out_row = plane + i * Wo;
                        for (std::size_t j = j_lo; j <= j_hi; ++j)
                            out_row[j] += wv * in_row[j];
                    }
                }
            }
        }
    });
    return out;
}

template <typename T>
ConvGradsT<T> conv2d_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                              const ConvLayerT<T>& layer) {
    check_conv_input(input, layer);
    const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::size_t K = layer.num_kernels, kh = layer.kernel_h, kw = layer.kernel_w;
    const std::size_t ph = layer.pad_h, pw = layer.pad_w;
    const std::size_t Ho = H + 2 * ph - kh + 1;
    const std::size_t Wo = W + 2 * pw - kw + 1;
    if (grad_out.rank() != 4 || grad_out.dim(0) != B || grad_out.dim(1) != K ||
        grad_out.dim(2) != Ho || grad_out.dim(3) != Wo)
        throw std::invalid_argument("conv backward: grad_out dims do not match forward output");

    ConvGradsT<T> grads;
    grads.input = TensorT<T>({B, C, H, W});
    grads.weights = TensorT<T>({K, C, kh, kw});
    grads.biases.assign(K, T{0});

    const T* go = grad_out.data();
    const T* in = input.data();
    const T* wts = layer.weights.data();

    // grad_input: transposed correlation of grad_out with the kernels.
    T* gi = grads.input.data();
    parallel_for(B * C, [&](std::size_t bc) {
        const std::size_t b = bc / C, c = bc % C;
        T* gi_plane = gi + (b * C + c) * H * W;
        for (std::size_t k = 0; k < K; ++k) {
            const T* go_plane = go + (b * K + k) * Ho * Wo;
            const T* wk = wts + (k * C + c) * kh * kw;
            for (std::size_t u = 0; u < kh; ++u) {
                // input row y was read by output row i = y - u + ph
                const std::ptrdiff_t du = static_cast<std::ptrdiff_t>(ph) - static_cast<std::ptrdiff_t>(u);
                const std::size_t y_lo = du < 0 ? static_cast<std::size_t>(-du) : 0;
                const std::ptrdiff_t y_hi_s = static_cast<std::ptrdiff_t>(Ho) - 1 - du;
                if (y_hi_s < 0) continue;
                const std::size_t y_hi = std::min<std::size_t>(H - 1, static_cast<std::size_t>(y_hi_s));
                for (std::size_t v = 0; v < kw; ++v) {
                    const T wv = wk[u * kw + v];
                    if (wv == T{0}) continue;
                    const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(pw) - static_cast<std::ptrdiff_t>(v);
                    const std::size_t x_lo = dv < 0 ? static_cast<std::size_t>(-dv) : 0;
                    const std::ptrdiff_t x_hi_s = static_cast<std::ptrdiff_t>(Wo) - 1 - dv;
                    if (x_hi_s < 0) continue;
                    const std::size_t x_hi = std::min<std::size_t>(W - 1, static_cast<std::size_t>(x_hi_s));
                    for (std::size_t y = y_lo; y <= y_hi; ++y) {
                        const T* go_row = go_plane + (static_cast<std::ptrdiff_t>(y) + du) * Wo + dv;
                        T* gi_row = gi_plane + y * W;
                        for (std::size_t x = x_lo; x <= x_hi; ++x)
                            gi_row[x] += wv * go_row[x];
                    }
                }
            }
        }
    });

    // grad_weights and grad_biases.
    T* gw = grads.weights.data();
    parallel_for(K, [&](std::size_t k) {
        double bias_acc = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const T* go_plane = go + (b * K + k) * Ho * Wo;
            for (std::size_t i = 0; i < Ho * Wo; ++i) bias_acc += go_plane[i];
        }
        grads.biases[k] = static_cast<T>(bias_acc);

        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t u = 0; u < kh; ++u) {
                const std::ptrdiff_t du = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(ph);
                const std::size_t i_lo = du < 0 ? static_cast<std::size_t>(-du) : 0;
                const std::ptrdiff_t i_hi_s = static_cast<std::ptrdiff_t>(H) - 1 - du;
                if (i_hi_s < 0) continue;
                const std::size_t i_hi = std::min<std::size_t>(Ho - 1, static_cast<std::size_t>(i_hi_s));
                for (std::size_t v = 0; v < kw; ++v) {
                    const std::ptrdiff_t dv = static_cast<std::ptrdiff_t>(v) - static_cast<std::ptrdiff_t>(pw);
                    const std::size_t j_lo = dv < 0 ? static_cast<std::size_t>(-dv) : 0;
                    const std::ptrdiff_t j_hi_s = static_cast<std::ptrdiff_t>(W) - 1 - dv;
                    if (j_hi_s < 0) continue;
                    const std::size_t j_hi = std::min<std::size_t>(Wo - 1, static_cast<std::size_t>(j_hi_s));
                    double acc = 0.0;
                    for (std::size_t b = 0; b < B; ++b) {
                        const T* go_plane = go + (b * K + k) * Ho * Wo;
                        const T* in_plane = in + (b * C + c) * H * W;
                        for (std::size_t i = i_lo; i <= i_hi; ++i) {
                            const T* go_row = go_plane + i * Wo;
                            const T* in_row = in_plane + (static_cast<std::ptrdiff_t>(i) + du) * W + dv;
                            T dot{0};
                            for (std::size_t j = j_lo; j <= j_hi; ++j)
                                dot += go_row[j] * in_row[j];
                            acc += dot;
                        }
                    }
                    gw[((k * C + c) * kh + u) * kw + v] = static_cast<T>(acc);
                }
            }
        }
    });

    return grads;
}

template <typename T>
MaxoutResultT<T> maxout_forward(const TensorT<T>& input, std::size_t k) {
    if (input.rank() != 4)
        throw std::invalid_argument("maxout: input must be 4-D [B,C,H,W]");
    const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (k < 1 || C % k != 0)
        throw ConfigError("maxout: channel count " + std::to_string(C) +
                          " not divisible by k=" + std::to_string(k));
    const std::size_t G = C / k;
    const std::size_t plane = H * W;

    MaxoutResultT<T> res;
    res.output = TensorT<T>({B, G, H, W});
    res.argmax.assign(B * G * plane, 0);

    const T* in = input.data();
    T* out = res.output.data();
    std::uint8_t* arg = res.argmax.data();

    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t g = 0; g < G; ++g) {
            const T* first = in + (b * C + g * k) * plane;
            T* o = out + (b * G + g) * plane;
            std::uint8_t* a = arg + (b * G + g) * plane;
            std::copy(first, first + plane, o);
            std::fill(a, a + plane, std::uint8_t{0});
            for (std::size_t j = 1; j < k; ++j) {
                const T* cand = first + j * plane;
                for (std::size_t p = 0; p < plane; ++p) {
                    if (cand[p] > o[p]) {
                        o[p] = cand[p];
                        a[p] = static_cast<std::uint8_t>(j);
                    }
                }
            }
        }
    }
    return res;
}

template <typename T>
TensorT<T> maxout_backward(const TensorT<T>& grad_out,
                           const std::vector<std::uint8_t>& argmax, std::size_t k) {
    if (grad_out.rank() != 4)
        throw std::invalid_argument("maxout backward: grad_out must be 4-D");
    if (argmax.size() != grad_out.size())
        throw std::invalid_argument("maxout backward: argmax size mismatch");
    const std::size_t B = grad_out.dim(0), G = grad_out.dim(1);
    const std::size_t H = grad_out.dim(2), W = grad_out.dim(3);
    const std::size_t plane = H * W;

    TensorT<T> grad_in({B, G * k, H, W});
    const T* go = grad_out.data();
    T* gi = grad_in.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t g = 0; g < G; ++g) {
            const T* go_plane = go + (b * G + g) * plane;
            const std::uint8_t* a = argmax.data() + (b * G + g) * plane;
            T* gi_group = gi + (b * G * k + g * k) * plane;
            for (std::size_t p = 0; p < plane; ++p)
                gi_group[a[p] * plane + p] = go_plane[p];
        }
    }
    return grad_in;
}

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& input) {
    TensorT<T> out(input.dims());
    for (std::size_t i = 0; i < input.size(); ++i)
        out[i] = input[i] > T{0} ? input[i] : T{0};
    return out;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& input) {
    if (!grad_out.same_dims(input))
        throw std::invalid_argument("relu backward: dim mismatch");
    TensorT<T> gi(input.dims());
    for (std::size_t i = 0; i < input.size(); ++i)
        gi[i] = input[i] > T{0} ? grad_out[i] : T{0};
    return gi;
}

template <typename T>
TensorT<T> inception_forward(const TensorT<T>& input, const InceptionBlockT<T>& block) {
    if (block.paths.empty()) throw ConfigError("inception: no paths");
    const std::size_t B = input.dim(0);

    std::vector<TensorT<T>> outs;
    outs.reserve(block.paths.size());
    for (const auto& path : block.paths) outs.push_back(conv2d_forward(input, path));

    const std::size_t Ho = outs[0].dim(2), Wo = outs[0].dim(3);
    for (const auto& o : outs)
        if (o.dim(2) != Ho || o.dim(3) != Wo)
            throw ConfigError("inception: path spatial dims disagree");

    TensorT<T> out({B, block.out_channels(), Ho, Wo});
    const std::size_t plane = Ho * Wo;
    const std::size_t Ct = out.dim(1);
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t coff = 0;
        for (const auto& o : outs) {
            const std::size_t Cp = o.dim(1);
            std::copy(o.data() + b * Cp * plane, o.data() + (b + 1) * Cp * plane,
                      out.data() + (b * Ct + coff) * plane);
            coff += Cp;
        }
    }
    return out;
}

template <typename T>
InceptionGradsT<T> inception_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                                      const InceptionBlockT<T>& block) {
    if (block.paths.empty()) throw ConfigError("inception: no paths");
    if (grad_out.dim(1) != block.out_channels())
        throw std::invalid_argument("inception backward: grad_out channel mismatch");
    const std::size_t B = input.dim(0);
    const std::size_t Ho = grad_out.dim(2), Wo = grad_out.dim(3);
    const std::size_t plane = Ho * Wo;
    const std::size_t Ct = grad_out.dim(1);

    InceptionGradsT<T> grads;
    grads.input = TensorT<T>(input.dims());
    std::size_t coff = 0;
    for (const auto& path : block.paths) {
        const std::size_t Cp = path.num_kernels;
        TensorT<T> go_slice({B, Cp, Ho, Wo});
        for (std::size_t b = 0; b < B; ++b)
            std::copy(grad_out.data() + (b * Ct + coff) * plane,
                      grad_out.data() + (b * Ct + coff + Cp) * plane,
                      go_slice.data() + b * Cp * plane);
        ConvGradsT<T> pg = conv2d_backward(go_slice, input, path);
        for (std::size_t i = 0; i < grads.input.size(); ++i) grads.input[i] += pg.input[i];
        grads.weights.push_back(std::move(pg.weights));
        grads.biases.push_back(std::move(pg.biases));
        coff += Cp;
    }
    return grads;
}

template <typename T>
MseResultT<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
    if (!pred.same_dims(target))
        throw std::invalid_argument("mse: dim mismatch " + dims_to_string(pred.dims()) +
                                    " vs " + dims_to_string(target.dims()));
    const std::size_t n = pred.size();
    MseResultT<T> res;
    res.grad_pred = TensorT<T>(pred.dims());
    double acc = 0.0;
    const T inv = static_cast<T>(2.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        acc += d * d;
        res.grad_pred[i] = static_cast<T>(d) * inv;
    }
    res.loss = acc / static_cast<double>(n);
    return res;
}

#define DW_INSTANTIATE(T)                                                                   \
    template struct ConvLayerT<T>;                                                          \
    template TensorT<T> conv2d_forward<T>(const TensorT<T>&, const ConvLayerT<T>&);         \
    template ConvGradsT<T> conv2d_backward<T>(const TensorT<T>&, const TensorT<T>&,         \
                                              const ConvLayerT<T>&);                        \
    template MaxoutResultT<T> maxout_forward<T>(const TensorT<T>&, std::size_t);            \
    template TensorT<T> maxout_backward<T>(const TensorT<T>&,                               \
                                           const std::vector<std::uint8_t>&, std::size_t);  \
    template TensorT<T> relu_forward<T>(const TensorT<T>&);                                 \
    template TensorT<T> relu_backward<T>(const TensorT<T>&, const TensorT<T>&);             \
    template TensorT<T> inception_forward<T>(const TensorT<T>&, const InceptionBlockT<T>&); \
    template InceptionGradsT<T> inception_backward<T>(const TensorT<T>&, const TensorT<T>&, \
                                                      const InceptionBlockT<T>&);           \
    template MseResultT<T> mse_loss<T>(const TensorT<T>&, const TensorT<T>&);

DW_INSTANTIATE(float)
DW_INSTANTIATE(double)
#undef DW_INSTANTIATE

}  // namespace dw::nn
