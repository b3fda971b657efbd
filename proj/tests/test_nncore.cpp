#include "doctest.h"

#include <numeric>
#include <random>

#include "dwrecon/nncore.hpp"
#include "test_util.hpp"

using namespace dw;
using namespace dw::nn;

namespace {

ConvLayerT<double> make_layer(std::size_t c, std::size_t k, std::size_t kh, std::size_t kw,
                              std::size_t ph, std::size_t pw, std::mt19937_64* rng = nullptr) {
    ConvLayerT<double> layer;
    layer.in_channels = c;
    layer.num_kernels = k;
    layer.kernel_h = kh;
    layer.kernel_w = kw;
    layer.pad_h = ph;
    layer.pad_w = pw;
    layer.weights = Tensor({k, c, kh, kw});
    layer.biases.assign(k, 0.0);
    if (rng) {
        std::normal_distribution<double> dist(0.0, 0.5);
        for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] = dist(*rng);
        for (auto& b : layer.biases) b = dist(*rng);
    }
    return layer;
}

double project(const Tensor& t, const Tensor& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * g[i];
    return acc;
}

}  // namespace

TEST_CASE("conv2d identity kernel reproduces the input") {
    std::mt19937_64 rng(1);
    Tensor in = tu::random_tensor({1, 1, 3, 3}, rng);
    auto layer = make_layer(1, 1, 1, 1, 0, 0);
    layer.weights[0] = 1.0;
    Tensor out = conv2d_forward(in, layer);
    REQUIRE(out.dims() == in.dims());
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == doctest::Approx(in[i]));
}

TEST_CASE("conv2d 2x2 all-ones kernel matches the sliding-window sums") {
    Tensor in({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto layer = make_layer(1, 1, 2, 2, 0, 0);
    layer.weights.fill(1.0);
    Tensor out = conv2d_forward(in, layer);
    REQUIRE(out.dims() == std::vector<std::size_t>{1, 1, 2, 2});
    CHECK(out[0] == doctest::Approx(12.0));
    CHECK(out[1] == doctest::Approx(16.0));
    CHECK(out[2] == doctest::Approx(24.0));
    CHECK(out[3] == doctest::Approx(28.0));
}

TEST_CASE("conv2d first-layer geometry keeps the 512x256 grid") {
    Tensor in({1, 3, 512, 256});
    auto layer = make_layer(3, 256, 9, 3, 4, 1);
    Tensor out = conv2d_forward(in, layer);
    CHECK(out.dims() == std::vector<std::size_t>{1, 256, 512, 256});
}

TEST_CASE("conv2d rejects channel mismatch and oversized kernels") {
    Tensor in({1, 2, 4, 4});
    CHECK_THROWS_AS(conv2d_forward(in, make_layer(3, 1, 3, 3, 1, 1)), ConfigError);
    CHECK_THROWS_AS(conv2d_forward(in, make_layer(2, 1, 7, 7, 0, 0)), ConfigError);
}

TEST_CASE("conv2d backward: zero grad_out gives zero gradients") {
    std::mt19937_64 rng(2);
    Tensor in = tu::random_tensor({2, 2, 5, 5}, rng);
    auto layer = make_layer(2, 3, 3, 3, 1, 1, &rng);
    Tensor go({2, 3, 5, 5});
    auto grads = conv2d_backward(go, in, layer);
    for (std::size_t i = 0; i < grads.input.size(); ++i) CHECK(grads.input[i] == 0.0);
    for (std::size_t i = 0; i < grads.weights.size(); ++i) CHECK(grads.weights[i] == 0.0);
    for (double b : grads.biases) CHECK(b == 0.0);
}

TEST_CASE("conv2d backward: 1x1 identity kernel has identity Jacobian") {
    std::mt19937_64 rng(3);
    Tensor in = tu::random_tensor({1, 1, 4, 4}, rng);
    auto layer = make_layer(1, 1, 1, 1, 0, 0);
    layer.weights[0] = 1.0;
    Tensor go = tu::random_tensor({1, 1, 4, 4}, rng);
    auto grads = conv2d_backward(go, in, layer);
    for (std::size_t i = 0; i < go.size(); ++i) CHECK(grads.input[i] == doctest::Approx(go[i]));
}

TEST_CASE("conv2d backward matches central finite differences") {
    std::mt19937_64 rng(4);
    Tensor in = tu::random_tensor({1, 2, 5, 5}, rng);
    auto layer = make_layer(2, 3, 3, 3, 1, 1, &rng);
    Tensor g = tu::random_tensor({1, 3, 5, 5}, rng);

    auto grads = conv2d_backward(g, in, layer);
    auto phi = [&] { return project(conv2d_forward(in, layer), g); };

    for (std::size_t i = 0; i < in.size(); ++i)
        CHECK(tu::rel_err(grads.input[i], tu::central_diff(phi, in[i])) < 1e-5);
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
        CHECK(tu::rel_err(grads.weights[i], tu::central_diff(phi, layer.weights[i])) < 1e-5);
    for (std::size_t k = 0; k < layer.biases.size(); ++k)
        CHECK(tu::rel_err(grads.biases[k], tu::central_diff(phi, layer.biases[k])) < 1e-5);
}

TEST_CASE("maxout k=1 is the identity") {
    std::mt19937_64 rng(5);
    Tensor in = tu::random_tensor({2, 3, 4, 4}, rng);
    auto res = maxout_forward(in, 1);
    CHECK(res.output.dims() == in.dims());
    for (std::size_t i = 0; i < in.size(); ++i) {
        CHECK(res.output[i] == in[i]);
        CHECK(res.argmax[i] == 0);
    }
    Tensor go = tu::random_tensor({2, 3, 4, 4}, rng);
    Tensor gi = maxout_backward(go, res.argmax, 1);
    for (std::size_t i = 0; i < go.size(); ++i) CHECK(gi[i] == go[i]);
}

TEST_CASE("maxout picks the per-group pixel-wise maximum") {
    Tensor in({1, 4, 1, 1}, {1.0, -2.0, 3.0, 0.0});
    auto res = maxout_forward(in, 2);
    REQUIRE(res.output.dims() == std::vector<std::size_t>{1, 2, 1, 1});
    CHECK(res.output[0] == 1.0);
    CHECK(res.output[1] == 3.0);
    CHECK(res.argmax[0] == 0);
    CHECK(res.argmax[1] == 0);
}

TEST_CASE("maxout 256 channels with k=4 gives 64 channels") {
    Tensor in({1, 256, 2, 2});
    auto res = maxout_forward(in, 4);
    CHECK(res.output.dim(1) == 64);
}

TEST_CASE("maxout rejects indivisible channel counts") {
    Tensor in({1, 5, 2, 2});
    CHECK_THROWS_AS(maxout_forward(in, 2), ConfigError);
}

TEST_CASE("maxout backward routes gradient only to winners") {
    Tensor in({1, 4, 2, 2});
    // channel 0 and 2 dominate their groups everywhere
    for (std::size_t p = 0; p < 4; ++p) {
        in[0 * 4 + p] = 5.0;
        in[1 * 4 + p] = -1.0;
        in[2 * 4 + p] = 7.0;
        in[3 * 4 + p] = 0.0;
    }
    auto res = maxout_forward(in, 2);
    Tensor go({1, 2, 2, 2});
    go.fill(1.0);
    Tensor gi = maxout_backward(go, res.argmax, 2);
    for (std::size_t p = 0; p < 4; ++p) {
        CHECK(gi[0 * 4 + p] == 1.0);
        CHECK(gi[1 * 4 + p] == 0.0);
        CHECK(gi[2 * 4 + p] == 1.0);
        CHECK(gi[3 * 4 + p] == 0.0);
    }
}

TEST_CASE("maxout ties break toward the lowest channel index") {
    Tensor in({1, 2, 1, 1}, {2.0, 2.0});
    auto res = maxout_forward(in, 2);
    CHECK(res.argmax[0] == 0);
}

TEST_CASE("composed conv+maxout matches finite differences away from ties") {
    std::mt19937_64 rng(6);
    Tensor in = tu::random_tensor({1, 2, 5, 5}, rng);
    auto layer = make_layer(2, 4, 3, 3, 1, 1, &rng);
    Tensor g = tu::random_tensor({1, 2, 5, 5}, rng);

    auto forward = [&] {
        auto pre = conv2d_forward(in, layer);
        return maxout_forward(pre, 2);
    };
    auto phi = [&] { return project(forward().output, g); };

    auto res = forward();
    Tensor go_pre = maxout_backward(g, res.argmax, 2);
    auto grads = conv2d_backward(go_pre, in, layer);

    // With random continuous weights ties have probability zero; the fd step
    // is far below the observed max margins.
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
        CHECK(tu::rel_err(grads.weights[i], tu::central_diff(phi, layer.weights[i])) < 1e-5);
    for (std::size_t i = 0; i < in.size(); ++i)
        CHECK(tu::rel_err(grads.input[i], tu::central_diff(phi, in[i])) < 1e-5);
}

TEST_CASE("single-path inception equals the plain convolution") {
    std::mt19937_64 rng(7);
    Tensor in = tu::random_tensor({1, 3, 6, 6}, rng);
    InceptionBlockT<double> block;
    block.paths.push_back(make_layer(3, 2, 3, 3, 1, 1, &rng));
    Tensor direct = conv2d_forward(in, block.paths[0]);
    Tensor via_block = inception_forward(in, block);
    REQUIRE(via_block.dims() == direct.dims());
    for (std::size_t i = 0; i < direct.size(); ++i) CHECK(via_block[i] == direct[i]);
}

TEST_CASE("inception with the four multi-scale paths keeps 32 pre-maxout channels") {
    Tensor in({1, 16, 66, 20});
    InceptionBlockT<double> block;
    block.paths.push_back(make_layer(16, 8, 41, 11, 20, 5));
    block.paths.push_back(make_layer(16, 8, 49, 13, 24, 6));
    block.paths.push_back(make_layer(16, 8, 57, 15, 28, 7));
    block.paths.push_back(make_layer(16, 8, 65, 17, 32, 8));
    Tensor out = inception_forward(in, block);
    CHECK(out.dims() == std::vector<std::size_t>{1, 32, 66, 20});
    auto post = maxout_forward(out, 4);
    CHECK(post.output.dims() == std::vector<std::size_t>{1, 8, 66, 20});
}

TEST_CASE("inception concatenates path outputs in declaration order") {
    Tensor in({1, 2, 3, 3});
    for (std::size_t i = 0; i < 9; ++i) {
        in[i] = 1.0 + static_cast<double>(i);        // channel 0
        in[9 + i] = -3.0 - static_cast<double>(i);   // channel 1
    }
    InceptionBlockT<double> block;
    // path 0 copies input channel 0, path 1 copies input channel 1
    block.paths.push_back(make_layer(2, 1, 1, 1, 0, 0));
    block.paths.push_back(make_layer(2, 1, 1, 1, 0, 0));
    block.paths[0].weights[0] = 1.0;  // [k=0,c=0]
    block.paths[1].weights[1] = 1.0;  // [k=0,c=1]
    Tensor out = inception_forward(in, block);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(out[i] == in[i]);
        CHECK(out[9 + i] == in[9 + i]);
    }
}

TEST_CASE("inception backward matches finite differences") {
    std::mt19937_64 rng(8);
    Tensor in = tu::random_tensor({1, 2, 6, 6}, rng);
    InceptionBlockT<double> block;
    block.paths.push_back(make_layer(2, 2, 3, 3, 1, 1, &rng));
    block.paths.push_back(make_layer(2, 1, 5, 5, 2, 2, &rng));
    Tensor g = tu::random_tensor({1, 3, 6, 6}, rng);

    auto phi = [&] { return project(inception_forward(in, block), g); };
    auto grads = inception_backward(g, in, block);

    for (std::size_t i = 0; i < in.size(); ++i)
        CHECK(tu::rel_err(grads.input[i], tu::central_diff(phi, in[i])) < 1e-5);
    for (std::size_t p = 0; p < block.paths.size(); ++p)
        for (std::size_t i = 0; i < block.paths[p].weights.size(); ++i)
            CHECK(tu::rel_err(grads.weights[p][i],
                              tu::central_diff(phi, block.paths[p].weights[i])) < 1e-5);
}

TEST_CASE("mse of identical tensors is zero with zero gradient") {
    std::mt19937_64 rng(9);
    Tensor a = tu::random_tensor({2, 1, 3, 3}, rng);
    auto res = mse_loss(a, a);
    CHECK(res.loss == 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(res.grad_pred[i] == 0.0);
}

TEST_CASE("mse of a unit offset is one") {
    std::mt19937_64 rng(10);
    Tensor a = tu::random_tensor({1, 1, 4, 4}, rng);
    Tensor b = a;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += 1.0;
    CHECK(mse_loss(b, a).loss == doctest::Approx(1.0));
}

TEST_CASE("mse gradient matches finite differences") {
    std::mt19937_64 rng(11);
    Tensor pred = tu::random_tensor({1, 1, 5, 5}, rng);
    Tensor target = tu::random_tensor({1, 1, 5, 5}, rng);
    auto res = mse_loss(pred, target);
    auto phi = [&] { return mse_loss(pred, target).loss; };
    for (std::size_t i = 0; i < pred.size(); ++i)
        CHECK(tu::rel_err(res.grad_pred[i], tu::central_diff(phi, pred[i])) < 1e-7);
}

TEST_CASE("mse rejects dimension mismatch") {
    Tensor a({1, 1, 2, 2}), b({1, 1, 3, 3});
    CHECK_THROWS_AS(mse_loss(a, b), std::invalid_argument);
}

TEST_CASE("same-padded table layers preserve spatial dims for random sizes") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> hdist(65, 90), wdist(65, 80);
    const std::size_t hw_pairs[5][2] = {{9, 3}, {17, 5}, {33, 9}, {57, 15}, {65, 17}};
    for (int rep = 0; rep < 3; ++rep) {
        const std::size_t H = hdist(rng), W = wdist(rng);
        Tensor in({1, 2, H, W});
        for (const auto& k : hw_pairs) {
            auto layer = ConvLayerT<double>::same_padded(2, 1, k[0], k[1]);
            Tensor out = conv2d_forward(in, layer);
            CHECK(out.dim(2) == H);
            CHECK(out.dim(3) == W);
        }
    }
}

TEST_CASE("conv is linear for zero bias") {
    std::mt19937_64 rng(13);
    Tensor x = tu::random_tensor({1, 2, 5, 5}, rng);
    Tensor y = tu::random_tensor({1, 2, 5, 5}, rng);
    auto layer = make_layer(2, 2, 3, 3, 1, 1, &rng);
    for (auto& b : layer.biases) b = 0.0;
    const double a = 1.7, b = -0.4;
    Tensor mix({1, 2, 5, 5});
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
    Tensor lhs = conv2d_forward(mix, layer);
    Tensor fx = conv2d_forward(x, layer);
    Tensor fy = conv2d_forward(y, layer);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs[i] == doctest::Approx(a * fx[i] + b * fy[i]).epsilon(1e-10));
}

TEST_CASE("maxout is shift-equivariant within a group") {
    std::mt19937_64 rng(14);
    Tensor in = tu::random_tensor({1, 4, 3, 3}, rng);
    auto base = maxout_forward(in, 2);
    const double c = 0.73;
    Tensor shifted = in;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += c;
    auto res = maxout_forward(shifted, 2);
    for (std::size_t i = 0; i < base.output.size(); ++i) {
        CHECK(res.output[i] == doctest::Approx(base.output[i] + c));
        CHECK(res.argmax[i] == base.argmax[i]);
    }
}

TEST_CASE("forward passes are deterministic") {
    std::mt19937_64 rng(15);
    Tensor in = tu::random_tensor({1, 3, 8, 8}, rng);
    auto layer = make_layer(3, 4, 3, 3, 1, 1, &rng);
    Tensor a = conv2d_forward(in, layer);
    Tensor b = conv2d_forward(in, layer);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("ops keep finite values on finite inputs") {
    std::mt19937_64 rng(16);
    Tensor in = tu::random_tensor({2, 4, 7, 7}, rng, 100.0);
    auto layer = make_layer(4, 4, 3, 3, 1, 1, &rng);
    Tensor pre = conv2d_forward(in, layer);
    CHECK(pre.all_finite());
    auto mo = maxout_forward(pre, 2);
    CHECK(mo.output.all_finite());
    auto grads = conv2d_backward(pre, in, layer);
    CHECK(grads.input.all_finite());
    CHECK(grads.weights.all_finite());
}
