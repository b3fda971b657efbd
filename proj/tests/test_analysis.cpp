#include "doctest.h"

#include <cmath>

#include "dwrecon/analysis.hpp"
#include "test_util.hpp"

using namespace dw;
using namespace dw::analysis;

namespace {

/// conv -> 2-path inception -> 1x1, all maxout-4, single input channel.
model::ModelConfig two_path_config() {
    model::ModelConfig cfg;
    cfg.name = "probe";
    cfg.input_channels = 1;

    model::LayerSpec head;
    head.paths = {model::ConvSpec{3, 3, 4}};
    cfg.layers.push_back(head);

    model::LayerSpec inc;
    inc.kind = model::LayerSpec::Kind::inception;
    inc.paths = {model::ConvSpec{3, 3, 4}, model::ConvSpec{5, 5, 4}};
    cfg.layers.push_back(inc);

    model::LayerSpec tail;
    tail.paths = {model::ConvSpec{1, 1, 4}};
    cfg.layers.push_back(tail);

    cfg.validate();
    return cfg;
}

void zero_params(model::ModelParamsT<double>& params) {
    for (auto& l : params.layers) {
        for (auto& w : l.weights)
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.0;
        for (auto& b : l.biases)
            for (double& v : b) v = 0.0;
    }
}

}  // namespace

TEST_CASE("activation_map rejects unsuitable architectures") {
    std::mt19937_64 rng(1);
    Tensor x = tu::random_tensor({3, 16, 8}, rng);

    // no inception block in the penultimate position
    auto plain = model::build<double>(model::builtin_config("fixed_kernel_baseline", 16, true), 1);
    CHECK_THROWS_AS(activation_map(plain, x), ConfigError);

    // relu tail has no winning-kernel notion
    auto relu = model::build<double>(model::builtin_config("idnet_relu", 16, true), 1);
    CHECK_THROWS_AS(activation_map(relu, x), ConfigError);

    auto good = model::build<double>(model::builtin_config("idnet4", 16, true), 1);
    CHECK_THROWS(activation_map(good, Tensor({3, 16})));
}

TEST_CASE("attribution modes disagree on a constructed two-path model") {
    auto ckpt = model::build<double>(two_path_config(), 7);
    zero_params(ckpt.params);
    // layer0 all zero -> the inception input is 0 everywhere, so each
    // inception feature is just its maxout-ed bias.
    for (double& b : ckpt.params.layers[1].biases[1]) b = 2.0;  // path1 feature = 2
    // 1x1 kernel 0 always wins via its bias; coefficients (1, 0.1)
    ckpt.params.layers[2].weights[0][0] = 1.0;   // path0 channel
    ckpt.params.layers[2].weights[0][1] = 0.1;   // path1 channel
    ckpt.params.layers[2].biases[0][0] = 100.0;

    Tensor x({1, 12, 10});
    ActivationMap by_weight = activation_map(ckpt, x, Attribution::weight_magnitude);
    ActivationMap by_act = activation_map(ckpt, x, Attribution::weighted_activation);

    REQUIRE(by_weight.num_paths == 2);
    CHECK(by_weight.legend == std::vector<std::string>{"3x3", "5x5"});
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 10; ++j) {
            // |1.0| beats |0.1| on weights alone...
            CHECK(by_weight.at(i, j) == 0);
            // ...but path0's feature is 0, so activation weighting flips it
            CHECK(by_act.at(i, j) == 1);
        }
}

TEST_CASE("activation map is invariant to scaling the 1x1 layer") {
    auto ckpt = model::build<double>(two_path_config(), 13);
    std::mt19937_64 rng(14);
    Tensor x = tu::random_tensor({1, 20, 16}, rng);
    ActivationMap base = activation_map(ckpt, x);

    for (std::size_t i = 0; i < ckpt.params.layers[2].weights[0].size(); ++i)
        ckpt.params.layers[2].weights[0][i] *= 37.0;
    for (double& b : ckpt.params.layers[2].biases[0]) b *= 37.0;
    ActivationMap scaled = activation_map(ckpt, x);
    CHECK(base.labels == scaled.labels);
}

TEST_CASE("idnet4 activation map covers the desk kernel legend") {
    auto ckpt = model::build<double>(model::builtin_config("idnet4", 16, true), 3);
    std::mt19937_64 rng(4);
    Tensor x = tu::random_tensor({3, 24, 12}, rng);
    ActivationMap map = activation_map(ckpt, x);
    CHECK(map.height == 24);
    CHECK(map.width == 12);
    CHECK(map.num_paths == 4);
    CHECK(map.legend == std::vector<std::string>{"11x11", "13x13", "15x15", "17x17"});
    for (std::uint8_t l : map.labels) CHECK(l < 4);
}

TEST_CASE("depth contribution rows sum to 100 percent") {
    auto ckpt = model::build<double>(model::builtin_config("idnet4", 16, true), 9);
    std::mt19937_64 rng(10);
    Tensor x = tu::random_tensor({3, 32, 16}, rng);
    DepthContribution dc = depth_contribution(activation_map(ckpt, x));
    REQUIRE(dc.percent.size() == 32);
    for (const auto& row : dc.percent) {
        REQUIRE(row.size() == 4);
        double sum = 0.0;
        for (double v : row) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(100.0).epsilon(1e-9));
    }
}

TEST_CASE("depth contribution counts labels per row") {
    ActivationMap map;
    map.height = 2;
    map.width = 4;
    map.num_paths = 3;
    map.labels = {0, 0, 1, 2,
                  1, 1, 1, 1};
    DepthContribution dc = depth_contribution(map);
    CHECK(dc.percent[0][0] == doctest::Approx(50.0));
    CHECK(dc.percent[0][1] == doctest::Approx(25.0));
    CHECK(dc.percent[0][2] == doctest::Approx(25.0));
    CHECK(dc.percent[1][1] == doctest::Approx(100.0));

    map.labels[0] = 7;  // out of range
    CHECK_THROWS(depth_contribution(map));
}
