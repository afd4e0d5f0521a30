#include <doctest.h>

#include <cmath>

#include "avfbel/visual.hpp"
#include "test_support.hpp"

using namespace avfbel;
using test_support::max_rel_error;

namespace {

visual::VisualConfig tiny_config() {
    visual::VisualConfig cfg;
    cfg.plane_size = 8;
    cfg.area_channels = {4, 6, 6, 4};
    cfg.output_dim = 3;
    cfg.seed = 99;
    return cfg;
}

} // namespace

TEST_CASE("lift_features broadcasts each feature onto its channel plane") {
    const Tensor zero = visual::lift_features({0, 0, 0, 0, 0}, 4);
    for (double v : zero.values()) CHECK(v == 0.0);

    const Tensor onehot = visual::lift_features({1, 0, 0, 0, 0}, 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(onehot[i] == 1.0);
    for (std::size_t i = 4; i < onehot.size(); ++i) CHECK(onehot[i] == 0.0);

    const std::array<double, 5> f{0.1, 0.4, 0.9, 0.3, 0.8};
    const Tensor lifted = visual::lift_features(f, 6);
    double tensor_mean = 0.0;
    for (double v : lifted.values()) tensor_mean += v;
    tensor_mean /= static_cast<double>(lifted.size());
    double feature_mean = 0.0;
    for (double v : f) feature_mean += v / 5.0;
    CHECK(tensor_mean == doctest::Approx(feature_mean).epsilon(1e-12));

    CHECK_THROWS_AS(visual::lift_features({1.5, 0, 0, 0, 0}, 4), ContractViolation);
}

TEST_CASE("init: zero biases, bounded kernels, seed-reproducible") {
    visual::VisualConfig cfg;
    cfg.seed = 7;
    const visual::VisualWeights a = visual::init(cfg);
    for (const Tensor& b : a.biases)
        for (double v : b.values()) CHECK(v == 0.0);
    for (double v : a.decoder_bias.values()) CHECK(v == 0.0);

    const double v1_bound = std::sqrt(6.0 / (5.0 * 49 + 16.0 * 49));
    for (double v : a.kernels[0].values()) CHECK(std::fabs(v) <= v1_bound);

    const visual::VisualWeights b = visual::init(cfg);
    for (std::size_t i = 0; i < a.kernels[0].size(); ++i)
        CHECK(a.kernels[0][i] == b.kernels[0][i]);
    for (std::size_t i = 0; i < a.decoder_weight.size(); ++i)
        CHECK(a.decoder_weight[i] == b.decoder_weight[i]);
}

TEST_CASE("zero input with zero biases decodes to the decoder bias") {
    visual::VisualConfig cfg;
    cfg.seed = 3;
    visual::VisualWeights w = visual::init(cfg);
    w.decoder_bias = Tensor::vector1d({1, -2, 3, -4, 5, -6, 7, -8});
    const Tensor xa = visual::forward({0, 0, 0, 0, 0}, w);
    REQUIRE(xa.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(xa[i] == w.decoder_bias[i]);
}

TEST_CASE("default plan: pre-decoder width 16, output d_v, deterministic") {
    visual::VisualConfig cfg;
    cfg.seed = 21;
    const visual::VisualWeights w = visual::init(cfg);
    visual::Trace trace;
    const Tensor input = visual::lift_features({0.2, 0.4, 0.6, 0.8, 1.0}, cfg.plane_size);
    const Tensor out = visual::forward_batch(input, w, &trace);
    CHECK(trace.avg_out.dim(1) == 16); // 16 -> 8 -> 4 (V1) -> ... -> 1x1x16
    CHECK(out.dim(1) == 8);
    CHECK(out.all_finite());

    const Tensor again = visual::forward_batch(input, w);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == again[i]);
}

TEST_CASE("output dimension is d_v for any plane size >= 8") {
    for (std::size_t s : {8, 9, 12, 16, 20}) {
        visual::VisualConfig cfg;
        cfg.plane_size = s;
        cfg.seed = 5;
        const visual::VisualWeights w = visual::init(cfg);
        const Tensor xa = visual::forward({0.3, 0.5, 0.2, 0.9, 0.1}, w);
        CHECK(xa.size() == cfg.output_dim);
    }
    visual::VisualConfig too_small;
    too_small.plane_size = 4;
    CHECK_THROWS_AS(visual::init(too_small), ContractViolation);
}

TEST_CASE("swapping equal features together with their V1 channels is a no-op") {
    visual::VisualConfig cfg;
    cfg.seed = 17;
    visual::VisualWeights w = visual::init(cfg);
    const std::array<double, 5> features{0.4, 0.7, 0.4, 0.2, 0.9}; // features 0 and 2 equal
    const Tensor base = visual::forward(features, w);

    visual::VisualWeights swapped = w;
    const std::size_t k = cfg.kernel_sizes[0];
    for (std::size_t oc = 0; oc < cfg.area_channels[0]; ++oc)
        for (std::size_t y = 0; y < k; ++y)
            for (std::size_t x = 0; x < k; ++x)
                std::swap(swapped.kernels[0].at4(oc, 0, y, x),
                          swapped.kernels[0].at4(oc, 2, y, x));
    std::array<double, 5> permuted = features;
    std::swap(permuted[0], permuted[2]);
    const Tensor perm_out = visual::forward(permuted, swapped);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(perm_out[i] == doctest::Approx(base[i]).epsilon(1e-12));
}

TEST_CASE("forward is stable under small feature perturbations") {
    visual::VisualConfig cfg;
    cfg.seed = 23;
    const visual::VisualWeights w = visual::init(cfg);
    const std::array<double, 5> features{0.5, 0.3, 0.8, 0.6, 0.2};
    const Tensor base = visual::forward(features, w);
    const double kLipschitzBound = 25.0; // recorded stability constant
    for (std::size_t i = 0; i < 5; ++i) {
        for (double eps : {0.01, 0.003}) {
            std::array<double, 5> perturbed = features;
            perturbed[i] += eps;
            const Tensor out = visual::forward(perturbed, w);
            double delta = 0.0;
            for (std::size_t d = 0; d < out.size(); ++d)
                delta = std::max(delta, std::fabs(out[d] - base[d]));
            CHECK(delta < kLipschitzBound * eps);
        }
    }
}

TEST_CASE("gradient check: full visual stack backward") {
    const visual::VisualConfig cfg = tiny_config();
    visual::VisualWeights w = visual::init(cfg);
    SplitRng rng(31);
    const std::vector<std::array<double, 5>> batch{{0.2, 0.8, 0.5, 0.3, 0.6},
                                                   {0.9, 0.1, 0.4, 0.7, 0.2}};
    const Tensor input = visual::lift_batch(batch, cfg.plane_size);
    const Tensor proj = test_support::random_tensor(rng, {2, cfg.output_dim});

    const auto scalarize = [&](const visual::VisualWeights& weights) {
        const Tensor out = visual::forward_batch(input, weights);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += proj[i] * out[i];
        return s;
    };

    visual::Trace trace;
    visual::forward_batch(input, w, &trace);
    visual::VisualGrads grads = visual::zero_grads(w);
    visual::backward_batch(w, trace, proj, grads);

    auto params = visual::named_params(w);
    auto grad_ptrs = visual::grad_list(grads);
    REQUIRE(params.size() == grad_ptrs.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor* param = params[p].second;
        const auto f = [&](const Tensor& candidate) {
            const Tensor saved = *param;
            *param = candidate;
            const double value = scalarize(w);
            *param = saved;
            return value;
        };
        const Tensor fd = num::finite_diff_grad(f, *param);
        CHECK_MESSAGE(max_rel_error(*grad_ptrs[p], fd) < 1e-4, params[p].first);
    }
}
