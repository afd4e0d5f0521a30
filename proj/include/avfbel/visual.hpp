#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/num.hpp"
#include "avfbel/rng.hpp"
#include "avfbel/tensor.hpp"

// Visual-cortex encoder: four convolutional areas (V1, V2, V4, IT) over the
// five lifted visual features, followed by adaptive average pooling and a
// linear decoder. Trained end-to-end by the fusion module.
namespace avfbel::visual {

struct VisualConfig {
    std::size_t plane_size = 16;
    std::size_t input_channels = 5;
    std::array<std::size_t, 4> area_channels{16, 32, 32, 16}; // V1, V2, V4, IT outputs
    std::array<std::size_t, 4> kernel_sizes{7, 3, 3, 3};
    std::array<std::size_t, 4> strides{2, 1, 1, 1};
    std::size_t pool_window = 2;
    std::size_t pool_stride = 2;
    std::size_t output_dim = 8; // d_v
    std::uint64_t seed = 0;

    void validate() const {
        if (input_channels != 5)
            throw ContractViolation("visual: expected five input features");
        if (plane_size < 8)
            throw ContractViolation("visual: plane size must be >= 8 to survive the area stack");
        if (output_dim == 0) throw ContractViolation("visual: output dim must be positive");
        for (std::size_t s : strides)
            if (s == 0) throw ContractViolation("visual: strides must be positive");
    }
};

struct VisualWeights {
    VisualConfig config;
    std::array<Tensor, 4> kernels; // (out, in, k, k)
    std::array<Tensor, 4> biases;  // (out)
    Tensor decoder_weight;         // (d_v, IT channels)
    Tensor decoder_bias;           // (d_v)
};

// Xavier-uniform kernels and decoder, zero biases.
inline VisualWeights init(const VisualConfig& config) {
    config.validate();
    VisualWeights w;
    w.config = config;
    SplitRng rng = SplitRng(config.seed).split("visual-init");
    std::size_t in_ch = config.input_channels;
    for (std::size_t a = 0; a < 4; ++a) {
        const std::size_t k = config.kernel_sizes[a];
        SplitRng area_rng = rng.split(a);
        w.kernels[a] = num::xavier_uniform_init({config.area_channels[a], in_ch, k, k}, area_rng);
        w.biases[a] = Tensor({config.area_channels[a]});
        in_ch = config.area_channels[a];
    }
    SplitRng dec_rng = rng.split("decoder");
    w.decoder_weight = num::xavier_uniform_init({config.output_dim, in_ch}, dec_rng);
    w.decoder_bias = Tensor({config.output_dim});
    return w;
}

// Constant-plane lift: channel i of the (1, 5, s, s) tensor is filled with
// feature i, which preserves the feature values exactly under the conv
// interface.
inline Tensor lift_features(const std::array<double, 5>& features, std::size_t plane_size) {
    if (plane_size == 0) throw ContractViolation("lift_features: plane size must be positive");
    for (double f : features)
        if (!(f >= 0.0 && f <= 1.0))
            throw ContractViolation("lift_features: features must lie in [0,1]");
    Tensor t({1, 5, plane_size, plane_size});
    for (std::size_t c = 0; c < 5; ++c) {
        double* plane = &t.at4(0, c, 0, 0);
        for (std::size_t i = 0; i < plane_size * plane_size; ++i) plane[i] = features[c];
    }
    return t;
}

inline Tensor lift_batch(const std::vector<std::array<double, 5>>& features,
                         std::size_t plane_size) {
    if (features.empty()) throw ContractViolation("lift_batch: empty batch");
    Tensor t({features.size(), 5, plane_size, plane_size});
    for (std::size_t n = 0; n < features.size(); ++n)
        for (std::size_t c = 0; c < 5; ++c) {
            if (!(features[n][c] >= 0.0 && features[n][c] <= 1.0))
                throw ContractViolation("lift_batch: features must lie in [0,1]");
            double* plane = &t.at4(n, c, 0, 0);
            for (std::size_t i = 0; i < plane_size * plane_size; ++i) plane[i] = features[n][c];
        }
    return t;
}

// Every stage kept for the backward pass.
struct Trace {
    Tensor input;
    std::array<Tensor, 4> conv_out; // post-ReLU
    std::array<Tensor, 4> pool_out;
    std::array<std::size_t, 4> pool_window_eff{};
    Tensor avg_out; // (n, IT channels, 1, 1)
    Tensor output;  // (n, d_v)
};

// Area stack forward over a batch; returns an (n, d_v) tensor. The pooling
// window shrinks to the remaining spatial extent once the map is smaller than
// the window, so the stack is defined for any plane size >= 8.
inline Tensor forward_batch(const Tensor& input, const VisualWeights& w, Trace* trace = nullptr) {
    if (input.rank() != 4 || input.dim(1) != w.config.input_channels)
        throw DimensionError("visual forward: expected (n, 5, s, s) input, got " +
                             input.shape_string());
    Tensor cur = input;
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.input = input;
    for (std::size_t a = 0; a < 4; ++a) {
        const std::size_t pad = w.config.kernel_sizes[a] / 2;
        tr.conv_out[a] = num::conv2d_relu(cur, w.kernels[a], w.biases[a], w.config.strides[a], pad);
        const std::size_t spatial = std::min(tr.conv_out[a].dim(2), tr.conv_out[a].dim(3));
        tr.pool_window_eff[a] = std::min(w.config.pool_window, spatial);
        tr.pool_out[a] =
            num::maxpool2d(tr.conv_out[a], tr.pool_window_eff[a], w.config.pool_stride);
        cur = tr.pool_out[a];
    }
    tr.avg_out = num::adaptive_avg_pool_1x1(cur);

    const std::size_t n = input.dim(0);
    const std::size_t channels = tr.avg_out.dim(1);
    Tensor out({n, w.config.output_dim});
    Tensor flat({channels});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < channels; ++c) flat[c] = tr.avg_out.at4(b, c, 0, 0);
        const Tensor row = num::linear(flat, w.decoder_weight, w.decoder_bias);
        for (std::size_t d = 0; d < w.config.output_dim; ++d) out.at2(b, d) = row[d];
    }
    tr.output = out;
    return out;
}

// Single-sample convenience: features -> X_a (rank-1, length d_v).
inline Tensor forward(const std::array<double, 5>& features, const VisualWeights& w) {
    const Tensor out = forward_batch(lift_features(features, w.config.plane_size), w);
    Tensor xa({w.config.output_dim});
    for (std::size_t d = 0; d < xa.size(); ++d) xa[d] = out.at2(0, d);
    return xa;
}

struct VisualGrads {
    std::array<Tensor, 4> d_kernels;
    std::array<Tensor, 4> d_biases;
    Tensor d_decoder_weight;
    Tensor d_decoder_bias;
};

inline VisualGrads zero_grads(const VisualWeights& w) {
    VisualGrads g;
    for (std::size_t a = 0; a < 4; ++a) {
        g.d_kernels[a] = Tensor(w.kernels[a].shape());
        g.d_biases[a] = Tensor(w.biases[a].shape());
    }
    g.d_decoder_weight = Tensor(w.decoder_weight.shape());
    g.d_decoder_bias = Tensor(w.decoder_bias.shape());
    return g;
}

// Backward through decoder, pooling, and all four areas; gradients are
// accumulated into `grads` so batches can stream through.
inline void backward_batch(const VisualWeights& w, const Trace& tr, const Tensor& d_output,
                           VisualGrads& grads) {
    require_same_shape(d_output, tr.output, "visual backward");
    const std::size_t n = d_output.dim(0);
    const std::size_t channels = tr.avg_out.dim(1);

    Tensor d_avg(tr.avg_out.shape());
    Tensor flat({channels});
    Tensor d_row({w.config.output_dim});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < channels; ++c) flat[c] = tr.avg_out.at4(b, c, 0, 0);
        for (std::size_t d = 0; d < w.config.output_dim; ++d) d_row[d] = d_output.at2(b, d);
        const num::LinearGrads lg = num::linear_backward(flat, w.decoder_weight, d_row);
        for (std::size_t i = 0; i < lg.d_weight.size(); ++i)
            grads.d_decoder_weight[i] += lg.d_weight[i];
        for (std::size_t i = 0; i < lg.d_bias.size(); ++i) grads.d_decoder_bias[i] += lg.d_bias[i];
        for (std::size_t c = 0; c < channels; ++c) d_avg.at4(b, c, 0, 0) = lg.d_input[c];
    }

    Tensor d_cur = num::adaptive_avg_pool_1x1_backward(tr.pool_out[3].shape(), d_avg);
    for (std::size_t a = 4; a-- > 0;) {
        const Tensor d_conv = num::maxpool2d_backward(tr.conv_out[a], d_cur, tr.pool_window_eff[a],
                                                      w.config.pool_stride);
        const Tensor& area_input = a == 0 ? tr.input : tr.pool_out[a - 1];
        const std::size_t pad = w.config.kernel_sizes[a] / 2;
        num::ConvGrads cg = num::conv2d_relu_backward(area_input, w.kernels[a], tr.conv_out[a],
                                                      d_conv, w.config.strides[a], pad,
                                                      /*want_d_input=*/a > 0);
        for (std::size_t i = 0; i < cg.d_kernels.size(); ++i)
            grads.d_kernels[a][i] += cg.d_kernels[i];
        for (std::size_t i = 0; i < cg.d_bias.size(); ++i) grads.d_biases[a][i] += cg.d_bias[i];
        if (a > 0) d_cur = std::move(cg.d_input);
    }
}

// Parameter/gradient pairs in a fixed order, for the optimizer and the
// checkpoint writer.
inline std::vector<std::pair<std::string, Tensor*>> named_params(VisualWeights& w) {
    static constexpr std::array<const char*, 4> kAreas{"v1", "v2", "v4", "it"};
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t a = 0; a < 4; ++a) {
        out.emplace_back(std::string("visual.") + kAreas[a] + ".kernel", &w.kernels[a]);
        out.emplace_back(std::string("visual.") + kAreas[a] + ".bias", &w.biases[a]);
    }
    out.emplace_back("visual.decoder.weight", &w.decoder_weight);
    out.emplace_back("visual.decoder.bias", &w.decoder_bias);
    return out;
}

inline std::vector<Tensor*> grad_list(VisualGrads& g) {
    std::vector<Tensor*> out;
    for (std::size_t a = 0; a < 4; ++a) {
        out.push_back(&g.d_kernels[a]);
        out.push_back(&g.d_biases[a]);
    }
    out.push_back(&g.d_decoder_weight);
    out.push_back(&g.d_decoder_bias);
    return out;
}

} // namespace avfbel::visual
