#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/num.hpp"
#include "avfbel/rng.hpp"
#include "avfbel/tensor.hpp"
#include "avfbel/visual.hpp"

// Attention-weighted audio-visual fusion: each modality is encoded into a
// hidden space, gated by its own ReLU attention vector, concatenated, and
// projected to the fused feature X_am plus a clamped scalar positivity head.
// Trained end-to-end together with the visual stack; the auditory path is a
// fixed simulator and enters as a precomputed feature vector.
namespace avfbel::fusion {

struct FusionConfig {
    std::size_t music_dim = 3;
    std::size_t video_dim = 8;
    std::size_t hidden_dim = 8;
    std::size_t fused_dim = 8;
    std::uint64_t seed = 0;
};

struct FusionWeights {
    FusionConfig config;
    Tensor w_music, b_music;           // (h, music_dim), (h)
    Tensor w_video, b_video;           // (h, video_dim), (h)
    Tensor w_attn_music, b_attn_music; // (h, h), (h)
    Tensor w_attn_video, b_attn_video; // (h, h), (h)
    Tensor w_out, b_out;               // (fused, 2h), (fused)
    Tensor w_head, b_head;             // (1, fused), (1)
};

inline FusionWeights init(const FusionConfig& cfg) {
    if (cfg.music_dim == 0 || cfg.video_dim == 0 || cfg.hidden_dim == 0 || cfg.fused_dim == 0)
        throw ContractViolation("fusion init: all dimensions must be positive");
    FusionWeights w;
    w.config = cfg;
    SplitRng rng = SplitRng(cfg.seed).split("fusion-init");
    const std::size_t h = cfg.hidden_dim;
    SplitRng r1 = rng.split("music"), r2 = rng.split("video"), r3 = rng.split("attn-music"),
             r4 = rng.split("attn-video"), r5 = rng.split("out"), r6 = rng.split("head");
    w.w_music = num::xavier_uniform_init({h, cfg.music_dim}, r1);
    w.b_music = Tensor({h});
    w.w_video = num::xavier_uniform_init({h, cfg.video_dim}, r2);
    w.b_video = Tensor({h});
    w.w_attn_music = num::xavier_uniform_init({h, h}, r3);
    w.b_attn_music = Tensor({h});
    w.w_attn_video = num::xavier_uniform_init({h, h}, r4);
    w.b_attn_video = Tensor({h});
    w.w_out = num::xavier_uniform_init({cfg.fused_dim, 2 * h}, r5);
    w.b_out = Tensor({cfg.fused_dim});
    w.w_head = num::xavier_uniform_init({1, cfg.fused_dim}, r6);
    w.b_head = Tensor({1});
    return w;
}

enum class Mode { train, infer };

struct Trace {
    Tensor x_m, x_a;
    Tensor pre_m, h_m;                 // h_m after dropout
    Tensor pre_v, h_v;
    Tensor drop_scale_m, drop_scale_v; // per-unit multiplier (0 or 1/(1-p); 1 at inference)
    Tensor pre_attn_m, attn_m;
    Tensor pre_attn_v, attn_v;
    Tensor x_m1, x_a1;
    Tensor fused_input;                // concat(x_a1, x_m1)
    Tensor x_am;
    double head_pre = 0.0;
    double epp_pred = 0.0;
};

struct Output {
    Tensor x_am;
    double epp_pred = 0.0;
};

namespace detail {

inline void branch_forward(const Tensor& input, const Tensor& w_in, const Tensor& b_in,
                           const Tensor& w_attn, const Tensor& b_attn, Mode mode, double dropout,
                           SplitRng* dropout_rng, Tensor& pre, Tensor& hidden, Tensor& drop_scale,
                           Tensor& pre_attn, Tensor& attn, Tensor& gated) {
    pre = num::linear(input, w_in, b_in);
    hidden = num::relu(pre);
    drop_scale = Tensor(hidden.shape(), 1.0);
    if (mode == Mode::train && dropout > 0.0) {
        if (dropout_rng == nullptr)
            throw ContractViolation("fusion forward: dropout requires a generator");
        const double keep_scale = 1.0 / (1.0 - dropout);
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            const bool drop = dropout_rng->uniform() < dropout;
            drop_scale[i] = drop ? 0.0 : keep_scale;
            hidden[i] *= drop_scale[i];
        }
    }
    pre_attn = num::linear(hidden, w_attn, b_attn);
    attn = num::relu(pre_attn);
    gated = Tensor(hidden.shape());
    for (std::size_t i = 0; i < hidden.size(); ++i) gated[i] = attn[i] * hidden[i];
}

} // namespace detail

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline Output forward(const Tensor& x_a, const Tensor& x_m, const FusionWeights& w,
                      Mode mode = Mode::infer, double dropout = 0.0,
                      SplitRng* dropout_rng = nullptr, Trace* trace = nullptr) {
    if (x_a.rank() != 1 || x_a.dim(0) != w.config.video_dim)
        throw DimensionError("fusion forward: X_a must have length " +
                             std::to_string(w.config.video_dim) + ", got " + x_a.shape_string());
    if (x_m.rank() != 1 || x_m.dim(0) != w.config.music_dim)
        throw DimensionError("fusion forward: X_m must have length " +
                             std::to_string(w.config.music_dim) + ", got " + x_m.shape_string());
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.x_m = x_m;
    tr.x_a = x_a;
    detail::branch_forward(x_m, w.w_music, w.b_music, w.w_attn_music, w.b_attn_music, mode, dropout,
                           dropout_rng, tr.pre_m, tr.h_m, tr.drop_scale_m, tr.pre_attn_m, tr.attn_m,
                           tr.x_m1);
    detail::branch_forward(x_a, w.w_video, w.b_video, w.w_attn_video, w.b_attn_video, mode, dropout,
                           dropout_rng, tr.pre_v, tr.h_v, tr.drop_scale_v, tr.pre_attn_v, tr.attn_v,
                           tr.x_a1);

    const std::size_t h = w.config.hidden_dim;
    tr.fused_input = Tensor({2 * h});
    for (std::size_t i = 0; i < h; ++i) {
        tr.fused_input[i] = tr.x_a1[i];
        tr.fused_input[h + i] = tr.x_m1[i];
    }
    tr.x_am = num::linear(tr.fused_input, w.w_out, w.b_out);
    tr.head_pre = num::linear(tr.x_am, w.w_head, w.b_head)[0];
    tr.epp_pred = clamp01(tr.head_pre);
    return {tr.x_am, tr.epp_pred};
}

struct FusionGrads {
    Tensor d_w_music, d_b_music;
    Tensor d_w_video, d_b_video;
    Tensor d_w_attn_music, d_b_attn_music;
    Tensor d_w_attn_video, d_b_attn_video;
    Tensor d_w_out, d_b_out;
    Tensor d_w_head, d_b_head;
};

inline FusionGrads zero_grads(const FusionWeights& w) {
    FusionGrads g;
    g.d_w_music = Tensor(w.w_music.shape());
    g.d_b_music = Tensor(w.b_music.shape());
    g.d_w_video = Tensor(w.w_video.shape());
    g.d_b_video = Tensor(w.b_video.shape());
    g.d_w_attn_music = Tensor(w.w_attn_music.shape());
    g.d_b_attn_music = Tensor(w.b_attn_music.shape());
    g.d_w_attn_video = Tensor(w.w_attn_video.shape());
    g.d_b_attn_video = Tensor(w.b_attn_video.shape());
    g.d_w_out = Tensor(w.w_out.shape());
    g.d_b_out = Tensor(w.b_out.shape());
    g.d_w_head = Tensor(w.w_head.shape());
    g.d_b_head = Tensor(w.b_head.shape());
    return g;
}

namespace detail {

// Backward through one modality branch; d_gated is dL/d(attn . hidden).
// Returns dL/d(branch input).
inline Tensor branch_backward(const Tensor& input, const Tensor& w_in, const Tensor& w_attn,
                              const Tensor& pre, const Tensor& hidden, const Tensor& drop_scale,
                              const Tensor& pre_attn, const Tensor& attn, const Tensor& d_gated,
                              Tensor& d_w_in, Tensor& d_b_in, Tensor& d_w_attn, Tensor& d_b_attn) {
    const std::size_t h = hidden.size();
    Tensor d_attn({h}), d_hidden({h});
    for (std::size_t i = 0; i < h; ++i) {
        d_attn[i] = d_gated[i] * hidden[i];
        d_hidden[i] = d_gated[i] * attn[i];
    }
    Tensor d_pre_attn({h});
    for (std::size_t i = 0; i < h; ++i) d_pre_attn[i] = pre_attn[i] > 0.0 ? d_attn[i] : 0.0;
    const num::LinearGrads ag = num::linear_backward(hidden, w_attn, d_pre_attn);
    for (std::size_t i = 0; i < ag.d_weight.size(); ++i) d_w_attn[i] += ag.d_weight[i];
    for (std::size_t i = 0; i < ag.d_bias.size(); ++i) d_b_attn[i] += ag.d_bias[i];
    for (std::size_t i = 0; i < h; ++i) d_hidden[i] += ag.d_input[i];

    Tensor d_pre({h});
    for (std::size_t i = 0; i < h; ++i) {
        const double through_dropout = d_hidden[i] * drop_scale[i];
        d_pre[i] = pre[i] > 0.0 ? through_dropout : 0.0;
    }
    const num::LinearGrads ig = num::linear_backward(input, w_in, d_pre);
    for (std::size_t i = 0; i < ig.d_weight.size(); ++i) d_w_in[i] += ig.d_weight[i];
    for (std::size_t i = 0; i < ig.d_bias.size(); ++i) d_b_in[i] += ig.d_bias[i];
    return ig.d_input;
}

} // namespace detail

// Backward from dL/d(epp_pred); accumulates parameter gradients and returns
// dL/dX_a for the visual chain. The clamp contributes subgradient 1 inside
// [0,1] and 0 outside.
inline Tensor backward(const FusionWeights& w, const Trace& tr, double d_pred,
                       FusionGrads& grads) {
    const std::size_t h = w.config.hidden_dim;
    const double dz =
        (tr.head_pre >= 0.0 && tr.head_pre <= 1.0) ? d_pred : 0.0;

    Tensor d_head({1});
    d_head[0] = dz;
    const num::LinearGrads hg = num::linear_backward(tr.x_am, w.w_head, d_head);
    for (std::size_t i = 0; i < hg.d_weight.size(); ++i) grads.d_w_head[i] += hg.d_weight[i];
    grads.d_b_head[0] += hg.d_bias[0];

    const num::LinearGrads og = num::linear_backward(tr.fused_input, w.w_out, hg.d_input);
    for (std::size_t i = 0; i < og.d_weight.size(); ++i) grads.d_w_out[i] += og.d_weight[i];
    for (std::size_t i = 0; i < og.d_bias.size(); ++i) grads.d_b_out[i] += og.d_bias[i];

    Tensor d_x_a1({h}), d_x_m1({h});
    for (std::size_t i = 0; i < h; ++i) {
        d_x_a1[i] = og.d_input[i];
        d_x_m1[i] = og.d_input[h + i];
    }

    detail::branch_backward(tr.x_m, w.w_music, w.w_attn_music, tr.pre_m, tr.h_m, tr.drop_scale_m,
                            tr.pre_attn_m, tr.attn_m, d_x_m1, grads.d_w_music, grads.d_b_music,
                            grads.d_w_attn_music, grads.d_b_attn_music);
    return detail::branch_backward(tr.x_a, w.w_video, w.w_attn_video, tr.pre_v, tr.h_v,
                                   tr.drop_scale_v, tr.pre_attn_v, tr.attn_v, d_x_a1,
                                   grads.d_w_video, grads.d_b_video, grads.d_w_attn_video,
                                   grads.d_b_attn_video);
}

inline std::vector<std::pair<std::string, Tensor*>> named_params(FusionWeights& w) {
    return {{"fusion.music.weight", &w.w_music},
            {"fusion.music.bias", &w.b_music},
            {"fusion.video.weight", &w.w_video},
            {"fusion.video.bias", &w.b_video},
            {"fusion.attn_music.weight", &w.w_attn_music},
            {"fusion.attn_music.bias", &w.b_attn_music},
            {"fusion.attn_video.weight", &w.w_attn_video},
            {"fusion.attn_video.bias", &w.b_attn_video},
            {"fusion.out.weight", &w.w_out},
            {"fusion.out.bias", &w.b_out},
            {"fusion.head.weight", &w.w_head},
            {"fusion.head.bias", &w.b_head}};
}

inline std::vector<Tensor*> grad_list(FusionGrads& g) {
    return {&g.d_w_music,      &g.d_b_music,      &g.d_w_video,      &g.d_b_video,
            &g.d_w_attn_music, &g.d_b_attn_music, &g.d_w_attn_video, &g.d_b_attn_video,
            &g.d_w_out,        &g.d_b_out,        &g.d_w_head,       &g.d_b_head};
}

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.001;
    double weight_decay = 1e-4;
    double dropout = 0.1; // applied to H_m and H_v during training only
    std::size_t log_interval = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs == 0) throw ContractViolation("fusion train: epochs must be >= 1");
        if (batch_size == 0) throw ContractViolation("fusion train: batch size must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw ContractViolation("fusion train: dropout must be in [0,1)");
        if (log_interval == 0) throw ContractViolation("fusion train: log interval must be >= 1");
    }
};

// One training case: raw animation features (the visual stack trains through
// them) plus the frozen auditory feature vector and the fused target.
struct TrainExample {
    std::array<double, 5> animation_features{};
    Tensor x_m;
    double target = 0.0;
};

struct TrainResult {
    std::vector<std::pair<std::size_t, double>> loss_history; // (epoch, epoch-mean MSE)
    double initial_mse = 0.0;
    double final_mse = 0.0;
};

// Mini-batch Adam over MSE. Gradients flow through the fusion weights and the
// full visual stack; shuffling and dropout draw from streams derived from the
// config seed, so identical configs train identically.
inline TrainResult train(const std::vector<TrainExample>& examples, visual::VisualWeights& vw,
                         FusionWeights& fw, const TrainConfig& cfg) {
    cfg.validate();
    if (examples.empty()) throw ContractViolation("fusion train: empty training set");
    for (const TrainExample& e : examples)
        if (e.x_m.rank() != 1 || e.x_m.dim(0) != fw.config.music_dim)
            throw DimensionError("fusion train: X_m length mismatch");

    SplitRng root(cfg.seed);
    num::AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    adam_cfg.weight_decay = cfg.weight_decay;

    auto v_params = visual::named_params(vw);
    auto f_params = named_params(fw);
    std::vector<num::AdamState> states;
    states.reserve(v_params.size() + f_params.size());
    for (auto& [name, t] : v_params) states.emplace_back(t->shape(), adam_cfg);
    for (auto& [name, t] : f_params) states.emplace_back(t->shape(), adam_cfg);

    const std::size_t n = examples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        SplitRng shuffle_rng = root.split("shuffle").split(epoch);
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        SplitRng dropout_rng = root.split("dropout").split(epoch);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            std::vector<std::array<double, 5>> batch_features(count);
            for (std::size_t i = 0; i < count; ++i)
                batch_features[i] = examples[order[start + i]].animation_features;

            visual::Trace v_trace;
            const Tensor x_a_batch = visual::forward_batch(
                visual::lift_batch(batch_features, vw.config.plane_size), vw, &v_trace);

            visual::VisualGrads v_grads = visual::zero_grads(vw);
            FusionGrads f_grads = zero_grads(fw);
            Tensor d_x_a_batch(x_a_batch.shape());
            const double d_scale = 2.0 / static_cast<double>(count);

            for (std::size_t i = 0; i < count; ++i) {
                const TrainExample& ex = examples[order[start + i]];
                Tensor x_a({vw.config.output_dim});
                for (std::size_t d = 0; d < x_a.size(); ++d) x_a[d] = x_a_batch.at2(i, d);

                Trace f_trace;
                const Output out =
                    forward(x_a, ex.x_m, fw, Mode::train, cfg.dropout, &dropout_rng, &f_trace);
                const double err = out.epp_pred - ex.target;
                epoch_loss += err * err;
                const Tensor d_x_a = backward(fw, f_trace, d_scale * err, f_grads);
                for (std::size_t d = 0; d < d_x_a.size(); ++d) d_x_a_batch.at2(i, d) = d_x_a[d];
            }
            visual::backward_batch(vw, v_trace, d_x_a_batch, v_grads);

            std::size_t s = 0;
            auto v_grad_ptrs = visual::grad_list(v_grads);
            for (std::size_t p = 0; p < v_params.size(); ++p, ++s)
                num::adam_step(*v_params[p].second, *v_grad_ptrs[p], states[s]);
            auto f_grad_ptrs = grad_list(f_grads);
            for (std::size_t p = 0; p < f_params.size(); ++p, ++s)
                num::adam_step(*f_params[p].second, *f_grad_ptrs[p], states[s]);
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("fusion train: non-finite loss at epoch " +
                                  std::to_string(epoch));
        if (epoch == 1) result.initial_mse = epoch_loss;
        result.final_mse = epoch_loss;
        if (epoch % cfg.log_interval == 0) result.loss_history.emplace_back(epoch, epoch_loss);
    }
    return result;
}

} // namespace avfbel::fusion
