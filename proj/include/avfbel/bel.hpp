#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/rng.hpp"
#include "avfbel/tensor.hpp"

// Brain-emotion-learning head. Sliding windows over the fused feature sequence
// are folded into a context vector by a frozen recurrent expansion; the
// amygdala node (weights V, plus one thalamic input) excites and the
// orbitofrontal node (weights U, scaled by the prefrontal gain gamma)
// inhibits. V adapts by reward-clamped reinforcement; U adapts by one of two
// inhibition rules, see InhibitionRule.
namespace avfbel::bel {

// How the orbitofrontal weights learn.
//
//   output_error:    dU_j = beta * x_j * (E - Re). Negative feedback: the
//                    inhibitory system cancels the excess of the model output
//                    over the reward, so E tracks Re. Default.
//   node_difference: dU_j = beta * x_j * sum_k(O_k - Re). Positive feedback:
//                    any deviation of total inhibition from its fixed point is
//                    amplified, which diverges under repeated updates for any
//                    beta * gamma > 0 (demonstrated in the test suite). Kept
//                    selectable for inspection.
enum class InhibitionRule { output_error, node_difference };

struct BelConfig {
    double alpha = 0.2;        // amygdala learning rate
    double beta = 0.2;         // orbitofrontal learning rate
    std::size_t epoch_cap = 200;
    double tolerance = 1e-4;   // convergence threshold on epoch-mean |dV|
    double thalamic_amplitude = 1.0;
    InhibitionRule inhibition_rule = InhibitionRule::output_error;
    bool train_inhibition = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (alpha <= 0.0 || beta <= 0.0)
            throw ContractViolation("bel: learning rates must be positive");
        if (epoch_cap == 0) throw ContractViolation("bel: epoch cap must be >= 1");
        if (tolerance < 0.0) throw ContractViolation("bel: tolerance must be >= 0");
        if (thalamic_amplitude < 0.0)
            throw ContractViolation("bel: thalamic amplitude must be >= 0");
    }
};

struct BelWeights {
    std::size_t input_dim = 0;   // d, dimension of one sequence element
    std::size_t context_dim = 0; // k, kept equal to d
    std::size_t window = 4;
    Tensor v;        // length d+1; the last entry weights the thalamic input
    Tensor u;        // length d
    double gamma = 1.0; // prefrontal control gain in [0,1]
    Tensor r;        // (k, d + k) frozen recurrent expansion
};

// Gains of the frozen recurrent expansion. The input block runs hot enough to
// keep tanh contexts informative for sub-unit-scale feature sequences; the
// hidden block is attenuated so the context is dominated by the window's most
// recent element with the older ones as a soft memory.
inline constexpr double kContextInputGain = 2.0;
inline constexpr double kContextHiddenGain = 0.15;

// Zero-initialized V and U; seeded frozen recurrent matrix scaled for a
// contracting tanh expansion.
inline BelWeights init(std::size_t input_dim, std::size_t window, std::uint64_t seed,
                       double gamma = 1.0) {
    if (input_dim == 0) throw ContractViolation("bel init: input dim must be positive");
    if (window == 0) throw ContractViolation("bel init: window must be positive");
    if (gamma < 0.0 || gamma > 1.0) throw ContractViolation("bel init: gamma must be in [0,1]");
    BelWeights w;
    w.input_dim = input_dim;
    w.context_dim = input_dim;
    w.window = window;
    w.gamma = gamma;
    w.v = Tensor({input_dim + 1});
    w.u = Tensor({input_dim});
    SplitRng rng = SplitRng(seed).split("bel-recurrent");
    const double input_scale = kContextInputGain / std::sqrt(static_cast<double>(input_dim));
    const double hidden_scale = kContextHiddenGain / std::sqrt(static_cast<double>(w.context_dim));
    w.r = Tensor({w.context_dim, input_dim + w.context_dim});
    for (std::size_t row = 0; row < w.context_dim; ++row) {
        for (std::size_t i = 0; i < input_dim; ++i)
            w.r.at2(row, i) = rng.uniform(-input_scale, input_scale);
        for (std::size_t i = 0; i < w.context_dim; ++i)
            w.r.at2(row, input_dim + i) = rng.uniform(-hidden_scale, hidden_scale);
    }
    return w;
}

// Overlapping stride-1 windows; count = len - w + 1.
inline std::vector<std::vector<Tensor>> build_windows(const std::vector<Tensor>& sequence,
                                                      std::size_t window) {
    if (window == 0) throw ContractViolation("build_windows: window must be positive");
    if (sequence.size() < window)
        throw ContractViolation("build_windows: sequence of " + std::to_string(sequence.size()) +
                                " is shorter than window " + std::to_string(window));
    std::vector<std::vector<Tensor>> windows;
    windows.reserve(sequence.size() - window + 1);
    for (std::size_t i = 0; i + window <= sequence.size(); ++i)
        windows.emplace_back(sequence.begin() + static_cast<std::ptrdiff_t>(i),
                             sequence.begin() + static_cast<std::ptrdiff_t>(i + window));
    return windows;
}

// h_t = tanh(R * concat(x_t, h_{t-1})) iterated over the window, h_0 = 0;
// returns the final h truncated to the input dimension.
inline Tensor contextualize(const std::vector<Tensor>& window, const Tensor& r) {
    if (r.rank() != 2) throw DimensionError("contextualize: R must be a matrix");
    const std::size_t k = r.dim(0);
    const std::size_t d = r.dim(1) - k;
    Tensor h({k});
    Tensor z({k});
    for (const Tensor& x : window) {
        if (x.rank() != 1 || x.dim(0) != d)
            throw DimensionError("contextualize: window element " + x.shape_string() +
                                 " does not match R " + r.shape_string());
        for (std::size_t row = 0; row < k; ++row) {
            const double* r_row = &r.at2(row, 0);
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += r_row[i] * x[i];
            for (std::size_t i = 0; i < k; ++i) acc += r_row[d + i] * h[i];
            z[row] = acc;
        }
        for (std::size_t row = 0; row < k; ++row) h[row] = std::tanh(z[row]);
    }
    Tensor out({d});
    for (std::size_t i = 0; i < d; ++i) out[i] = h[i];
    return out;
}

// One uniform [0, amplitude] draw simulating thalamic output.
inline double thalamic_signal(SplitRng& rng, double amplitude = 1.0) {
    if (amplitude < 0.0) throw ContractViolation("thalamic_signal: amplitude must be >= 0");
    return amplitude * rng.uniform();
}

struct NodeOutputs {
    Tensor a;  // per-node amygdala outputs, length d+1
    Tensor o;  // per-node orbitofrontal outputs, length d
    double sum_a = 0.0;
    double sum_o = 0.0;
    double e = 0.0; // sum A - sum O
};

// A_i = xa_i * V_i with xa = concat(x, th); O_j = x_j * U_j * gamma;
// E = sum(A) - sum(O).
inline NodeOutputs forward(const Tensor& x, double thalamic, const BelWeights& w) {
    if (x.rank() != 1 || x.dim(0) != w.input_dim)
        throw DimensionError("bel forward: context " + x.shape_string() + " does not match d=" +
                             std::to_string(w.input_dim));
    NodeOutputs out;
    out.a = Tensor({w.input_dim + 1});
    out.o = Tensor({w.input_dim});
    for (std::size_t i = 0; i < w.input_dim; ++i) {
        out.a[i] = x[i] * w.v[i];
        out.sum_a += out.a[i];
        out.o[i] = x[i] * w.u[i] * w.gamma;
        out.sum_o += out.o[i];
    }
    out.a[w.input_dim] = thalamic * w.v[w.input_dim];
    out.sum_a += out.a[w.input_dim];
    out.e = out.sum_a - out.sum_o;
    return out;
}

struct WeightDeltas {
    Tensor d_v;
    Tensor d_u;
};

// dV_i = alpha * xa_i * max(0, Re - sum A): learning halts exactly once the
// amygdala output reaches the reinforcement level. dU per the configured rule.
inline WeightDeltas update(const Tensor& xa, const Tensor& x, const Tensor& a, const Tensor& o,
                           double reward, const BelConfig& cfg) {
    if (!(reward >= 0.0 && reward <= 1.0))
        throw ContractViolation("bel update: reward must lie in [0,1]");
    if (xa.size() != a.size() || x.size() != o.size())
        throw DimensionError("bel update: node/input size mismatch");
    double sum_a = 0.0, sum_o = 0.0;
    for (double v : a.values()) sum_a += v;
    for (double v : o.values()) sum_o += v;

    WeightDeltas delta{Tensor(xa.shape()), Tensor(x.shape())};
    const double excitation_error = std::max(0.0, reward - sum_a);
    for (std::size_t i = 0; i < xa.size(); ++i) delta.d_v[i] = cfg.alpha * xa[i] * excitation_error;

    const double inhibition_error =
        cfg.inhibition_rule == InhibitionRule::output_error
            ? (sum_a - sum_o) - reward
            : sum_o - static_cast<double>(o.size()) * reward;
    for (std::size_t i = 0; i < x.size(); ++i) delta.d_u[i] = cfg.beta * x[i] * inhibition_error;
    return delta;
}

struct EpochStats {
    std::size_t epoch = 0;
    double mean_sum_a = 0.0;
    double mean_sum_o = 0.0;
    double mean_e = 0.0;
    double mean_abs_dv = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> trace;
    std::size_t epochs_run = 0;
    bool converged = false;
};

inline constexpr double kDivergenceGuard = 1e6;

// Epoch loop over the windows until the epoch-mean |dV| falls below the
// tolerance or the epoch cap is hit. Contexts are fixed by the frozen R and
// are computed once; the thalamic channel is redrawn every epoch.
inline TrainResult train(const std::vector<std::vector<Tensor>>& windows,
                         const std::vector<double>& targets, BelWeights& w,
                         const BelConfig& cfg) {
    cfg.validate();
    if (windows.empty()) throw ContractViolation("bel train: no windows");
    if (windows.size() != targets.size())
        throw DimensionError("bel train: " + std::to_string(windows.size()) + " windows vs " +
                             std::to_string(targets.size()) + " targets");

    std::vector<Tensor> contexts;
    contexts.reserve(windows.size());
    for (const auto& win : windows) contexts.push_back(contextualize(win, w.r));

    SplitRng root(cfg.seed);
    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epoch_cap; ++epoch) {
        SplitRng th_rng = root.split("thalamic").split(epoch);
        EpochStats stats;
        stats.epoch = epoch;
        double abs_dv = 0.0;
        for (std::size_t s = 0; s < contexts.size(); ++s) {
            const Tensor& x = contexts[s];
            const double th = thalamic_signal(th_rng, cfg.thalamic_amplitude);
            const NodeOutputs nodes = forward(x, th, w);

            Tensor xa({w.input_dim + 1});
            for (std::size_t i = 0; i < w.input_dim; ++i) xa[i] = x[i];
            xa[w.input_dim] = th;
            const WeightDeltas delta = update(xa, x, nodes.a, nodes.o, targets[s], cfg);

            // The excitatory rule sees the drawn thalamic signal; the
            // inhibitory comparison regulates the expected appraisal, so its
            // error is taken at the mean thalamic drive.
            const NodeOutputs mean_nodes = forward(x, 0.5 * cfg.thalamic_amplitude, w);
            const WeightDeltas inhibition =
                update(xa, x, mean_nodes.a, mean_nodes.o, targets[s], cfg);

            for (std::size_t i = 0; i < w.v.size(); ++i) {
                w.v[i] += delta.d_v[i];
                abs_dv += std::fabs(delta.d_v[i]);
            }
            if (cfg.train_inhibition)
                for (std::size_t i = 0; i < w.u.size(); ++i) w.u[i] += inhibition.d_u[i];

            stats.mean_sum_a += nodes.sum_a;
            stats.mean_sum_o += nodes.sum_o;
            stats.mean_e += nodes.e;

            for (double v : w.v.values())
                if (!std::isfinite(v) || std::fabs(v) > kDivergenceGuard)
                    throw DivergenceError("bel train: V diverged at epoch " +
                                          std::to_string(epoch));
            for (double v : w.u.values())
                if (!std::isfinite(v) || std::fabs(v) > kDivergenceGuard)
                    throw DivergenceError("bel train: U diverged at epoch " +
                                          std::to_string(epoch));
        }
        const double n = static_cast<double>(contexts.size());
        stats.mean_sum_a /= n;
        stats.mean_sum_o /= n;
        stats.mean_e /= n;
        stats.mean_abs_dv = abs_dv / (n * static_cast<double>(w.v.size()));
        result.trace.push_back(stats);
        result.epochs_run = epoch;
        if (stats.mean_abs_dv < cfg.tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

// Model outputs E for a window sequence. Evaluation holds the thalamic
// channel at its expected drive (amplitude/2) instead of redrawing noise, so
// reported outputs reflect the learned signal path; the constant offset
// cancels in normalize_output.
inline std::vector<double> evaluate(const std::vector<std::vector<Tensor>>& windows,
                                    const BelWeights& w, const BelConfig& cfg) {
    const double th = 0.5 * cfg.thalamic_amplitude;
    std::vector<double> outputs;
    outputs.reserve(windows.size());
    for (const auto& win : windows) {
        const Tensor x = contextualize(win, w.r);
        outputs.push_back(forward(x, th, w).e);
    }
    return outputs;
}

// Min-max scaling of the raw output into [0,1] using the target range;
// degenerate ranges map to 0.5.
inline double normalize_output(double e, double re_min, double re_max) {
    if (re_max < re_min) throw ContractViolation("normalize_output: re_max < re_min");
    if (re_max == re_min) return 0.5;
    const double scaled = (e - re_min) / (re_max - re_min);
    return scaled < 0.0 ? 0.0 : (scaled > 1.0 ? 1.0 : scaled);
}

inline std::vector<double> normalize_output(const std::vector<double>& e_values, double re_min,
                                            double re_max) {
    std::vector<double> out;
    out.reserve(e_values.size());
    for (double e : e_values) out.push_back(normalize_output(e, re_min, re_max));
    return out;
}

// Heatmap export: matrix,row,col,value covering V, U, gamma, and R.
inline std::string heatmap_csv(const BelWeights& w) {
    std::ostringstream out;
    out << "matrix,row,col,value\n";
    const auto emit = [&out](const char* name, std::size_t row, std::size_t col, double value) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        out << name << ',' << row << ',' << col << ',' << buf << '\n';
    };
    for (std::size_t i = 0; i < w.v.size(); ++i) emit("V", 0, i, w.v[i]);
    for (std::size_t i = 0; i < w.u.size(); ++i) emit("U", 0, i, w.u[i]);
    emit("gamma", 0, 0, w.gamma);
    for (std::size_t r = 0; r < w.r.dim(0); ++r)
        for (std::size_t c = 0; c < w.r.dim(1); ++c) emit("R", r, c, w.r.at2(r, c));
    return out.str();
}

} // namespace avfbel::bel
