#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/rng.hpp"
#include "avfbel/tensor.hpp"

// Minimal dense numeric kernel shared by the cortical encoders and the fusion
// trainer. Every operation is a pure function; backward passes are
// hand-derived and checked against finite_diff_grad in the test suite.
namespace avfbel::num {

namespace detail {

inline std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t stride,
                                std::size_t padding) {
    return (in + 2 * padding - k) / stride + 1;
}

inline void check_conv_args(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                            std::size_t stride, std::size_t padding) {
    if (input.rank() != 4 || kernels.rank() != 4)
        throw DimensionError("conv2d: input and kernels must be rank-4, got " +
                             input.shape_string() + " and " + kernels.shape_string());
    if (bias.rank() != 1 || bias.dim(0) != kernels.dim(0))
        throw DimensionError("conv2d: bias length " + bias.shape_string() +
                             " must equal out-channel count " + std::to_string(kernels.dim(0)));
    if (input.dim(1) != kernels.dim(1))
        throw DimensionError("conv2d: input channels " + std::to_string(input.dim(1)) +
                             " != kernel in-channels " + std::to_string(kernels.dim(1)));
    if (stride == 0) throw ContractViolation("conv2d: stride must be positive");
    const std::size_t kh = kernels.dim(2), kw = kernels.dim(3);
    if (kh > input.dim(2) + 2 * padding || kw > input.dim(3) + 2 * padding)
        throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " exceeds padded input " + input.shape_string());
    require_finite(input, "conv2d");
    require_finite(kernels, "conv2d");
    require_finite(bias, "conv2d");
}

} // namespace detail

// Convolution + bias + ReLU over an (n, c, h, w) tensor. Zero padding.
inline Tensor conv2d_relu(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                          std::size_t stride, std::size_t padding) {
    detail::check_conv_args(input, kernels, bias, stride, padding);
    const std::size_t n = input.dim(0), in_c = input.dim(1), in_h = input.dim(2),
                      in_w = input.dim(3);
    const std::size_t out_c = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    const std::size_t out_h = detail::conv_out_dim(in_h, kh, stride, padding);
    const std::size_t out_w = detail::conv_out_dim(in_w, kw, stride, padding);

    Tensor out({n, out_c, out_h, out_w});
    const auto sp = static_cast<std::ptrdiff_t>(padding);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t oc = 0; oc < out_c; ++oc) {
            const double bias_oc = bias[oc];
            for (std::size_t oy = 0; oy < out_h; ++oy) {
                const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(oy * stride) - sp;
                const std::size_t ky_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -y0));
                const std::size_t ky_hi = static_cast<std::size_t>(
                    std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(
                        static_cast<std::ptrdiff_t>(kh), static_cast<std::ptrdiff_t>(in_h) - y0)));
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(ox * stride) - sp;
                    const std::size_t kx_lo =
                        static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -x0));
                    const std::size_t kx_hi = static_cast<std::size_t>(
                        std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(
                            static_cast<std::ptrdiff_t>(kw), static_cast<std::ptrdiff_t>(in_w) - x0)));
                    double acc = bias_oc;
                    for (std::size_t ic = 0; ic < in_c; ++ic) {
                        for (std::size_t ky = ky_lo; ky < ky_hi; ++ky) {
                            const double* in_row =
                                &input.at4(b, ic, static_cast<std::size_t>(y0) + ky, 0);
                            const double* w_row = &kernels.at4(oc, ic, ky, 0);
                            for (std::size_t kx = kx_lo; kx < kx_hi; ++kx)
                                acc += in_row[static_cast<std::size_t>(x0) + kx] * w_row[kx];
                        }
                    }
                    out.at4(b, oc, oy, ox) = acc > 0.0 ? acc : 0.0;
                }
            }
        }
    }
    return out;
}

struct ConvGrads {
    Tensor d_input;
    Tensor d_kernels;
    Tensor d_bias;
};

// Backward of conv2d_relu. `output` is the forward result (its sign gates the
// ReLU; the zero side uses subgradient 0). Set want_d_input = false for the
// first layer, whose input carries no parameters.
inline ConvGrads conv2d_relu_backward(const Tensor& input, const Tensor& kernels,
                                      const Tensor& output, const Tensor& d_output,
                                      std::size_t stride, std::size_t padding,
                                      bool want_d_input = true) {
    detail::check_conv_args(input, kernels, Tensor({kernels.dim(0)}), stride, padding);
    require_same_shape(output, d_output, "conv2d_relu_backward");

    const std::size_t n = input.dim(0), in_c = input.dim(1), in_h = input.dim(2),
                      in_w = input.dim(3);
    const std::size_t out_c = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    const std::size_t out_h = output.dim(2), out_w = output.dim(3);

    ConvGrads g;
    g.d_kernels = Tensor(kernels.shape());
    g.d_bias = Tensor({out_c});
    if (want_d_input) g.d_input = Tensor(input.shape());

    const auto sp = static_cast<std::ptrdiff_t>(padding);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t oc = 0; oc < out_c; ++oc) {
            for (std::size_t oy = 0; oy < out_h; ++oy) {
                const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(oy * stride) - sp;
                const std::size_t ky_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -y0));
                const std::size_t ky_hi = static_cast<std::size_t>(
                    std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(
                        static_cast<std::ptrdiff_t>(kh), static_cast<std::ptrdiff_t>(in_h) - y0)));
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    if (output.at4(b, oc, oy, ox) <= 0.0) continue; // ReLU gate
                    const double gd = d_output.at4(b, oc, oy, ox);
                    if (gd == 0.0) continue;
                    g.d_bias[oc] += gd;
                    const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(ox * stride) - sp;
                    const std::size_t kx_lo =
                        static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -x0));
                    const std::size_t kx_hi = static_cast<std::size_t>(
                        std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(
                            static_cast<std::ptrdiff_t>(kw), static_cast<std::ptrdiff_t>(in_w) - x0)));
                    for (std::size_t ic = 0; ic < in_c; ++ic) {
                        for (std::size_t ky = ky_lo; ky < ky_hi; ++ky) {
                            const std::size_t iy = static_cast<std::size_t>(y0) + ky;
                            const double* in_row = &input.at4(b, ic, iy, 0);
                            double* dw_row = &g.d_kernels.at4(oc, ic, ky, 0);
                            for (std::size_t kx = kx_lo; kx < kx_hi; ++kx)
                                dw_row[kx] += gd * in_row[static_cast<std::size_t>(x0) + kx];
                            if (want_d_input) {
                                const double* w_row = &kernels.at4(oc, ic, ky, 0);
                                double* din_row = &g.d_input.at4(b, ic, iy, 0);
                                for (std::size_t kx = kx_lo; kx < kx_hi; ++kx)
                                    din_row[static_cast<std::size_t>(x0) + kx] += gd * w_row[kx];
                            }
                        }
                    }
                }
            }
        }
    }
    return g;
}

// Max pooling with square window. Ties route to the first maximum in scan
// order (relevant only to the backward pass).
inline Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 4)
        throw DimensionError("maxpool2d: input must be rank-4, got " + input.shape_string());
    if (window == 0 || stride == 0)
        throw ContractViolation("maxpool2d: window and stride must be positive");
    if (window > input.dim(2) || window > input.dim(3))
        throw DimensionError("maxpool2d: window " + std::to_string(window) +
                             " larger than input " + input.shape_string());
    require_finite(input, "maxpool2d");

    const std::size_t n = input.dim(0), c = input.dim(1), in_h = input.dim(2),
                      in_w = input.dim(3);
    const std::size_t out_h = (in_h - window) / stride + 1;
    const std::size_t out_w = (in_w - window) / stride + 1;
    Tensor out({n, c, out_h, out_w});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t oy = 0; oy < out_h; ++oy)
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    double best = input.at4(b, ch, oy * stride, ox * stride);
                    for (std::size_t wy = 0; wy < window; ++wy)
                        for (std::size_t wx = 0; wx < window; ++wx)
                            best = std::max(best,
                                            input.at4(b, ch, oy * stride + wy, ox * stride + wx));
                    out.at4(b, ch, oy, ox) = best;
                }
    return out;
}

inline Tensor maxpool2d_backward(const Tensor& input, const Tensor& d_output,
                                 std::size_t window, std::size_t stride) {
    const std::size_t n = input.dim(0), c = input.dim(1);
    const std::size_t out_h = d_output.dim(2), out_w = d_output.dim(3);
    Tensor d_input(input.shape());
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t oy = 0; oy < out_h; ++oy)
                for (std::size_t ox = 0; ox < out_w; ++ox) {
                    std::size_t best_y = oy * stride, best_x = ox * stride;
                    double best = input.at4(b, ch, best_y, best_x);
                    for (std::size_t wy = 0; wy < window; ++wy)
                        for (std::size_t wx = 0; wx < window; ++wx) {
                            const double v =
                                input.at4(b, ch, oy * stride + wy, ox * stride + wx);
                            if (v > best) {
                                best = v;
                                best_y = oy * stride + wy;
                                best_x = ox * stride + wx;
                            }
                        }
                    d_input.at4(b, ch, best_y, best_x) += d_output.at4(b, ch, oy, ox);
                }
    return d_input;
}

// Mean over each channel plane, emitted as an (n, c, 1, 1) tensor.
inline Tensor adaptive_avg_pool_1x1(const Tensor& input) {
    if (input.rank() != 4)
        throw DimensionError("adaptive_avg_pool_1x1: input must be rank-4, got " +
                             input.shape_string());
    require_finite(input, "adaptive_avg_pool_1x1");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    Tensor out({n, c, 1, 1});
    const double inv = 1.0 / static_cast<double>(h * w);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* plane = &input.at4(b, ch, 0, 0);
            double sum = 0.0;
            for (std::size_t i = 0; i < h * w; ++i) sum += plane[i];
            out.at4(b, ch, 0, 0) = sum * inv;
        }
    return out;
}

inline Tensor adaptive_avg_pool_1x1_backward(const std::vector<std::size_t>& input_shape,
                                             const Tensor& d_output) {
    Tensor d_input(input_shape);
    const std::size_t n = input_shape[0], c = input_shape[1], h = input_shape[2],
                      w = input_shape[3];
    const double inv = 1.0 / static_cast<double>(h * w);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = d_output.at4(b, ch, 0, 0) * inv;
            double* plane = &d_input.at4(b, ch, 0, 0);
            for (std::size_t i = 0; i < h * w; ++i) plane[i] = g;
        }
    return d_input;
}

// out = weight * input + bias for rank-1 input, rank-2 (out x in) weight.
inline Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.rank() != 1 || weight.rank() != 2 || bias.rank() != 1)
        throw DimensionError("linear: expected vector, matrix, vector");
    if (weight.dim(1) != input.dim(0) || weight.dim(0) != bias.dim(0))
        throw DimensionError("linear: weight " + weight.shape_string() + " incompatible with input " +
                             input.shape_string() + " and bias " + bias.shape_string());
    require_finite(input, "linear");
    require_finite(weight, "linear");
    require_finite(bias, "linear");
    const std::size_t rows = weight.dim(0), cols = weight.dim(1);
    Tensor out({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* w_row = &weight.at2(r, 0);
        double acc = bias[r];
        for (std::size_t c = 0; c < cols; ++c) acc += w_row[c] * input[c];
        out[r] = acc;
    }
    return out;
}

struct LinearGrads {
    Tensor d_input;
    Tensor d_weight;
    Tensor d_bias;
};

inline LinearGrads linear_backward(const Tensor& input, const Tensor& weight,
                                   const Tensor& d_output) {
    const std::size_t rows = weight.dim(0), cols = weight.dim(1);
    LinearGrads g{Tensor({cols}), Tensor(weight.shape()), Tensor({rows})};
    for (std::size_t r = 0; r < rows; ++r) {
        const double go = d_output[r];
        g.d_bias[r] = go;
        const double* w_row = &weight.at2(r, 0);
        double* dw_row = &g.d_weight.at2(r, 0);
        for (std::size_t c = 0; c < cols; ++c) {
            dw_row[c] = go * input[c];
            g.d_input[c] += go * w_row[c];
        }
    }
    return g;
}

inline Tensor relu(const Tensor& input) {
    require_finite(input, "relu");
    Tensor out = input;
    for (double& v : out.values())
        if (v < 0.0) v = 0.0;
    return out;
}

inline Tensor relu_backward(const Tensor& input, const Tensor& d_output) {
    require_same_shape(input, d_output, "relu_backward");
    Tensor d_input = d_output;
    for (std::size_t i = 0; i < input.size(); ++i)
        if (input[i] <= 0.0) d_input[i] = 0.0;
    return d_input;
}

inline double mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size())
        throw DimensionError("mse_loss: length mismatch " + pred.shape_string() + " vs " +
                             target.shape_string());
    require_finite(pred, "mse_loss");
    require_finite(target, "mse_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

inline Tensor mse_loss_backward(const Tensor& pred, const Tensor& target) {
    if (pred.size() != target.size())
        throw DimensionError("mse_loss_backward: length mismatch");
    Tensor d_pred(pred.shape());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        d_pred[i] = scale * (pred[i] - target[i]);
    return d_pred;
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-4; // decoupled L2 term
};

struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    std::uint64_t step_count = 0;
    AdamConfig config;

    explicit AdamState(const std::vector<std::size_t>& param_shape, AdamConfig cfg = {})
        : first_moment(param_shape), second_moment(param_shape), config(cfg) {
        if (cfg.learning_rate <= 0 || cfg.epsilon <= 0 || cfg.weight_decay < 0 ||
            cfg.beta1 <= 0 || cfg.beta1 >= 1 || cfg.beta2 <= 0 || cfg.beta2 >= 1)
            throw ContractViolation("adam: config out of range");
    }
};

// Bias-corrected Adam with decoupled weight decay.
inline void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
    require_same_shape(param, grad, "adam_step");
    require_same_shape(param, state.first_moment, "adam_step");
    require_finite(grad, "adam_step");
    const AdamConfig& c = state.config;
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        param[i] -= c.learning_rate * (m_hat / (std::sqrt(v_hat) + c.epsilon) +
                                       c.weight_decay * param[i]);
    }
    require_finite(param, "adam_step");
}

// Uniform samples in +-sqrt(6 / (fan_in + fan_out)). Rank >= 2 required.
inline Tensor xavier_uniform_init(const std::vector<std::size_t>& shape, SplitRng& rng) {
    if (shape.size() < 2)
        throw ContractViolation("xavier_uniform_init: rank must be >= 2 for fan computation");
    std::size_t receptive = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
    const double fan_in = static_cast<double>(shape[1] * receptive);
    const double fan_out = static_cast<double>(shape[0] * receptive);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor t(shape);
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

inline Tensor xavier_uniform_init(const std::vector<std::size_t>& shape, std::uint64_t seed) {
    SplitRng rng(seed);
    return xavier_uniform_init(shape, rng);
}

// Central-difference gradient of a scalar function; the test-side oracle for
// every hand-derived backward pass.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& param,
                               double h = 1e-5) {
    if (h <= 0) throw ContractViolation("finite_diff_grad: step must be positive");
    Tensor grad(param.shape());
    Tensor probe = param;
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double f_plus = f(probe);
        probe[i] = saved - h;
        const double f_minus = f(probe);
        probe[i] = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
            throw NumericDomainError("finite_diff_grad: function returned non-finite value");
        grad[i] = (f_plus - f_minus) / (2.0 * h);
    }
    return grad;
}

} // namespace avfbel::num
