// Acceptance suite: one checked criterion per line, nonzero exit on any
// failure. Tolerances and thresholds are pinned in code; every run is
// deterministic.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "avfbel/pipeline.hpp"
#include "test_support.hpp"

using namespace avfbel;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %-22s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- 1. similarity calibration -------------------------------------------

void similarity_calibration() {
    const auto start = Clock::now();
    bool ok = true;
    double worst = 0.0;
    SplitRng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.below(200);
        std::vector<double> truth(n), generated(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.uniform(0.0, 1.0 - 0.2522);
            generated[i] = truth[i] + 0.2522; // exact per-element gap
        }
        const double sim = metrics::similarity(truth, generated);
        worst = std::max(worst, std::fabs(sim - 77.69));
        if (std::fabs(sim - 77.69) > 0.05) ok = false;
    }
    const double elapsed = seconds_since(start);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "MAE 0.2522 -> 77.69%% +-0.05 (worst dev %.4f), %.2fs",
                  worst, elapsed);
    report("similarity-anchor", ok && elapsed < 1.0, detail);
}

// --- 2. LIF analytic oracle ----------------------------------------------

void lif_oracle() {
    const auto start = Clock::now();
    auto pops = auditory::default_populations();
    for (auto& p : pops) p.size = 2;
    auditory::SimConfig cfg;
    cfg.jitter_amplitude_v = 0.0;

    const auditory::SpikeRecord active = auditory::simulate({0.6, 0.6, 0.65}, 1, pops, cfg);
    const auto& pyr = active.populations[0];
    bool ok = pyr.spike_times[0].size() >= 2;
    double isi = 0.0;
    if (ok) {
        isi = pyr.spike_times[0][1] - pyr.spike_times[0][0];
        const double expected = 10.0 * std::log(6.0); // 17.918 ms
        ok = std::fabs(isi - expected) <= cfg.dt_ms;
    }
    const std::size_t count = pyr.counts[0];
    ok = ok && count >= 54 && count <= 56;

    const auditory::SpikeRecord quiet = auditory::simulate({0.4, 0.4, 0.4}, 1, pops, cfg);
    for (const auto& pop : quiet.populations) ok = ok && pop.total_count == 0;

    const double elapsed = seconds_since(start);
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "ISI %.4f ms vs 17.9176, count %zu in [54,56], subthreshold silent, %.2fs", isi,
                  count, elapsed);
    report("lif-analytic-oracle", ok && elapsed < 1.0, detail);
}

// --- 3. gradient suite ----------------------------------------------------

struct GradCheck {
    double worst = 0.0;
    int instances = 0;
    bool ok = true;
    std::string worst_tag;

    void add(const char* tag, const Tensor& analytic, const Tensor& fd) {
        const double err = test_support::max_rel_error(analytic, fd);
        if (err > worst) {
            worst = err;
            worst_tag = tag;
        }
        if (err >= 1e-4) ok = false;
    }
};

void gradient_suite() {
    const auto start = Clock::now();
    GradCheck check;
    SplitRng rng(77);

    for (int trial = 0; trial < 20; ++trial) {
        // conv2d_relu: kernels, bias, input
        {
            const Tensor x = test_support::random_tensor(rng, {1, 2, 5, 5});
            const Tensor k = test_support::random_tensor(rng, {3, 2, 3, 3});
            const Tensor b = test_support::random_tensor(rng, {3});
            const Tensor proj = test_support::random_tensor(rng, {3 * 5 * 5});
            const auto scalarize = [&](const Tensor& out) {
                double s = 0.0;
                for (std::size_t i = 0; i < out.size(); ++i) s += proj[i] * out[i];
                return s;
            };
            const Tensor out = num::conv2d_relu(x, k, b, 1, 1);
            Tensor d_out(out.shape());
            for (std::size_t i = 0; i < d_out.size(); ++i) d_out[i] = proj[i];
            const num::ConvGrads g = num::conv2d_relu_backward(x, k, out, d_out, 1, 1);
            check.add("conv-kernels", g.d_kernels,
                      num::finite_diff_grad(
                          [&](const Tensor& kp) {
                              return scalarize(num::conv2d_relu(x, kp, b, 1, 1));
                          },
                          k, 1e-6));
            check.add("conv-input", g.d_input,
                      num::finite_diff_grad(
                          [&](const Tensor& xp) {
                              return scalarize(num::conv2d_relu(xp, k, b, 1, 1));
                          },
                          x, 1e-6));
            check.add("conv-bias", g.d_bias,
                      num::finite_diff_grad(
                          [&](const Tensor& bp) {
                              return scalarize(num::conv2d_relu(x, k, bp, 1, 1));
                          },
                          b, 1e-6));
            check.instances += 1;
        }
        // linear + mse through a small chain
        {
            const Tensor x = test_support::random_tensor(rng, {5});
            const Tensor w = test_support::random_tensor(rng, {3, 5});
            const Tensor b = test_support::random_tensor(rng, {3});
            const Tensor target = test_support::random_tensor(rng, {3});
            const Tensor out = num::linear(x, w, b);
            const Tensor d_out = num::mse_loss_backward(out, target);
            const num::LinearGrads g = num::linear_backward(x, w, d_out);
            const auto loss_w = [&](const Tensor& wp) {
                return num::mse_loss(num::linear(x, wp, b), target);
            };
            check.add("linear-weight", g.d_weight, num::finite_diff_grad(loss_w, w, 1e-6));
            const auto loss_x = [&](const Tensor& xp) {
                return num::mse_loss(num::linear(xp, w, b), target);
            };
            check.add("linear-input", g.d_input, num::finite_diff_grad(loss_x, x, 1e-6));
            check.instances += 1;
        }
        // fusion: every weight group, both branches, attention gates, head
        {
            fusion::FusionConfig fcfg;
            fcfg.music_dim = 3;
            fcfg.video_dim = 4;
            fcfg.hidden_dim = 5;
            fcfg.fused_dim = 4;
            fcfg.seed = 900 + static_cast<std::uint64_t>(trial);
            fusion::FusionWeights fw = fusion::init(fcfg);
            fw.b_head[0] = 0.4;
            const Tensor x_a = test_support::random_tensor(rng, {4}, 0.0, 1.0);
            const Tensor x_m = test_support::random_tensor(rng, {3}, 0.0, 1.0);
            const double target = rng.uniform();

            fusion::Trace tr;
            fusion::forward(x_a, x_m, fw, fusion::Mode::infer, 0.0, nullptr, &tr);
            fusion::FusionGrads grads = fusion::zero_grads(fw);
            const Tensor d_x_a = fusion::backward(fw, tr, 2.0 * (tr.epp_pred - target), grads);

            auto params = fusion::named_params(fw);
            auto grad_ptrs = fusion::grad_list(grads);
            for (std::size_t p = 0; p < params.size(); ++p) {
                Tensor* param = params[p].second;
                const auto f = [&](const Tensor& candidate) {
                    const Tensor saved = *param;
                    *param = candidate;
                    const double pred = fusion::forward(x_a, x_m, fw).epp_pred;
                    *param = saved;
                    return (pred - target) * (pred - target);
                };
                check.add(params[p].first.c_str(), *grad_ptrs[p], num::finite_diff_grad(f, *param, 1e-6));
            }
            const auto f_xa = [&](const Tensor& xp) {
                const double pred = fusion::forward(xp, x_m, fw).epp_pred;
                return (pred - target) * (pred - target);
            };
            check.add("fusion-xa", d_x_a, num::finite_diff_grad(f_xa, x_a, 1e-6));
            check.instances += 1;
        }
        // full visual stack
        {
            visual::VisualConfig vcfg;
            vcfg.plane_size = 8;
            vcfg.area_channels = {3, 4, 4, 3};
            vcfg.output_dim = 2;
            vcfg.seed = 500 + static_cast<std::uint64_t>(trial);
            visual::VisualWeights vw = visual::init(vcfg);
            // generic evaluation point: zero biases would leave dead layers
            // with pre-activations exactly on the ReLU kink
            for (Tensor* b : {&vw.biases[0], &vw.biases[1], &vw.biases[2], &vw.biases[3],
                              &vw.decoder_bias})
                for (double& v : b->values()) v = rng.uniform(-0.3, 0.3);
            const std::vector<std::array<double, 5>> batch{
                {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}};
            const Tensor input = visual::lift_batch(batch, vcfg.plane_size);
            const Tensor proj = test_support::random_tensor(rng, {1, 2});
            visual::Trace trace;
            visual::forward_batch(input, vw, &trace);
            visual::VisualGrads grads = visual::zero_grads(vw);
            visual::backward_batch(vw, trace, proj, grads);
            auto params = visual::named_params(vw);
            auto grad_ptrs = visual::grad_list(grads);
            for (std::size_t p = 0; p < params.size(); ++p) {
                Tensor* param = params[p].second;
                const auto f = [&](const Tensor& candidate) {
                    const Tensor saved = *param;
                    *param = candidate;
                    const Tensor out = visual::forward_batch(input, vw);
                    *param = saved;
                    double s = 0.0;
                    for (std::size_t i = 0; i < out.size(); ++i) s += proj[i] * out[i];
                    return s;
                };
                check.add(params[p].first.c_str(), *grad_ptrs[p],
                          num::finite_diff_grad(f, *param, 1e-6));
            }
            check.instances += 1;
        }
        // pooling paths
        {
            const Tensor x = test_support::random_tensor(rng, {1, 2, 4, 4});
            const Tensor proj = test_support::random_tensor(rng, {2 * 2 * 2});
            Tensor d_out({1, 2, 2, 2});
            for (std::size_t i = 0; i < d_out.size(); ++i) d_out[i] = proj[i];
            const auto f_pool = [&](const Tensor& xp) {
                const Tensor out = num::maxpool2d(xp, 2, 2);
                double s = 0.0;
                for (std::size_t i = 0; i < out.size(); ++i) s += proj[i] * out[i];
                return s;
            };
            check.add("maxpool-input", num::maxpool2d_backward(x, d_out, 2, 2),
                      num::finite_diff_grad(f_pool, x, 1e-6));

            Tensor d_avg({1, 2, 1, 1});
            d_avg[0] = proj[0];
            d_avg[1] = proj[1];
            const auto f_avg = [&](const Tensor& xp) {
                const Tensor out = num::adaptive_avg_pool_1x1(xp);
                return proj[0] * out[0] + proj[1] * out[1];
            };
            check.add("avgpool-input", num::adaptive_avg_pool_1x1_backward(x.shape(), d_avg),
                      num::finite_diff_grad(f_avg, x, 1e-6));
            check.instances += 1;
        }
    }

    const double elapsed = seconds_since(start);
    char detail[160];
    std::snprintf(detail, sizeof(detail), "%d instances, worst rel err %.2e at %s (< 1e-4), %.2fs",
                  check.instances, check.worst, check.worst_tag.c_str(), elapsed);
    report("gradient-suite", check.ok && elapsed < 30.0, detail);
}

// --- 4. BEL convergence oracle --------------------------------------------

void bel_convergence_oracle() {
    bel::BelConfig cfg;
    cfg.alpha = 0.2;
    bel::BelWeights w = bel::init(1, 1, 3);
    w.gamma = 0.0; // U frozen at zero and disabled
    const Tensor x = Tensor::vector1d({1.0});
    const Tensor xa = Tensor::vector1d({1.0, 0.0});

    bool monotone = true, reached = false, halt_exact = true;
    std::size_t reached_at = 0;
    double prev = 0.0;
    for (std::size_t step = 1; step <= 100; ++step) {
        const bel::NodeOutputs nodes = bel::forward(x, 0.0, w);
        if (nodes.sum_a < prev) monotone = false;
        prev = nodes.sum_a;
        if (!reached && std::fabs(nodes.sum_a - 0.8) <= 1e-3) {
            reached = true;
            reached_at = step;
        }
        const bel::WeightDeltas d = bel::update(xa, x, nodes.a, nodes.o, 0.8, cfg);
        for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] += d.d_v[i];
    }
    // once the output is at or above the reinforcement level, the learning
    // signal halts bitwise
    w.v[0] = 0.85;
    for (int step = 0; step < 20; ++step) {
        const bel::NodeOutputs nodes = bel::forward(x, 0.0, w);
        const bel::WeightDeltas d = bel::update(xa, x, nodes.a, nodes.o, 0.8, cfg);
        for (double dv : d.d_v.values())
            if (dv != 0.0) halt_exact = false;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "monotone %d, reached 0.8+-1e-3 at update %zu, halt exactly zero %d", monotone,
                  reached_at, halt_exact);
    report("bel-convergence", monotone && reached && reached_at <= 100 && halt_exact, detail);
}

// --- 5. ablation ordering --------------------------------------------------

void ablation_ordering() {
    const std::array<std::uint64_t, 5> seeds{1, 2, 3, 4, 5};
    int ordered_seeds = 0;
    double full_run_seconds = 0.0;
    std::string detail;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        pipeline::RunConfig cfg;
        cfg.master_seed = seeds[i];
        cfg.synthetic_n = 760;
        cfg.emit_svg = false;
        if (i == 0) {
            // the first seed exercises the full five-variant ablation, timed
            const auto start = Clock::now();
            const pipeline::AblationTable table = pipeline::run_all(cfg);
            full_run_seconds = seconds_since(start);
            std::map<std::string, pipeline::AblationRow> rows;
            for (const auto& r : table.rows) rows[pipeline::slug(r.variant)] = r;
            const auto& avf = rows.at("avf");
            const auto& a = rows.at("a_bel");
            const auto& m = rows.at("m_bel");
            const bool sim_ok = avf.similarity > a.similarity && a.similarity > m.similarity;
            const bool f1_ok = avf.f1 > a.f1 && a.f1 > m.f1;
            if (sim_ok && f1_ok) ++ordered_seeds;
        } else {
            cfg.variants = {pipeline::Variant::m_bel, pipeline::Variant::a_bel,
                            pipeline::Variant::avf_bel};
            const pipeline::AblationTable table = pipeline::run_all(cfg);
            const auto& m = table.rows[0];
            const auto& a = table.rows[1];
            const auto& avf = table.rows[2];
            const bool sim_ok = avf.similarity > a.similarity && a.similarity > m.similarity;
            const bool f1_ok = avf.f1 > a.f1 && a.f1 > m.f1;
            if (sim_ok && f1_ok) ++ordered_seeds;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "AVF>A>M (similarity and F1) on %d/5 seeds (need >=4), full run %.1fs (< 60s)",
                  ordered_seeds, full_run_seconds);
    report("ablation-ordering", ordered_seeds >= 4 && full_run_seconds < 60.0, buf);
}

// --- 6. EPP properties ------------------------------------------------------

void epp_properties() {
    SplitRng rng(31337);
    bool ok = true;
    for (int trial = 0; trial < 10000; ++trial) {
        std::array<double, 5> r;
        for (double& v : r) v = rng.uniform(0.0, 3.0);
        r[static_cast<std::size_t>(rng.below(5))] += 0.05; // keep the sum positive
        const double base = data::compute_epp(r);

        std::array<double, 5> happier = r;
        happier[4] += rng.uniform(0.0, 2.0);
        if (data::compute_epp(happier) < base - 1e-12) ok = false;

        std::array<double, 5> scarier = r;
        scarier[0] += rng.uniform(0.0, 2.0);
        if (data::compute_epp(scarier) > base + 1e-12) ok = false;

        std::array<double, 5> scaled = r;
        const double c = rng.uniform(0.05, 20.0);
        for (double& v : scaled) v *= c;
        if (std::fabs(data::compute_epp(scaled) - base) > 1e-12) ok = false;
    }

    std::vector<double> values(257);
    for (double& v : values) v = rng.uniform(-4.0, 4.0);
    const std::vector<double> norm = data::normalize_epp(values);
    for (double v : norm)
        if (v < 0.0 || v > 1.0) ok = false;
    for (double v : data::normalize_epp(std::vector<double>(9, 0.42)))
        if (v != 0.5) ok = false;

    report("epp-properties", ok, "monotone + scale-invariant over 1e4 vectors, bounds, guard");
}

// --- 7. determinism ----------------------------------------------------------

std::map<std::string, std::string> artifact_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext != ".json" && ext != ".csv") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        out[fs::relative(entry.path(), root).string()] = buf.str();
    }
    return out;
}

void determinism() {
    const fs::path base = fs::temp_directory_path() / "avfbel_acceptance_det";
    fs::remove_all(base);
    pipeline::RunConfig cfg;
    cfg.master_seed = 97;
    cfg.synthetic_n = 60;
    cfg.emit_svg = false;

    cfg.output_dir = (base / "a").string();
    pipeline::run_all(cfg);
    cfg.output_dir = (base / "b").string();
    pipeline::run_all(cfg);

    const auto a = artifact_bytes(base / "a");
    const auto b = artifact_bytes(base / "b");
    bool ok = !a.empty() && a.size() == b.size();
    if (ok)
        for (const auto& [rel, bytes] : a) {
            const auto it = b.find(rel);
            if (it == b.end() || it->second != bytes) ok = false;
        }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "%zu artifacts byte-identical across two runs", a.size());
    report("determinism", ok, detail);
}

// --- 8. metrics oracle ---------------------------------------------------------

void metrics_oracle() {
    SplitRng rng(556677);
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(64);
        std::vector<int> truth(n), pred(n);
        for (int& v : truth) v = rng.uniform() < 0.5 ? 1 : 0;
        for (int& v : pred) v = rng.uniform() < 0.5 ? 1 : 0;

        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (truth[i] == 1 && pred[i] == 1) ++tp;
            if (truth[i] == 0 && pred[i] == 1) ++fp;
            if (truth[i] == 1 && pred[i] == 0) ++fn;
        }
        const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;

        const metrics::Prf prf = metrics::precision_recall_f1(truth, pred);
        if (prf.precision != p || prf.recall != r || prf.f1 != f) ok = false;
    }
    report("metrics-oracle", ok, "PRF equals brute-force confusion matrix on 1000 label vectors");
}

} // namespace

int main() {
    similarity_calibration();
    lif_oracle();
    gradient_suite();
    bel_convergence_oracle();
    ablation_ordering();
    epp_properties();
    determinism();
    metrics_oracle();
    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", failures);
    return 1;
}
