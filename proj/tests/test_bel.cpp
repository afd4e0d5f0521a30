#include <doctest.h>

#include <cmath>

#include "avfbel/bel.hpp"
#include "test_support.hpp"

using namespace avfbel;
using test_support::random_tensor;

namespace {

std::vector<Tensor> constant_sequence(std::size_t n, std::size_t dim, double value) {
    std::vector<Tensor> seq;
    for (std::size_t i = 0; i < n; ++i) seq.push_back(Tensor({dim}, value));
    return seq;
}

} // namespace

TEST_CASE("build_windows counts, identity, sharing, and the short-sequence error") {
    const std::vector<Tensor> seq = constant_sequence(5, 2, 1.0);
    const auto windows = bel::build_windows(seq, 4);
    CHECK(windows.size() == 2);

    const auto identity = bel::build_windows(seq, 1);
    CHECK(identity.size() == 5);
    CHECK(identity[0].size() == 1);

    std::vector<Tensor> distinct;
    for (std::size_t i = 0; i < 5; ++i) distinct.push_back(Tensor({1}, static_cast<double>(i)));
    const auto overlapping = bel::build_windows(distinct, 3);
    CHECK(overlapping[1][0][0] == distinct[1][0]);

    CHECK_THROWS_AS(bel::build_windows(constant_sequence(3, 2, 0.0), 4), ContractViolation);
}

TEST_CASE("contextualize: zero window, single-step reduction, tanh range") {
    const bel::BelWeights w = bel::init(3, 4, 5);
    const Tensor zero_ctx = bel::contextualize(constant_sequence(4, 3, 0.0), w.r);
    for (double v : zero_ctx.values()) CHECK(v == 0.0);

    SplitRng rng(6);
    const Tensor x = random_tensor(rng, {3});
    const Tensor one_step = bel::contextualize({x}, w.r);
    for (std::size_t row = 0; row < 3; ++row) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) acc += w.r.at2(row, i) * x[i];
        CHECK(one_step[row] == doctest::Approx(std::tanh(acc)).epsilon(1e-12));
    }

    std::vector<Tensor> wild;
    for (int i = 0; i < 4; ++i) wild.push_back(random_tensor(rng, {3}, -5.0, 5.0));
    const Tensor ctx = bel::contextualize(wild, w.r);
    for (double v : ctx.values()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("thalamic_signal: amplitude gate, determinism, uniform moment") {
    SplitRng rng(9);
    CHECK(bel::thalamic_signal(rng, 0.0) == 0.0);

    SplitRng a(10), b(10);
    for (int i = 0; i < 20; ++i) CHECK(bel::thalamic_signal(a) == bel::thalamic_signal(b));

    SplitRng c(11);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) mean += bel::thalamic_signal(c);
    mean /= 10000.0;
    CHECK(std::fabs(mean - 0.5) < 0.02);
}

TEST_CASE("bel forward: zero weights, hand example, control gate") {
    bel::BelWeights w = bel::init(2, 1, 1);
    const Tensor x = Tensor::vector1d({1.0, 0.0});
    CHECK(bel::forward(x, 0.7, w).e == 0.0); // V = U = 0

    w.v = Tensor::vector1d({0.5, 0.2, 0.3});
    w.u = Tensor::vector1d({0.1, 0.9});
    w.gamma = 1.0;
    const bel::NodeOutputs nodes = bel::forward(x, 0.0, w);
    CHECK(nodes.sum_a == doctest::Approx(0.5));
    CHECK(nodes.sum_o == doctest::Approx(0.1));
    CHECK(nodes.e == doctest::Approx(0.4));

    w.gamma = 0.0;
    const bel::NodeOutputs gated = bel::forward(x, 0.0, w);
    CHECK(gated.sum_o == 0.0);
    CHECK(gated.e == doctest::Approx(gated.sum_a));
}

TEST_CASE("bel forward is linear in V (superposition of the A term)") {
    SplitRng rng(14);
    bel::BelWeights w = bel::init(4, 1, 2);
    const Tensor x = random_tensor(rng, {4});
    const Tensor v1 = random_tensor(rng, {5});
    const Tensor v2 = random_tensor(rng, {5});
    const double a = 0.3, b = -1.7, th = 0.25;

    w.v = v1;
    const double sum_a1 = bel::forward(x, th, w).sum_a;
    w.v = v2;
    const double sum_a2 = bel::forward(x, th, w).sum_a;
    Tensor mixed({5});
    for (std::size_t i = 0; i < 5; ++i) mixed[i] = a * v1[i] + b * v2[i];
    w.v = mixed;
    CHECK(bel::forward(x, th, w).sum_a ==
          doctest::Approx(a * sum_a1 + b * sum_a2).epsilon(1e-12));
}

TEST_CASE("bel update: reward clamp, V step, both inhibition rules") {
    bel::BelConfig cfg;
    cfg.alpha = 0.2;
    cfg.beta = 0.1;

    // sum(A) >= Re gives exactly zero dV
    const Tensor xa3 = Tensor::vector1d({1, 0, 0});
    const Tensor x2 = Tensor::vector1d({1, 0});
    const Tensor a_high = Tensor::vector1d({0.9, 0.1, 0.0});
    const Tensor o2 = Tensor::vector1d({0.0, 0.0});
    const bel::WeightDeltas clamped = bel::update(xa3, x2, a_high, o2, 0.8, cfg);
    for (double v : clamped.d_v.values()) CHECK(v == 0.0);

    // V = 0, Re = 1: dV = alpha * xa
    const Tensor a_zero = Tensor::vector1d({0, 0, 0});
    const bel::WeightDeltas fresh = bel::update(xa3, x2, a_zero, o2, 1.0, cfg);
    CHECK(fresh.d_v[0] == doctest::Approx(0.2));
    CHECK(fresh.d_v[1] == 0.0);
    CHECK(fresh.d_v[2] == 0.0);

    // node_difference: x=(0.4), O=(0.5), Re=0.3 -> dU = 0.1 * 0.4 * 0.2 = 0.008
    bel::BelConfig printed = cfg;
    printed.inhibition_rule = bel::InhibitionRule::node_difference;
    const Tensor xa1 = Tensor::vector1d({0.4, 0.0});
    const Tensor x1 = Tensor::vector1d({0.4});
    const Tensor a1 = Tensor::vector1d({0.0, 0.0});
    const Tensor o1 = Tensor::vector1d({0.5});
    const bel::WeightDeltas nd = bel::update(xa1, x1, a1, o1, 0.3, printed);
    CHECK(nd.d_u[0] == doctest::Approx(0.008));

    // output_error on the same inputs with sum(A)=0.9: E - Re = (0.9-0.5) - 0.3
    const Tensor a_sum09 = Tensor::vector1d({0.9, 0.0});
    const bel::WeightDeltas oe = bel::update(xa1, x1, a_sum09, o1, 0.3, cfg);
    CHECK(oe.d_u[0] == doctest::Approx(0.1 * 0.4 * 0.1));

    CHECK_THROWS_AS(bel::update(xa1, x1, a1, o1, 1.5, cfg), ContractViolation);
}

TEST_CASE("single-node reinforcement converges to the reward and halts") {
    bel::BelConfig cfg;
    cfg.alpha = 0.2;
    bel::BelWeights w = bel::init(1, 1, 3);
    w.gamma = 0.0; // isolate the amygdala path
    const Tensor x = Tensor::vector1d({1.0});
    const Tensor xa = Tensor::vector1d({1.0, 0.0});

    double prev = 0.0;
    bool reached = false;
    std::size_t reached_at = 0;
    for (std::size_t step = 1; step <= 100; ++step) {
        const bel::NodeOutputs nodes = bel::forward(x, 0.0, w);
        CHECK(nodes.sum_a >= prev); // monotone non-decreasing
        prev = nodes.sum_a;
        if (!reached && std::fabs(nodes.sum_a - 0.8) <= 1e-3) {
            reached = true;
            reached_at = step;
        }
        const bel::WeightDeltas d = bel::update(xa, x, nodes.a, nodes.o, 0.8, cfg);
        for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] += d.d_v[i];
    }
    CHECK(reached);
    CHECK(reached_at <= 100);

    // once sum(A) >= Re, every subsequent dV is bitwise zero
    w.v[0] = 0.85;
    for (int step = 0; step < 10; ++step) {
        const bel::NodeOutputs nodes = bel::forward(x, 0.0, w);
        const bel::WeightDeltas d = bel::update(xa, x, nodes.a, nodes.o, 0.8, cfg);
        for (double v : d.d_v.values()) CHECK(v == 0.0);
        CHECK(bel::forward(x, 0.0, w).sum_a == 0.85);
    }
}

TEST_CASE("sum A never decreases under updates when inputs are non-negative and U is frozen") {
    SplitRng rng(314);
    for (int trial = 0; trial < 10; ++trial) {
        bel::BelWeights w = bel::init(3, 1, 400 + static_cast<std::uint64_t>(trial));
        w.gamma = 0.0;
        bel::BelConfig cfg;

        std::vector<Tensor> inputs;
        std::vector<Tensor> xas;
        std::vector<double> rewards;
        for (int s = 0; s < 6; ++s) {
            inputs.push_back(random_tensor(rng, {3}, 0.0, 1.0));
            Tensor xa({4});
            for (std::size_t i = 0; i < 3; ++i) xa[i] = inputs.back()[i];
            xa[3] = rng.uniform(); // non-negative thalamic term
            xas.push_back(xa);
            rewards.push_back(rng.uniform());
        }
        std::vector<double> prev(6, 0.0);
        for (int step = 0; step < 50; ++step) {
            const std::size_t s = step % 6;
            const bel::NodeOutputs nodes = bel::forward(inputs[s], xas[s][3], w);
            const bel::WeightDeltas d = bel::update(xas[s], inputs[s], nodes.a, nodes.o,
                                                    rewards[s], cfg);
            for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] += d.d_v[i];
            // every sample's excitatory sum is non-decreasing, not just the
            // one that was updated
            for (std::size_t q = 0; q < 6; ++q) {
                const double sum_a = bel::forward(inputs[q], xas[q][3], w).sum_a;
                CHECK(sum_a >= prev[q] - 1e-15);
                prev[q] = sum_a;
            }
        }
    }
}

TEST_CASE("zero reward with zero-initialized V stays exactly zero") {
    SplitRng rng(16);
    std::vector<Tensor> seq;
    for (int i = 0; i < 12; ++i) seq.push_back(random_tensor(rng, {3}, 0.0, 1.0));
    const auto windows = bel::build_windows(seq, 4);
    const std::vector<double> targets(windows.size(), 0.0);

    bel::BelWeights w = bel::init(3, 4, 17);
    bel::BelConfig cfg;
    cfg.seed = 18;
    const bel::TrainResult result = bel::train(windows, targets, w, cfg);
    for (double v : w.v.values()) CHECK(v == 0.0);
    CHECK(result.converged);
}

TEST_CASE("bel train is deterministic and its trace stays finite") {
    SplitRng rng(19);
    std::vector<Tensor> seq;
    std::vector<double> epps;
    for (int i = 0; i < 40; ++i) {
        seq.push_back(random_tensor(rng, {4}, 0.0, 1.0));
        epps.push_back(rng.uniform());
    }
    const auto windows = bel::build_windows(seq, 4);
    const std::vector<double> targets(epps.begin() + 3, epps.end());

    const auto run = [&]() {
        bel::BelWeights w = bel::init(4, 4, 20);
        bel::BelConfig cfg;
        cfg.seed = 21;
        const bel::TrainResult r = bel::train(windows, targets, w, cfg);
        return std::make_pair(w, r);
    };
    const auto [w1, r1] = run();
    const auto [w2, r2] = run();
    CHECK(r1.epochs_run == r2.epochs_run);
    for (std::size_t i = 0; i < w1.v.size(); ++i) CHECK(w1.v[i] == w2.v[i]);
    for (std::size_t i = 0; i < w1.u.size(); ++i) CHECK(w1.u[i] == w2.u[i]);
    for (const bel::EpochStats& s : r1.trace) {
        CHECK(std::isfinite(s.mean_sum_a));
        CHECK(std::isfinite(s.mean_sum_o));
        CHECK(std::isfinite(s.mean_e));
    }
}

TEST_CASE("output-error inhibition tracks the reward where the printed rule diverges") {
    // Fixed inputs, constant reward: E should settle near Re under the
    // output_error rule; the node_difference rule blows through the guard.
    std::vector<Tensor> seq = constant_sequence(30, 4, 0.9);
    const auto windows = bel::build_windows(seq, 1);
    const std::vector<double> targets(windows.size(), 0.6);

    bel::BelConfig stable;
    stable.seed = 22;
    stable.thalamic_amplitude = 0.0;
    bel::BelWeights w = bel::init(4, 1, 23);
    const bel::TrainResult result = bel::train(windows, targets, w, stable);
    CHECK(std::fabs(result.trace.back().mean_e - 0.6) < 0.05);

    bel::BelConfig printed = stable;
    printed.inhibition_rule = bel::InhibitionRule::node_difference;
    printed.tolerance = 0.0; // never halt on V so the U feedback loop runs free
    bel::BelWeights w2 = bel::init(4, 1, 23);
    CHECK_THROWS_AS(bel::train(windows, targets, w2, printed), DivergenceError);
}

TEST_CASE("normalize_output endpoints, clamping, and the degenerate guard") {
    CHECK(bel::normalize_output(0.1, 0.1, 0.9) == 0.0);
    CHECK(bel::normalize_output(0.9, 0.1, 0.9) == 1.0);
    CHECK(bel::normalize_output(0.55, 0.1, 0.9) == doctest::Approx(0.5625));
    CHECK(bel::normalize_output(-3.0, 0.1, 0.9) == 0.0);
    CHECK(bel::normalize_output(7.0, 0.1, 0.9) == 1.0);
    CHECK(bel::normalize_output(0.4, 0.4, 0.4) == 0.5);
    CHECK_THROWS_AS(bel::normalize_output(0.5, 0.9, 0.1), ContractViolation);
}

TEST_CASE("heatmap csv covers V, U, gamma, and R exhaustively") {
    const bel::BelWeights w = bel::init(3, 4, 24);
    const std::string csv = bel::heatmap_csv(w);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "matrix,row,col,value");
    std::size_t v_rows = 0, u_rows = 0, gamma_rows = 0, r_rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("V,", 0) == 0) ++v_rows;
        if (line.rfind("U,", 0) == 0) ++u_rows;
        if (line.rfind("gamma,", 0) == 0) ++gamma_rows;
        if (line.rfind("R,", 0) == 0) ++r_rows;
    }
    CHECK(v_rows == 4);
    CHECK(u_rows == 3);
    CHECK(gamma_rows == 1);
    CHECK(r_rows == 3 * 6);
}
