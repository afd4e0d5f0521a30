#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/rng.hpp"

// Simplified primary-auditory-cortex simulator: three leaky integrate-and-fire
// populations (excitatory pyramidal plus PV and SOM inhibitory) driven by
// constant currents derived from the five acoustic features.
namespace avfbel::auditory {

enum class Population : std::size_t { PYR = 0, PV = 1, SOM = 2 };

inline const char* to_string(Population p) {
    switch (p) {
        case Population::PYR: return "PYR";
        case Population::PV: return "PV";
        default: return "SOM";
    }
}

struct PopulationSpec {
    Population name = Population::PYR;
    std::size_t size = 400;
    double tau_ms = 10.0;
    double threshold_v = 0.5;
    double reset_v = 0.0;
    double baseline_current_v = 0.6;
};

inline std::array<PopulationSpec, 3> default_populations() {
    return {PopulationSpec{Population::PYR, 400, 10.0, 0.5, 0.0, 0.60},
            PopulationSpec{Population::PV, 200, 10.0, 0.5, 0.0, 0.60},
            PopulationSpec{Population::SOM, 200, 10.0, 0.5, 0.0, 0.65}};
}

// Per-population feature weightings for the current maps. Centered so that
// features of 0.5 everywhere reproduce the baseline currents exactly.
struct CurrentMapConfig {
    std::array<double, 5> pyr_weights{0.3, 0.1, 0.3, 0.2, 0.1};
    std::array<double, 5> pv_weights{0.2, 0.2, 0.2, 0.2, 0.2};
    std::array<double, 5> som_weights{0.1, 0.3, 0.1, 0.2, 0.3};
    double gain = 0.2;
};

// I_pop = baseline_pop + gain * (w . features - 0.5 * sum(w)).
inline std::array<double, 3> map_currents(const std::array<double, 5>& features,
                                          const std::array<PopulationSpec, 3>& populations =
                                              default_populations(),
                                          const CurrentMapConfig& cfg = {}) {
    for (double f : features)
        if (!(f >= 0.0 && f <= 1.0))
            throw ContractViolation("map_currents: features must lie in [0,1]");
    const std::array<const std::array<double, 5>*, 3> weights{&cfg.pyr_weights, &cfg.pv_weights,
                                                              &cfg.som_weights};
    std::array<double, 3> currents{};
    for (std::size_t p = 0; p < 3; ++p) {
        double dot = 0.0, total = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            dot += (*weights[p])[i] * features[i];
            total += (*weights[p])[i];
        }
        currents[p] = populations[p].baseline_current_v + cfg.gain * (dot - 0.5 * total);
    }
    return currents;
}

struct SimConfig {
    double duration_ms = 1000.0;
    double dt_ms = 0.1;
    double jitter_amplitude_v = 0.01; // uniform per-neuron current offset in +-amplitude
    bool record_times = true;         // keep per-neuron spike times (raster export)
    int trace_population = -1;        // if >= 0, record neuron 0's membrane trace
};

struct SpikeRecord {
    struct PopulationRecord {
        Population name = Population::PYR;
        std::size_t size = 0;
        std::vector<std::size_t> counts;              // spikes per neuron
        std::vector<std::vector<double>> spike_times; // per neuron, sorted; empty if not recorded
        std::size_t total_count = 0;
    };
    std::array<PopulationRecord, 3> populations;
    double duration_ms = 0.0;
    double dt_ms = 0.0;
    std::vector<double> membrane_trace; // neuron 0 of the traced population, one value per step
};

// Exact-exponential integration of dv/dt = (I - v) / tau with threshold/reset:
// v <- I + (v - I) * exp(-dt/tau); spike when v > threshold, then v = reset.
inline SpikeRecord simulate(const std::array<double, 3>& currents,
                            std::uint64_t seed,
                            const std::array<PopulationSpec, 3>& populations =
                                default_populations(),
                            const SimConfig& cfg = {}) {
    if (cfg.duration_ms <= 0.0 || cfg.dt_ms <= 0.0)
        throw ContractViolation("simulate: duration and dt must be positive");
    for (const PopulationSpec& spec : populations) {
        if (spec.tau_ms <= 0.0 || spec.size == 0 || spec.threshold_v <= spec.reset_v)
            throw ContractViolation("simulate: invalid population spec");
        if (cfg.dt_ms > spec.tau_ms / 10.0)
            throw ContractViolation("simulate: dt must be <= tau/10 (got dt " +
                                    std::to_string(cfg.dt_ms) + " ms for tau " +
                                    std::to_string(spec.tau_ms) + " ms)");
    }
    for (double c : currents)
        if (!std::isfinite(c)) throw NumericDomainError("simulate: non-finite input current");

    const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.duration_ms / cfg.dt_ms));
    SpikeRecord record;
    record.duration_ms = cfg.duration_ms;
    record.dt_ms = cfg.dt_ms;
    SplitRng root(seed);

    for (std::size_t p = 0; p < 3; ++p) {
        const PopulationSpec& spec = populations[p];
        auto& rec = record.populations[p];
        rec.name = spec.name;
        rec.size = spec.size;
        rec.counts.assign(spec.size, 0);
        if (cfg.record_times) rec.spike_times.assign(spec.size, {});

        std::vector<double> input(spec.size, currents[p]);
        if (cfg.jitter_amplitude_v != 0.0) {
            SplitRng jitter = root.split(static_cast<std::uint64_t>(p));
            for (double& I : input)
                I += jitter.uniform(-cfg.jitter_amplitude_v, cfg.jitter_amplitude_v);
        }

        const double decay = std::exp(-cfg.dt_ms / spec.tau_ms);
        const bool trace = cfg.trace_population == static_cast<int>(p);
        if (trace) record.membrane_trace.reserve(steps);
        std::vector<double> v(spec.size, 0.0);
        for (std::size_t k = 1; k <= steps; ++k) {
            const double t_ms = static_cast<double>(k) * cfg.dt_ms;
            for (std::size_t i = 0; i < spec.size; ++i) {
                double vi = input[i] + (v[i] - input[i]) * decay;
                if (vi > spec.threshold_v) {
                    ++rec.counts[i];
                    if (cfg.record_times) rec.spike_times[i].push_back(t_ms);
                    vi = spec.reset_v;
                }
                v[i] = vi;
            }
            if (trace) record.membrane_trace.push_back(v[0]);
        }
        for (std::size_t c : rec.counts) rec.total_count += c;
    }
    return record;
}

// X_m: population-mean firing rates (spikes/neuron/second) normalized by the
// rate cap and clamped to [0,1].
inline std::array<double, 3> extract_features(const SpikeRecord& record, double rate_cap_hz = 100.0) {
    if (rate_cap_hz <= 0.0) throw ContractViolation("extract_features: rate cap must be positive");
    std::array<double, 3> features{};
    const double seconds = record.duration_ms / 1000.0;
    for (std::size_t p = 0; p < 3; ++p) {
        const auto& rec = record.populations[p];
        const double rate = static_cast<double>(rec.total_count) /
                            (static_cast<double>(rec.size) * seconds);
        features[p] = std::min(1.0, std::max(0.0, rate / rate_cap_hz));
    }
    return features;
}

// Raster export: population,neuron_index,spike_time_ms.
inline std::string raster_csv(const SpikeRecord& record) {
    std::ostringstream out;
    out << "population,neuron_index,spike_time_ms\n";
    for (const auto& rec : record.populations)
        for (std::size_t i = 0; i < rec.spike_times.size(); ++i)
            for (double t : rec.spike_times[i]) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f", t);
                out << to_string(rec.name) << ',' << i << ',' << buf << '\n';
            }
    return out.str();
}

} // namespace avfbel::auditory
