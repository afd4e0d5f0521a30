#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "avfbel/errors.hpp"
#include "avfbel/rng.hpp"

// Stimulus ingestion and targets. A sample is five normalized generative
// parameters plus five human emotion ratings; the scalar learning target is
// the emotion positivity computed from the ratings.
namespace avfbel::data {

enum class Modality { animation, music };

inline const char* to_string(Modality m) {
    return m == Modality::animation ? "animation" : "music";
}

inline Modality modality_from_string(std::string_view s) {
    if (s == "animation") return Modality::animation;
    if (s == "music") return Modality::music;
    throw ValidationError("unknown modality '" + std::string(s) + "'");
}

// Positivity levels of (fear, sadness, anger, calmness, happiness), ordered
// from the negative to the positive pole with equal spacing.
inline constexpr std::array<double, 5> kPositivityLevels{0.0, 0.25, 0.5, 0.75, 1.0};

inline constexpr std::array<const char*, 5> kEmotionNames{"fear", "sadness", "anger",
                                                          "calmness", "happiness"};

struct Sample {
    std::string id;
    Modality modality = Modality::animation;
    std::array<double, 5> features{};  // each in [0,1]; meaning depends on modality
    std::array<double, 5> ratings{};   // fear, sadness, anger, calmness, happiness
    double epp_target = 0.0;           // in [0,1]
};

// Rating-weighted mean of the positivity levels. Scale-invariant in the
// ratings; monotone up in happiness and down in fear.
inline double compute_epp(const std::array<double, 5>& ratings) {
    double weighted = 0.0, total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        if (ratings[i] < 0.0 || !std::isfinite(ratings[i]))
            throw ContractViolation("compute_epp: ratings must be finite and non-negative");
        weighted += ratings[i] * kPositivityLevels[i];
        total += ratings[i];
    }
    if (total <= 0.0) throw ContractViolation("compute_epp: ratings sum to zero");
    return weighted / total;
}

// Min-max normalization; a constant sequence maps to all 0.5.
inline std::vector<double> normalize_epp(const std::vector<double>& values) {
    if (values.empty()) throw ContractViolation("normalize_epp: empty input");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(values.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) * inv;
    return out;
}

inline constexpr const char* kSampleCsvHeader =
    "id,modality,f1,f2,f3,f4,f5,fear,sadness,anger,calmness,happiness";
inline constexpr const char* kPairCsvHeader = "pair_id,animation_id,music_id";

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

inline double parse_number(const std::string& cell, std::size_t line_no, const char* column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("row " + std::to_string(line_no) + ", column " + column +
                              ": not a number: '" + cell + "'");
    }
}

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Parses the sample CSV (header required). Row numbers in error messages are
// 1-based file line numbers; the header is line 1.
inline std::vector<Sample> parse_samples(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<Sample> samples;
    bool saw_header = false;
    static constexpr std::array<const char*, 12> kColumns{
        "id",   "modality", "f1",    "f2",       "f3",       "f4",
        "f5",   "fear",     "sadness", "anger",  "calmness", "happiness"};
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const std::vector<std::string> fields = detail::split_fields(trimmed);
        if (!saw_header) {
            if (trimmed != kSampleCsvHeader)
                throw ValidationError("row 1: expected header '" +
                                      std::string(kSampleCsvHeader) + "', got '" + trimmed + "'");
            saw_header = true;
            continue;
        }
        if (fields.size() != 12)
            throw ValidationError("row " + std::to_string(line_no) + ": expected 12 columns, got " +
                                  std::to_string(fields.size()));
        Sample s;
        s.id = fields[0];
        if (s.id.empty())
            throw ValidationError("row " + std::to_string(line_no) + ": empty id");
        try {
            s.modality = modality_from_string(fields[1]);
        } catch (const ValidationError& e) {
            throw ValidationError("row " + std::to_string(line_no) + ": " + e.what());
        }
        for (std::size_t i = 0; i < 5; ++i) {
            const double v = detail::parse_number(fields[2 + i], line_no, kColumns[2 + i]);
            if (v < 0.0 || v > 1.0 || !std::isfinite(v))
                throw ValidationError("row " + std::to_string(line_no) + ", column " +
                                      kColumns[2 + i] + ": feature " + fields[2 + i] +
                                      " outside [0,1]");
            s.features[i] = v;
        }
        double rating_sum = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            const double v = detail::parse_number(fields[7 + i], line_no, kColumns[7 + i]);
            if (v < 0.0 || !std::isfinite(v))
                throw ValidationError("row " + std::to_string(line_no) + ", column " +
                                      kColumns[7 + i] + ": rating must be non-negative");
            s.ratings[i] = v;
            rating_sum += v;
        }
        if (rating_sum <= 0.0)
            throw ValidationError("row " + std::to_string(line_no) + ": all-zero ratings");
        s.epp_target = compute_epp(s.ratings);
        samples.push_back(std::move(s));
    }
    if (!saw_header && line_no > 0)
        throw ValidationError("row 1: expected header '" + std::string(kSampleCsvHeader) + "'");
    return samples;
}

inline std::string serialize_samples(const std::vector<Sample>& samples) {
    std::ostringstream out;
    out << kSampleCsvHeader << '\n';
    for (const Sample& s : samples) {
        out << s.id << ',' << to_string(s.modality);
        for (double f : s.features) out << ',' << detail::format_value(f);
        for (double r : s.ratings) out << ',' << detail::format_value(r);
        out << '\n';
    }
    return out.str();
}

struct Pair {
    std::string pair_id;
    Sample animation;
    Sample music;
    double fused_epp = 0.0; // animation_mix * anim + (1 - animation_mix) * music
};

struct PairedDataset {
    std::vector<Pair> pairs;
    std::uint64_t seed = 0;
    std::string source;          // file path or "synthetic"
    double animation_mix = 0.5;  // proportion of the animation target in the fused target

    std::size_t size() const { return pairs.size(); }
};

struct PairRow {
    std::string pair_id;
    std::string animation_id;
    std::string music_id;
};

inline std::vector<PairRow> parse_pairs(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::vector<PairRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (!saw_header) {
            if (trimmed != kPairCsvHeader)
                throw ValidationError("row 1: expected header '" + std::string(kPairCsvHeader) +
                                      "', got '" + trimmed + "'");
            saw_header = true;
            continue;
        }
        const std::vector<std::string> fields = detail::split_fields(trimmed);
        if (fields.size() != 3)
            throw ValidationError("row " + std::to_string(line_no) + ": expected 3 columns, got " +
                                  std::to_string(fields.size()));
        rows.push_back({fields[0], fields[1], fields[2]});
    }
    return rows;
}

inline std::string serialize_pairs(const PairedDataset& ds) {
    std::ostringstream out;
    out << kPairCsvHeader << '\n';
    for (const Pair& p : ds.pairs)
        out << p.pair_id << ',' << p.animation.id << ',' << p.music.id << '\n';
    return out.str();
}

// Resolves pairing rows against parsed animation/music samples.
inline PairedDataset build_paired(const std::vector<Sample>& animation,
                                  const std::vector<Sample>& music,
                                  const std::vector<PairRow>& rows, double animation_mix = 0.5,
                                  std::string source = "csv") {
    if (animation_mix < 0.0 || animation_mix > 1.0)
        throw ContractViolation("build_paired: animation_mix must be in [0,1]");
    std::map<std::string, const Sample*> anim_by_id, music_by_id;
    for (const Sample& s : animation) {
        if (s.modality != Modality::animation)
            throw ValidationError("animation set contains sample '" + s.id + "' with modality " +
                                  to_string(s.modality));
        if (!anim_by_id.emplace(s.id, &s).second)
            throw ValidationError("duplicate animation id '" + s.id + "'");
    }
    for (const Sample& s : music) {
        if (s.modality != Modality::music)
            throw ValidationError("music set contains sample '" + s.id + "' with modality " +
                                  to_string(s.modality));
        if (!music_by_id.emplace(s.id, &s).second)
            throw ValidationError("duplicate music id '" + s.id + "'");
    }
    PairedDataset ds;
    ds.animation_mix = animation_mix;
    ds.source = std::move(source);
    for (const PairRow& row : rows) {
        const auto a = anim_by_id.find(row.animation_id);
        if (a == anim_by_id.end())
            throw ValidationError("pair '" + row.pair_id + "': unknown animation id '" +
                                  row.animation_id + "'");
        const auto m = music_by_id.find(row.music_id);
        if (m == music_by_id.end())
            throw ValidationError("pair '" + row.pair_id + "': unknown music id '" +
                                  row.music_id + "'");
        Pair p;
        p.pair_id = row.pair_id;
        p.animation = *a->second;
        p.music = *m->second;
        p.fused_epp = animation_mix * p.animation.epp_target +
                      (1.0 - animation_mix) * p.music.epp_target;
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

namespace detail {

// Ground-truth positivity for synthetic stimuli, squashed by a logistic.
// Animation blends a centered affine projection with pairwise feature
// interactions, so its affect is recoverable but rewards an encoder adapted
// to the stimulus structure. Music is a steep logistic of a single projection
// aligned with the excitatory current weighting: wide-spread, near-bimodal
// targets whose shape a linear readout of the population rates cannot follow.
inline constexpr std::array<double, 5> kAnimationSignal{0.30, 0.25, 0.20, 0.15, 0.10};
inline constexpr std::array<double, 5> kMusicSignal{0.30, 0.10, 0.30, 0.20, 0.10};
inline constexpr double kAnimationGain = 4.0;
inline constexpr double kAnimationInteraction = 1.0;
inline constexpr double kMusicGain = 12.0;

inline double ground_truth_epp(const std::array<double, 5>& features, Modality modality) {
    const auto& w = modality == Modality::animation ? kAnimationSignal : kMusicSignal;
    const double gain = modality == Modality::animation ? kAnimationGain : kMusicGain;
    double proj = 0.0, center = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        proj += w[i] * features[i];
        center += 0.5 * w[i];
    }
    if (modality == Modality::animation)
        proj += kAnimationInteraction * ((features[0] - 0.5) * (features[2] - 0.5) +
                                         (features[1] - 0.5) * (features[3] - 0.5));
    const double raw = 1.0 / (1.0 + std::exp(-gain * (proj - center)));
    // Quantize onto a dyadic grid between adjacent positivity levels so that
    // compute_epp over the interpolated ratings reproduces this value exactly.
    const std::size_t level = std::min<std::size_t>(3, static_cast<std::size_t>(raw * 4.0));
    const double lambda =
        std::round((raw - kPositivityLevels[level]) * 4.0 * 1048576.0) / 1048576.0;
    return kPositivityLevels[level] + 0.25 * lambda;
}

// Ratings that place the sample's positivity between the two adjacent emotion
// levels by linear interpolation; all other emotions score zero.
inline std::array<double, 5> ratings_for_epp(double epp) {
    const std::size_t level = std::min<std::size_t>(3, static_cast<std::size_t>(epp * 4.0));
    const double lambda = (epp - kPositivityLevels[level]) * 4.0;
    std::array<double, 5> ratings{};
    ratings[level] = 1.0 - lambda;
    ratings[level + 1] = lambda;
    if (ratings[level] == 0.0 && ratings[level + 1] == 0.0) ratings[level] = 1.0;
    return ratings;
}

} // namespace detail

// Seeded synthetic dataset: features uniform in [0,1]; ratings derived from
// the fixed ground-truth map plus additive uniform noise of the given
// amplitude. Pairs are matched by index.
inline PairedDataset generate_synthetic(std::size_t n_per_modality, std::uint64_t seed,
                                        double noise_amplitude = 0.05,
                                        double animation_mix = 0.5) {
    if (n_per_modality == 0)
        throw ContractViolation("generate_synthetic: need at least one sample per modality");
    if (noise_amplitude < 0.0)
        throw ContractViolation("generate_synthetic: noise amplitude must be >= 0");
    SplitRng root(seed);
    PairedDataset ds;
    ds.seed = seed;
    ds.source = "synthetic";
    ds.animation_mix = animation_mix;
    ds.pairs.reserve(n_per_modality);

    const auto make_sample = [&](Modality modality, std::size_t index, SplitRng& rng) {
        Sample s;
        s.modality = modality;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s_%05zu", to_string(modality), index + 1);
        s.id = buf;
        for (double& f : s.features) f = rng.uniform();
        const double clean_epp = detail::ground_truth_epp(s.features, modality);
        s.ratings = detail::ratings_for_epp(clean_epp);
        for (double& r : s.ratings) r += noise_amplitude * rng.uniform();
        s.epp_target = compute_epp(s.ratings);
        return s;
    };

    SplitRng anim_rng = root.split("animation");
    SplitRng music_rng = root.split("music");
    for (std::size_t i = 0; i < n_per_modality; ++i) {
        Pair p;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "pair_%05zu", i + 1);
        p.pair_id = buf;
        p.animation = make_sample(Modality::animation, i, anim_rng);
        p.music = make_sample(Modality::music, i, music_rng);
        p.fused_epp = animation_mix * p.animation.epp_target +
                      (1.0 - animation_mix) * p.music.epp_target;
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

// Seeded shuffle split preserving pair integrity. Train takes
// floor(fraction * n) pairs of the shuffled order.
inline std::pair<PairedDataset, PairedDataset> split(const PairedDataset& ds,
                                                     double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ContractViolation("split: train fraction must be in (0,1)");
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SplitRng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ds.size()) + 1e-9));
    PairedDataset train, test;
    train.seed = test.seed = ds.seed;
    train.source = test.source = ds.source;
    train.animation_mix = test.animation_mix = ds.animation_mix;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? train : test).pairs.push_back(ds.pairs[order[i]]);
    return {std::move(train), std::move(test)};
}

} // namespace avfbel::data
