#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "avfbel/auditory.hpp"
#include "avfbel/bel.hpp"
#include "avfbel/dataset.hpp"
#include "avfbel/errors.hpp"
#include "avfbel/fusion.hpp"
#include "avfbel/visual.hpp"

// Run configuration: a flat key-value file mirroring every module knob, plus
// parsing/serialization. The master seed deterministically derives every
// module seed.
namespace avfbel::pipeline {

enum class Variant { bel_m, bel_a, m_bel, a_bel, avf_bel };

inline constexpr std::array<Variant, 5> kAllVariants{Variant::bel_m, Variant::bel_a,
                                                     Variant::m_bel, Variant::a_bel,
                                                     Variant::avf_bel};

inline const char* display_name(Variant v) {
    switch (v) {
        case Variant::bel_m: return "BEL-m";
        case Variant::bel_a: return "BEL-a";
        case Variant::m_bel: return "M-BEL";
        case Variant::a_bel: return "A-BEL";
        default: return "AVF-BEL";
    }
}

// Short tag used in file names.
inline const char* slug(Variant v) {
    switch (v) {
        case Variant::bel_m: return "bel_m";
        case Variant::bel_a: return "bel_a";
        case Variant::m_bel: return "m_bel";
        case Variant::a_bel: return "a_bel";
        default: return "avf";
    }
}

inline Variant variant_from_string(std::string_view name) {
    std::string lowered(name);
    for (char& c : lowered) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c == '_') c = '-';
    }
    if (lowered == "bel-m") return Variant::bel_m;
    if (lowered == "bel-a") return Variant::bel_a;
    if (lowered == "m-bel") return Variant::m_bel;
    if (lowered == "a-bel") return Variant::a_bel;
    if (lowered == "avf-bel" || lowered == "avf") return Variant::avf_bel;
    throw ValidationError("unknown variant '" + std::string(name) +
                          "' (expected bel-m, bel-a, m-bel, a-bel, or avf-bel)");
}

struct RunConfig {
    std::uint64_t master_seed = 7;
    std::string output_dir;  // empty: no artifacts written
    std::string data_dir;    // empty: synthetic dataset
    std::size_t synthetic_n = 760;
    double noise_amplitude = 0.05;
    double train_fraction = 0.8;
    double animation_mix = 0.5;
    bool normalize_targets = false;
    double binarize_threshold = 0.5;
    bool emit_svg = true;
    std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};

    visual::VisualConfig visual_cfg;
    fusion::FusionConfig fusion_cfg;
    fusion::TrainConfig fusion_train;
    bel::BelConfig bel_cfg;
    std::size_t bel_window = 4;
    double bel_gamma = 1.0;
    auditory::CurrentMapConfig current_map;
    auditory::SimConfig sim_cfg;
    double rate_cap_hz = 100.0;
};

namespace kv {

inline std::map<std::string, std::string> parse(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = data::detail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key = value, got '" + trimmed + "'");
        const std::string key = data::detail::trim(std::string_view(trimmed).substr(0, eq));
        const std::string value = data::detail::trim(std::string_view(trimmed).substr(eq + 1));
        if (key.empty())
            throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

inline double to_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': not a number: '" + value + "'");
    }
}

inline std::uint64_t to_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': not an integer: '" + value + "'");
    }
}

inline bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ValidationError("config key '" + key + "': not a boolean: '" + value + "'");
}

} // namespace kv

inline std::vector<Variant> parse_variant_list(const std::string& value) {
    if (value == "all") return {kAllVariants.begin(), kAllVariants.end()};
    std::vector<Variant> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string name = data::detail::trim(item);
        if (!name.empty()) out.push_back(variant_from_string(name));
    }
    if (out.empty()) throw ValidationError("config: empty variant list");
    return out;
}

// Applies flat key-value settings over the defaults. Unknown keys are errors.
inline RunConfig config_from_kv(const std::map<std::string, std::string>& settings) {
    RunConfig cfg;
    for (const auto& [key, value] : settings) {
        if (key == "seed") cfg.master_seed = kv::to_u64(value, key);
        else if (key == "out") cfg.output_dir = value;
        else if (key == "data") cfg.data_dir = value == "synthetic" ? "" : value;
        else if (key == "n") cfg.synthetic_n = kv::to_u64(value, key);
        else if (key == "noise") cfg.noise_amplitude = kv::to_double(value, key);
        else if (key == "train_fraction") cfg.train_fraction = kv::to_double(value, key);
        else if (key == "mix") cfg.animation_mix = kv::to_double(value, key);
        else if (key == "normalize_targets") cfg.normalize_targets = kv::to_bool(value, key);
        else if (key == "threshold") cfg.binarize_threshold = kv::to_double(value, key);
        else if (key == "emit_svg") cfg.emit_svg = kv::to_bool(value, key);
        else if (key == "variants") cfg.variants = parse_variant_list(value);
        else if (key == "visual.plane_size") cfg.visual_cfg.plane_size = kv::to_u64(value, key);
        else if (key == "visual.output_dim") cfg.visual_cfg.output_dim = kv::to_u64(value, key);
        else if (key == "fusion.hidden_dim") cfg.fusion_cfg.hidden_dim = kv::to_u64(value, key);
        else if (key == "fusion.fused_dim") cfg.fusion_cfg.fused_dim = kv::to_u64(value, key);
        else if (key == "fusion.epochs") cfg.fusion_train.epochs = kv::to_u64(value, key);
        else if (key == "fusion.batch_size") cfg.fusion_train.batch_size = kv::to_u64(value, key);
        else if (key == "fusion.learning_rate")
            cfg.fusion_train.learning_rate = kv::to_double(value, key);
        else if (key == "fusion.weight_decay")
            cfg.fusion_train.weight_decay = kv::to_double(value, key);
        else if (key == "fusion.dropout") cfg.fusion_train.dropout = kv::to_double(value, key);
        else if (key == "fusion.log_interval")
            cfg.fusion_train.log_interval = kv::to_u64(value, key);
        else if (key == "bel.alpha") cfg.bel_cfg.alpha = kv::to_double(value, key);
        else if (key == "bel.beta") cfg.bel_cfg.beta = kv::to_double(value, key);
        else if (key == "bel.gamma") cfg.bel_gamma = kv::to_double(value, key);
        else if (key == "bel.window") cfg.bel_window = kv::to_u64(value, key);
        else if (key == "bel.epochs") cfg.bel_cfg.epoch_cap = kv::to_u64(value, key);
        else if (key == "bel.tolerance") cfg.bel_cfg.tolerance = kv::to_double(value, key);
        else if (key == "bel.thalamic_amplitude")
            cfg.bel_cfg.thalamic_amplitude = kv::to_double(value, key);
        else if (key == "bel.inhibition_rule") {
            if (value == "output_error")
                cfg.bel_cfg.inhibition_rule = bel::InhibitionRule::output_error;
            else if (value == "node_difference")
                cfg.bel_cfg.inhibition_rule = bel::InhibitionRule::node_difference;
            else
                throw ValidationError("config key 'bel.inhibition_rule': unknown rule '" + value +
                                      "'");
        } else if (key == "auditory.duration_ms")
            cfg.sim_cfg.duration_ms = kv::to_double(value, key);
        else if (key == "auditory.dt_ms") cfg.sim_cfg.dt_ms = kv::to_double(value, key);
        else if (key == "auditory.jitter")
            cfg.sim_cfg.jitter_amplitude_v = kv::to_double(value, key);
        else if (key == "auditory.rate_cap_hz") cfg.rate_cap_hz = kv::to_double(value, key);
        else
            throw ValidationError("config: unknown key '" + key + "'");
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    return config_from_kv(kv::parse(text));
}

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// Canonical snapshot of the effective configuration; parses back to an
// equivalent RunConfig.
inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "seed = " << cfg.master_seed << '\n';
    out << "data = " << (cfg.data_dir.empty() ? "synthetic" : cfg.data_dir) << '\n';
    out << "n = " << cfg.synthetic_n << '\n';
    out << "noise = " << detail::format_double(cfg.noise_amplitude) << '\n';
    out << "train_fraction = " << detail::format_double(cfg.train_fraction) << '\n';
    out << "mix = " << detail::format_double(cfg.animation_mix) << '\n';
    out << "normalize_targets = " << (cfg.normalize_targets ? "true" : "false") << '\n';
    out << "threshold = " << detail::format_double(cfg.binarize_threshold) << '\n';
    out << "emit_svg = " << (cfg.emit_svg ? "true" : "false") << '\n';
    out << "variants = ";
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
        std::string name = display_name(cfg.variants[i]);
        for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out << (i ? "," : "") << name;
    }
    out << '\n';
    out << "visual.plane_size = " << cfg.visual_cfg.plane_size << '\n';
    out << "visual.output_dim = " << cfg.visual_cfg.output_dim << '\n';
    out << "fusion.hidden_dim = " << cfg.fusion_cfg.hidden_dim << '\n';
    out << "fusion.fused_dim = " << cfg.fusion_cfg.fused_dim << '\n';
    out << "fusion.epochs = " << cfg.fusion_train.epochs << '\n';
    out << "fusion.batch_size = " << cfg.fusion_train.batch_size << '\n';
    out << "fusion.learning_rate = " << detail::format_double(cfg.fusion_train.learning_rate)
        << '\n';
    out << "fusion.weight_decay = " << detail::format_double(cfg.fusion_train.weight_decay)
        << '\n';
    out << "fusion.dropout = " << detail::format_double(cfg.fusion_train.dropout) << '\n';
    out << "fusion.log_interval = " << cfg.fusion_train.log_interval << '\n';
    out << "bel.alpha = " << detail::format_double(cfg.bel_cfg.alpha) << '\n';
    out << "bel.beta = " << detail::format_double(cfg.bel_cfg.beta) << '\n';
    out << "bel.gamma = " << detail::format_double(cfg.bel_gamma) << '\n';
    out << "bel.window = " << cfg.bel_window << '\n';
    out << "bel.epochs = " << cfg.bel_cfg.epoch_cap << '\n';
    out << "bel.tolerance = " << detail::format_double(cfg.bel_cfg.tolerance) << '\n';
    out << "bel.thalamic_amplitude = " << detail::format_double(cfg.bel_cfg.thalamic_amplitude)
        << '\n';
    out << "bel.inhibition_rule = "
        << (cfg.bel_cfg.inhibition_rule == bel::InhibitionRule::output_error ? "output_error"
                                                                             : "node_difference")
        << '\n';
    out << "auditory.duration_ms = " << detail::format_double(cfg.sim_cfg.duration_ms) << '\n';
    out << "auditory.dt_ms = " << detail::format_double(cfg.sim_cfg.dt_ms) << '\n';
    out << "auditory.jitter = " << detail::format_double(cfg.sim_cfg.jitter_amplitude_v) << '\n';
    out << "auditory.rate_cap_hz = " << detail::format_double(cfg.rate_cap_hz) << '\n';
    return out.str();
}

} // namespace avfbel::pipeline
