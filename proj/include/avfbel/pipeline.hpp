#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avfbel/auditory.hpp"
#include "avfbel/bel.hpp"
#include "avfbel/checkpoint.hpp"
#include "avfbel/config.hpp"
#include "avfbel/dataset.hpp"
#include "avfbel/errors.hpp"
#include "avfbel/fusion.hpp"
#include "avfbel/metrics.hpp"
#include "avfbel/svg.hpp"
#include "avfbel/visual.hpp"

// End-to-end orchestration of the five ablation variants:
//   BEL-m / BEL-a: raw five-feature stimuli straight into the BEL head.
//   M-BEL:         spiking auditory encoder -> BEL.
//   A-BEL:         visual encoder (frozen random init) -> BEL.
//   AVF-BEL:       both encoders -> trained fusion -> BEL.
// All randomness is derived from the master seed, so a config fixes every
// artifact byte-exactly.
namespace avfbel::pipeline {

inline std::uint64_t derive_seed(std::uint64_t master, const std::string& label) {
    SplitRng rng = SplitRng(master).split(label);
    return rng.next_u64();
}

inline std::uint64_t variant_seed(const RunConfig& cfg, Variant v, const std::string& purpose) {
    return derive_seed(cfg.master_seed, std::string(slug(v)) + "." + purpose);
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

} // namespace detail

// Synthetic generation or CSV ingestion (animation.csv, music.csv, pairs.csv
// in data_dir), plus the optional dataset-level target normalization.
inline data::PairedDataset load_dataset(const RunConfig& cfg) {
    data::PairedDataset ds;
    if (cfg.data_dir.empty()) {
        ds = data::generate_synthetic(cfg.synthetic_n, derive_seed(cfg.master_seed, "dataset"),
                                      cfg.noise_amplitude, cfg.animation_mix);
    } else {
        const std::filesystem::path dir(cfg.data_dir);
        const std::vector<data::Sample> animation =
            data::parse_samples(detail::read_file(dir / "animation.csv"));
        const std::vector<data::Sample> music =
            data::parse_samples(detail::read_file(dir / "music.csv"));
        const std::vector<data::PairRow> rows =
            data::parse_pairs(detail::read_file(dir / "pairs.csv"));
        ds = data::build_paired(animation, music, rows, cfg.animation_mix, cfg.data_dir);
    }
    if (cfg.normalize_targets) {
        std::vector<double> anim_epp, music_epp;
        for (const auto& p : ds.pairs) {
            anim_epp.push_back(p.animation.epp_target);
            music_epp.push_back(p.music.epp_target);
        }
        const std::vector<double> anim_norm = data::normalize_epp(anim_epp);
        const std::vector<double> music_norm = data::normalize_epp(music_epp);
        for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
            ds.pairs[i].animation.epp_target = anim_norm[i];
            ds.pairs[i].music.epp_target = music_norm[i];
            ds.pairs[i].fused_epp = cfg.animation_mix * anim_norm[i] +
                                    (1.0 - cfg.animation_mix) * music_norm[i];
        }
    }
    return ds;
}

namespace detail {

inline Tensor features_tensor(const std::array<double, 5>& f) {
    return Tensor({5}, std::vector<double>(f.begin(), f.end()));
}

inline Tensor auditory_encode(const data::Sample& music, const RunConfig& cfg,
                              std::uint64_t stream_seed, bool record_times = false,
                              auditory::SpikeRecord* record_out = nullptr) {
    const auto currents =
        auditory::map_currents(music.features, auditory::default_populations(), cfg.current_map);
    auditory::SimConfig sim = cfg.sim_cfg;
    sim.record_times = record_times;
    const std::uint64_t sample_seed = SplitRng(stream_seed).split(music.id).next_u64();
    auditory::SpikeRecord record =
        auditory::simulate(currents, sample_seed, auditory::default_populations(), sim);
    const auto x = auditory::extract_features(record, cfg.rate_cap_hz);
    if (record_out) *record_out = std::move(record);
    return Tensor({3}, {x[0], x[1], x[2]});
}

// Batched visual encoding of animation features.
inline std::vector<Tensor> visual_encode(const std::vector<const data::Sample*>& samples,
                                         const visual::VisualWeights& vw) {
    std::vector<Tensor> out;
    out.reserve(samples.size());
    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        const std::size_t count = std::min(chunk, samples.size() - start);
        std::vector<std::array<double, 5>> feats(count);
        for (std::size_t i = 0; i < count; ++i) feats[i] = samples[start + i]->features;
        const Tensor batch =
            visual::forward_batch(visual::lift_batch(feats, vw.config.plane_size), vw);
        for (std::size_t i = 0; i < count; ++i) {
            Tensor row({vw.config.output_dim});
            for (std::size_t d = 0; d < row.size(); ++d) row[d] = batch.at2(i, d);
            out.push_back(std::move(row));
        }
    }
    return out;
}

} // namespace detail

// Everything a finished variant run carries: the report, training traces, and
// the weights for persistence.
struct VariantRun {
    Variant variant = Variant::avf_bel;
    metrics::EvalReport report;
    fusion::TrainResult fusion_result;
    bel::TrainResult bel_result;
    std::optional<visual::VisualWeights> visual_weights;
    std::optional<fusion::FusionWeights> fusion_weights;
    bel::BelWeights bel_weights;
    std::string raster_csv; // variants with an auditory stage
};

// Pre-trained weights for re-evaluation without training.
struct LoadedWeights {
    std::map<std::string, Tensor> tensors;
};

namespace detail {

inline visual::VisualWeights visual_from_ckpt(const std::map<std::string, Tensor>& t,
                                              const visual::VisualConfig& cfg) {
    visual::VisualWeights w;
    w.config = cfg;
    static constexpr std::array<const char*, 4> kAreas{"v1", "v2", "v4", "it"};
    for (std::size_t a = 0; a < 4; ++a) {
        w.kernels[a] = ckpt::require(t, std::string("visual.") + kAreas[a] + ".kernel");
        w.biases[a] = ckpt::require(t, std::string("visual.") + kAreas[a] + ".bias");
    }
    w.decoder_weight = ckpt::require(t, "visual.decoder.weight");
    w.decoder_bias = ckpt::require(t, "visual.decoder.bias");
    return w;
}

inline fusion::FusionWeights fusion_from_ckpt(const std::map<std::string, Tensor>& t,
                                              const fusion::FusionConfig& cfg) {
    fusion::FusionWeights w;
    w.config = cfg;
    w.w_music = ckpt::require(t, "fusion.music.weight");
    w.b_music = ckpt::require(t, "fusion.music.bias");
    w.w_video = ckpt::require(t, "fusion.video.weight");
    w.b_video = ckpt::require(t, "fusion.video.bias");
    w.w_attn_music = ckpt::require(t, "fusion.attn_music.weight");
    w.b_attn_music = ckpt::require(t, "fusion.attn_music.bias");
    w.w_attn_video = ckpt::require(t, "fusion.attn_video.weight");
    w.b_attn_video = ckpt::require(t, "fusion.attn_video.bias");
    w.w_out = ckpt::require(t, "fusion.out.weight");
    w.b_out = ckpt::require(t, "fusion.out.bias");
    w.w_head = ckpt::require(t, "fusion.head.weight");
    w.b_head = ckpt::require(t, "fusion.head.bias");
    return w;
}

inline bel::BelWeights bel_from_ckpt(const std::map<std::string, Tensor>& t, std::size_t window) {
    bel::BelWeights w;
    w.v = ckpt::require(t, "bel.v");
    w.u = ckpt::require(t, "bel.u");
    w.gamma = ckpt::require(t, "bel.gamma")[0];
    w.r = ckpt::require(t, "bel.r");
    w.input_dim = w.u.size();
    w.context_dim = w.r.dim(0);
    w.window = window;
    return w;
}

} // namespace detail

// Runs one variant's module chain on a prepared split. If `preloaded` is
// given, training is skipped and the stored weights are evaluated instead.
inline VariantRun execute_variant(Variant v, const RunConfig& cfg,
                                  const data::PairedDataset& train,
                                  const data::PairedDataset& test,
                                  const LoadedWeights* preloaded = nullptr) {
    if (train.pairs.empty() || test.pairs.empty())
        throw ContractViolation(std::string(display_name(v)) + ": empty train or test split");

    VariantRun run;
    run.variant = v;

    // Feature sequences, targets, and ids per split.
    std::vector<Tensor> train_seq, test_seq;
    std::vector<double> train_targets, test_targets;
    std::vector<std::string> test_ids;

    const auto collect_simple = [&](bool animation_modality) {
        const auto encode = [&](const data::PairedDataset& split, std::vector<Tensor>& seq,
                                std::vector<double>& targets, std::vector<std::string>* ids) {
            for (const data::Pair& p : split.pairs) {
                const data::Sample& s = animation_modality ? p.animation : p.music;
                seq.push_back(detail::features_tensor(s.features));
                targets.push_back(s.epp_target);
                if (ids) ids->push_back(s.id);
            }
        };
        encode(train, train_seq, train_targets, nullptr);
        encode(test, test_seq, test_targets, &test_ids);
    };

    try {
        switch (v) {
            case Variant::bel_m: collect_simple(false); break;
            case Variant::bel_a: collect_simple(true); break;
            case Variant::m_bel: {
                const std::uint64_t stream = variant_seed(cfg, v, "auditory");
                for (const data::Pair& p : train.pairs) {
                    train_seq.push_back(detail::auditory_encode(p.music, cfg, stream));
                    train_targets.push_back(p.music.epp_target);
                }
                for (const data::Pair& p : test.pairs) {
                    test_seq.push_back(detail::auditory_encode(p.music, cfg, stream));
                    test_targets.push_back(p.music.epp_target);
                    test_ids.push_back(p.music.id);
                }
                auditory::SpikeRecord raster_record;
                detail::auditory_encode(test.pairs.front().music, cfg, stream, true,
                                        &raster_record);
                run.raster_csv = auditory::raster_csv(raster_record);
                break;
            }
            case Variant::a_bel: {
                visual::VisualConfig vcfg = cfg.visual_cfg;
                vcfg.seed = variant_seed(cfg, v, "visual");
                visual::VisualWeights vw = preloaded
                                               ? detail::visual_from_ckpt(preloaded->tensors, vcfg)
                                               : visual::init(vcfg);
                std::vector<const data::Sample*> train_samples, test_samples;
                for (const data::Pair& p : train.pairs) train_samples.push_back(&p.animation);
                for (const data::Pair& p : test.pairs) test_samples.push_back(&p.animation);
                train_seq = detail::visual_encode(train_samples, vw);
                test_seq = detail::visual_encode(test_samples, vw);
                for (const data::Pair& p : train.pairs)
                    train_targets.push_back(p.animation.epp_target);
                for (const data::Pair& p : test.pairs) {
                    test_targets.push_back(p.animation.epp_target);
                    test_ids.push_back(p.animation.id);
                }
                run.visual_weights = std::move(vw);
                break;
            }
            case Variant::avf_bel: {
                visual::VisualConfig vcfg = cfg.visual_cfg;
                vcfg.seed = variant_seed(cfg, v, "visual");
                fusion::FusionConfig fcfg = cfg.fusion_cfg;
                fcfg.video_dim = vcfg.output_dim;
                fcfg.seed = variant_seed(cfg, v, "fusion");

                const std::uint64_t stream = variant_seed(cfg, v, "auditory");
                std::vector<Tensor> train_xm, test_xm;
                for (const data::Pair& p : train.pairs)
                    train_xm.push_back(detail::auditory_encode(p.music, cfg, stream));
                for (const data::Pair& p : test.pairs)
                    test_xm.push_back(detail::auditory_encode(p.music, cfg, stream));

                visual::VisualWeights vw;
                fusion::FusionWeights fw;
                if (preloaded) {
                    vw = detail::visual_from_ckpt(preloaded->tensors, vcfg);
                    fw = detail::fusion_from_ckpt(preloaded->tensors, fcfg);
                } else {
                    vw = visual::init(vcfg);
                    fw = fusion::init(fcfg);
                    std::vector<fusion::TrainExample> examples;
                    examples.reserve(train.pairs.size());
                    for (std::size_t i = 0; i < train.pairs.size(); ++i)
                        examples.push_back({train.pairs[i].animation.features, train_xm[i],
                                            train.pairs[i].fused_epp});
                    fusion::TrainConfig tcfg = cfg.fusion_train;
                    tcfg.seed = variant_seed(cfg, v, "fusion-train");
                    run.fusion_result = fusion::train(examples, vw, fw, tcfg);
                }

                std::vector<const data::Sample*> train_samples, test_samples;
                for (const data::Pair& p : train.pairs) train_samples.push_back(&p.animation);
                for (const data::Pair& p : test.pairs) test_samples.push_back(&p.animation);
                const std::vector<Tensor> train_xa = detail::visual_encode(train_samples, vw);
                const std::vector<Tensor> test_xa = detail::visual_encode(test_samples, vw);

                for (std::size_t i = 0; i < train.pairs.size(); ++i) {
                    train_seq.push_back(fusion::forward(train_xa[i], train_xm[i], fw).x_am);
                    train_targets.push_back(train.pairs[i].fused_epp);
                }
                for (std::size_t i = 0; i < test.pairs.size(); ++i) {
                    test_seq.push_back(fusion::forward(test_xa[i], test_xm[i], fw).x_am);
                    test_targets.push_back(test.pairs[i].fused_epp);
                    test_ids.push_back(test.pairs[i].pair_id);
                }
                auditory::SpikeRecord raster_record;
                detail::auditory_encode(test.pairs.front().music, cfg, stream, true,
                                        &raster_record);
                run.raster_csv = auditory::raster_csv(raster_record);
                run.visual_weights = std::move(vw);
                run.fusion_weights = std::move(fw);
                break;
            }
        }

        // BEL head over the sequences. Training windows cover the train
        // sequence; evaluation windows continue it into the test sequence so
        // every test sample gets one generated value.
        const std::size_t w = cfg.bel_window;
        if (train_seq.size() < w)
            throw ContractViolation("train split smaller than the BEL window");
        const std::size_t d = train_seq.front().size();

        // Encoder outputs arrive at very different scales (raw features vs
        // decoder activations); a single train-split statistic rescales the
        // sequence into the BEL's operating range so the learning rates and
        // the convergence tolerance keep their calibration.
        double mean_abs = 0.0;
        for (const Tensor& t : train_seq)
            for (double value : t.values()) mean_abs += std::fabs(value);
        mean_abs /= static_cast<double>(train_seq.size() * d);
        const double bel_input_scale =
            mean_abs > 0.0 ? std::min(50.0, std::max(1.0, 0.25 / mean_abs)) : 1.0;
        if (bel_input_scale != 1.0) {
            for (Tensor& t : train_seq)
                for (double& value : t.values()) value *= bel_input_scale;
            for (Tensor& t : test_seq)
                for (double& value : t.values()) value *= bel_input_scale;
        }

        bel::BelConfig bcfg = cfg.bel_cfg;
        bcfg.seed = variant_seed(cfg, v, "bel-train");
        bel::BelWeights bw = preloaded ? detail::bel_from_ckpt(preloaded->tensors, w)
                                       : bel::init(d, w, variant_seed(cfg, v, "bel"), cfg.bel_gamma);

        const auto train_windows = bel::build_windows(train_seq, w);
        const std::vector<double> window_targets(train_targets.begin() +
                                                     static_cast<std::ptrdiff_t>(w - 1),
                                                 train_targets.end());
        if (!preloaded) run.bel_result = bel::train(train_windows, window_targets, bw, bcfg);

        std::vector<Tensor> eval_seq(train_seq.end() - static_cast<std::ptrdiff_t>(w - 1),
                                     train_seq.end());
        eval_seq.insert(eval_seq.end(), test_seq.begin(), test_seq.end());
        const auto eval_windows = bel::build_windows(eval_seq, w);
        const std::vector<double> e_values = bel::evaluate(eval_windows, bw, bcfg);

        const auto [lo, hi] = std::minmax_element(test_targets.begin(), test_targets.end());
        const std::vector<double> generated = bel::normalize_output(e_values, *lo, *hi);

        std::vector<metrics::SampleComparison> samples;
        samples.reserve(test_targets.size());
        for (std::size_t i = 0; i < test_targets.size(); ++i)
            samples.push_back({test_ids[i], test_targets[i], generated[i]});
        run.report = metrics::make_report(display_name(v), std::move(samples),
                                          cfg.binarize_threshold);
        run.report.train_count = train.pairs.size();
        run.report.test_count = test.pairs.size();
        run.bel_weights = std::move(bw);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(display_name(v)) + ": " + e.what());
    }
    return run;
}

namespace detail {

inline std::string bel_trace_csv(const bel::TrainResult& result) {
    std::ostringstream out;
    out << "epoch,sum_a,sum_o,e,mean_abs_dv\n";
    for (const bel::EpochStats& s : result.trace) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g", s.epoch, s.mean_sum_a,
                      s.mean_sum_o, s.mean_e, s.mean_abs_dv);
        out << buf << '\n';
    }
    return out.str();
}

inline std::string loss_history_csv(const fusion::TrainResult& result) {
    std::ostringstream out;
    out << "epoch,mse\n";
    for (const auto& [epoch, mse] : result.loss_history) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g", epoch, mse);
        out << buf << '\n';
    }
    return out.str();
}

inline std::string checkpoint_text(VariantRun& run) {
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    if (run.visual_weights)
        for (auto& [name, t] : visual::named_params(*run.visual_weights))
            tensors.emplace_back(name, t);
    if (run.fusion_weights)
        for (auto& [name, t] : fusion::named_params(*run.fusion_weights))
            tensors.emplace_back(name, t);
    Tensor gamma_holder({1});
    gamma_holder[0] = run.bel_weights.gamma;
    tensors.emplace_back("bel.v", &run.bel_weights.v);
    tensors.emplace_back("bel.u", &run.bel_weights.u);
    tensors.emplace_back("bel.gamma", &gamma_holder);
    tensors.emplace_back("bel.r", &run.bel_weights.r);
    return ckpt::serialize(tensors);
}

inline void write_svgs(const VariantRun& run, const std::filesystem::path& dir) {
    svg::Series true_series{"true", "#1f6fb2", true, true, {}};
    svg::Series gen_series{"generated", "#d9541e", true, true, {}};
    for (std::size_t i = 0; i < run.report.samples.size(); ++i) {
        true_series.points.emplace_back(static_cast<double>(i), run.report.samples[i].epp_true);
        gen_series.points.emplace_back(static_cast<double>(i),
                                       run.report.samples[i].epp_generated);
    }
    write_file(dir / "epp_comparison.svg",
               svg::xy_chart(std::string(display_name(run.variant)) + " true vs generated",
                             "test sample", "positivity", {true_series, gen_series}));

    const bel::BelWeights& w = run.bel_weights;
    std::vector<double> vu;
    for (double x : w.v.values()) vu.push_back(x);
    vu.push_back(w.gamma);
    for (double x : w.u.values()) vu.push_back(x);
    vu.push_back(0.0);
    write_file(dir / "heatmap.svg",
               svg::heatmap("V (top, with gamma) and U weights", 2, w.v.size() + 1, vu));

    if (!run.fusion_result.loss_history.empty()) {
        svg::Series loss{"training mse", "#1f6fb2", true, true, {}};
        for (const auto& [epoch, mse] : run.fusion_result.loss_history)
            loss.points.emplace_back(static_cast<double>(epoch), mse);
        write_file(dir / "loss.svg", svg::xy_chart("Fusion training loss", "epoch", "mse", {loss}));
    }
    if (!run.raster_csv.empty()) {
        std::istringstream in(run.raster_csv);
        std::string line;
        std::getline(in, line);
        std::map<std::string, svg::Series> by_pop;
        by_pop["PYR"] = {"PYR", "#1f6fb2", false, true, {}};
        by_pop["PV"] = {"PV", "#d9541e", false, true, {}};
        by_pop["SOM"] = {"SOM", "#3c9d4e", false, true, {}};
        double row = 0.0;
        std::map<std::string, double> base{{"PYR", 0.0}, {"PV", 400.0}, {"SOM", 600.0}};
        while (std::getline(in, line)) {
            const auto fields = data::detail::split_fields(line);
            if (fields.size() != 3) continue;
            row = base[fields[0]] + std::stod(fields[1]);
            by_pop[fields[0]].points.emplace_back(std::stod(fields[2]), row);
        }
        write_file(dir / "raster.svg",
                   svg::xy_chart("Auditory population raster", "time (ms)", "neuron",
                                 {by_pop["PYR"], by_pop["PV"], by_pop["SOM"]}));
    }
}

} // namespace detail

// Persists one finished variant into <out>/<slug>/.
inline void write_variant_artifacts(VariantRun& run, const RunConfig& cfg) {
    if (cfg.output_dir.empty()) return;
    const std::filesystem::path dir =
        std::filesystem::path(cfg.output_dir) / slug(run.variant);
    detail::write_file(dir / "report.json", metrics::report_to_json(run.report).dump(2) + "\n");
    detail::write_file(dir / (std::string("epp_comparison_") + slug(run.variant) + ".csv"),
                       metrics::comparison_csv(run.report));
    detail::write_file(dir / "heatmap.csv", bel::heatmap_csv(run.bel_weights));
    detail::write_file(dir / "checkpoint.txt", detail::checkpoint_text(run));
    if (!run.bel_result.trace.empty())
        detail::write_file(dir / "bel_trace.csv", detail::bel_trace_csv(run.bel_result));
    if (!run.fusion_result.loss_history.empty())
        detail::write_file(dir / "loss_history.csv",
                           detail::loss_history_csv(run.fusion_result));
    if (!run.raster_csv.empty()) detail::write_file(dir / "raster.csv", run.raster_csv);
    if (cfg.emit_svg) detail::write_svgs(run, dir / "plots");
}

// Single-variant entry point: loads data, splits, trains, evaluates, writes.
inline VariantRun run_variant(Variant v, const RunConfig& cfg) {
    const data::PairedDataset ds = load_dataset(cfg);
    const auto [train, test] =
        data::split(ds, cfg.train_fraction, derive_seed(cfg.master_seed, "split"));
    VariantRun run = execute_variant(v, cfg, train, test);
    if (!cfg.output_dir.empty()) {
        detail::write_file(std::filesystem::path(cfg.output_dir) / "config.txt",
                           serialize_config(cfg));
        write_variant_artifacts(run, cfg);
        nlohmann::json j;
        j["variants"][slug(v)] = metrics::report_to_json(run.report);
        detail::write_file(std::filesystem::path(cfg.output_dir) / "results.json",
                           j.dump(2) + "\n");
    }
    return run;
}

struct AblationRow {
    Variant variant = Variant::avf_bel;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double similarity = 0.0;
};

struct AblationTable {
    std::vector<AblationRow> rows;

    // Column order follows the evaluation protocol: precision, recall,
    // F1-score, average similarity.
    std::string to_csv() const {
        std::ostringstream out;
        out << "variant,precision,recall,f1,avg_similarity\n";
        for (const AblationRow& r : rows) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.2f", display_name(r.variant),
                          r.precision, r.recall, r.f1, r.similarity);
            out << buf << '\n';
        }
        return out.str();
    }

    std::string to_text() const {
        std::ostringstream out;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-8s %9s %9s %9s %15s\n", "Variant", "Precision",
                      "Recall", "F1-score", "Avg similarity");
        out << buf;
        for (const AblationRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%-8s %9.2f %9.2f %9.2f %14.2f%%\n",
                          display_name(r.variant), r.precision, r.recall, r.f1, r.similarity);
            out << buf;
        }
        return out.str();
    }
};

// Runs every configured variant on one shared dataset/split and renders the
// comparative table.
inline AblationTable run_all(const RunConfig& cfg) {
    const data::PairedDataset ds = load_dataset(cfg);
    const auto [train, test] =
        data::split(ds, cfg.train_fraction, derive_seed(cfg.master_seed, "split"));

    AblationTable table;
    nlohmann::json results;
    for (Variant v : cfg.variants) {
        VariantRun run = execute_variant(v, cfg, train, test);
        table.rows.push_back({v, run.report.precision, run.report.recall, run.report.f1,
                              run.report.similarity_percent});
        results["variants"][slug(v)] = metrics::report_to_json(run.report);
        write_variant_artifacts(run, cfg);
    }
    if (!cfg.output_dir.empty()) {
        const std::filesystem::path out(cfg.output_dir);
        detail::write_file(out / "config.txt", serialize_config(cfg));
        detail::write_file(out / "results.json", results.dump(2) + "\n");
        detail::write_file(out / "table.csv", table.to_csv());
        detail::write_file(out / "table.txt", table.to_text());
    }
    return table;
}

// Re-evaluates a persisted run without retraining: reads the config snapshot
// and the variant checkpoint, rebuilds the deterministic data path, and
// reports on the test split.
inline VariantRun evaluate_run(const std::filesystem::path& run_dir, Variant v) {
    RunConfig cfg = parse_config(detail::read_file(run_dir / "config.txt"));
    cfg.output_dir.clear();
    LoadedWeights loaded;
    loaded.tensors = ckpt::parse(detail::read_file(run_dir / slug(v) / "checkpoint.txt"));
    const data::PairedDataset ds = load_dataset(cfg);
    const auto [train, test] =
        data::split(ds, cfg.train_fraction, derive_seed(cfg.master_seed, "split"));
    return execute_variant(v, cfg, train, test, &loaded);
}

} // namespace avfbel::pipeline
