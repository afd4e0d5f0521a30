// Command-line driver: synthetic data generation, training, evaluation, the
// five-variant ablation, and SVG rendering of persisted run artifacts.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avfbel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace avfbel;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string seed;
    std::string out;
    std::string data;
    std::string n;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key-value config file");
    cmd->add_option("--seed", args.seed, "master seed (derives every module seed)");
    cmd->add_option("--out", args.out, "output directory for run artifacts");
    cmd->add_option("--data", args.data,
                    "dataset directory (animation.csv, music.csv, pairs.csv) or 'synthetic'");
    cmd->add_option("--n", args.n, "synthetic pairs per run");
}

pipeline::RunConfig resolve_config(const CommonArgs& args) {
    std::map<std::string, std::string> kv;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path, std::ios::binary);
        if (!in) throw ValidationError("cannot open config file " + args.config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        kv = pipeline::kv::parse(buf.str());
    }
    if (!args.seed.empty()) kv["seed"] = args.seed;
    if (!args.out.empty()) kv["out"] = args.out;
    if (!args.data.empty()) kv["data"] = args.data;
    if (!args.n.empty()) kv["n"] = args.n;
    return pipeline::config_from_kv(kv);
}

void print_report(const metrics::EvalReport& report) {
    std::printf("%-8s  similarity %6.2f%%  precision %.3f  recall %.3f  f1 %.3f  (%zu test samples)\n",
                report.variant.c_str(), report.similarity_percent, report.precision, report.recall,
                report.f1, report.samples.size());
    for (const std::string& flag : report.flags) std::printf("  note: %s\n", flag.c_str());
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(data::detail::split_fields(line));
    }
    return rows;
}

void render_run_plots(const fs::path& run_dir) {
    bool rendered_any = false;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory() || entry.path().filename() == "plots") continue;
        const fs::path dir = entry.path();
        const fs::path plots = dir / "plots";

        for (const auto& file : fs::directory_iterator(dir)) {
            const std::string name = file.path().filename().string();
            if (name.rfind("epp_comparison_", 0) == 0 && file.path().extension() == ".csv") {
                const auto rows = read_csv_rows(file.path());
                svg::Series truth{"true", "#1f6fb2", true, true, {}};
                svg::Series gen{"generated", "#d9541e", true, true, {}};
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    truth.points.emplace_back(static_cast<double>(i), std::stod(rows[i][1]));
                    gen.points.emplace_back(static_cast<double>(i), std::stod(rows[i][2]));
                }
                pipeline::detail::write_file(
                    plots / "epp_comparison.svg",
                    svg::xy_chart(dir.filename().string() + " true vs generated", "test sample",
                                  "positivity", {truth, gen}));
                rendered_any = true;
            }
        }
        if (fs::exists(dir / "heatmap.csv")) {
            const auto rows = read_csv_rows(dir / "heatmap.csv");
            std::vector<double> v_vals, u_vals;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if (rows[i][0] == "V") v_vals.push_back(std::stod(rows[i][3]));
                if (rows[i][0] == "U") u_vals.push_back(std::stod(rows[i][3]));
            }
            std::vector<double> grid = v_vals;
            u_vals.push_back(0.0); // pad the U row under the thalamic column
            grid.insert(grid.end(), u_vals.begin(), u_vals.end());
            pipeline::detail::write_file(plots / "heatmap.svg",
                                         svg::heatmap("V (top) and U weights", 2, v_vals.size(),
                                                      grid));
            rendered_any = true;
        }
        if (fs::exists(dir / "raster.csv")) {
            const auto rows = read_csv_rows(dir / "raster.csv");
            std::map<std::string, svg::Series> pops{
                {"PYR", {"PYR", "#1f6fb2", false, true, {}}},
                {"PV", {"PV", "#d9541e", false, true, {}}},
                {"SOM", {"SOM", "#3c9d4e", false, true, {}}}};
            const std::map<std::string, double> base{{"PYR", 0}, {"PV", 400}, {"SOM", 600}};
            for (std::size_t i = 1; i < rows.size(); ++i)
                pops[rows[i][0]].points.emplace_back(std::stod(rows[i][2]),
                                                     base.at(rows[i][0]) + std::stod(rows[i][1]));
            pipeline::detail::write_file(
                plots / "raster.svg",
                svg::xy_chart("Auditory population raster", "time (ms)", "neuron",
                              {pops["PYR"], pops["PV"], pops["SOM"]}));
            rendered_any = true;
        }
        if (fs::exists(dir / "loss_history.csv")) {
            const auto rows = read_csv_rows(dir / "loss_history.csv");
            svg::Series loss{"training mse", "#1f6fb2", true, true, {}};
            for (std::size_t i = 1; i < rows.size(); ++i)
                loss.points.emplace_back(std::stod(rows[i][0]), std::stod(rows[i][1]));
            pipeline::detail::write_file(plots / "loss.svg",
                                         svg::xy_chart("Fusion training loss", "epoch", "mse",
                                                       {loss}));
            rendered_any = true;
        }
    }
    if (!rendered_any) throw ValidationError("no plottable artifacts found in " + run_dir.string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audio-visual emotion learning pipeline"};
    app.require_subcommand(1);

    CommonArgs synth_args, train_args, ablate_args;
    std::string synth_noise, synth_mix;
    std::string train_variant = "avf-bel";
    std::string eval_run, eval_variant = "avf-bel";
    std::string plots_run;

    CLI::App* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    add_common(synth, synth_args);
    synth->add_option("--noise", synth_noise, "rating noise amplitude (default 0.05)");
    synth->add_option("--mix", synth_mix, "animation share of the fused target (default 0.5)");

    CLI::App* train = app.add_subcommand("train", "train one variant and persist its artifacts");
    add_common(train, train_args);
    train->add_option("--variant", train_variant, "bel-m | bel-a | m-bel | a-bel | avf-bel");

    CLI::App* eval = app.add_subcommand("eval", "re-evaluate a persisted run from its checkpoint");
    eval->add_option("--run", eval_run, "run directory written by train/ablate")->required();
    eval->add_option("--variant", eval_variant, "variant to evaluate");

    CLI::App* ablate = app.add_subcommand("ablate", "run all five variants and print the table");
    add_common(ablate, ablate_args);

    CLI::App* plots = app.add_subcommand("plots", "render SVG plots from a run directory");
    plots->add_option("--run", plots_run, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            pipeline::RunConfig cfg = resolve_config(synth_args);
            if (!synth_noise.empty())
                cfg.noise_amplitude = pipeline::kv::to_double(synth_noise, "noise");
            if (!synth_mix.empty()) cfg.animation_mix = pipeline::kv::to_double(synth_mix, "mix");
            if (cfg.output_dir.empty())
                throw ValidationError("synth: --out directory is required");
            const data::PairedDataset ds = data::generate_synthetic(
                cfg.synthetic_n, pipeline::derive_seed(cfg.master_seed, "dataset"),
                cfg.noise_amplitude, cfg.animation_mix);
            std::vector<data::Sample> anim, music;
            for (const auto& p : ds.pairs) {
                anim.push_back(p.animation);
                music.push_back(p.music);
            }
            const fs::path out(cfg.output_dir);
            pipeline::detail::write_file(out / "animation.csv", data::serialize_samples(anim));
            pipeline::detail::write_file(out / "music.csv", data::serialize_samples(music));
            pipeline::detail::write_file(out / "pairs.csv", data::serialize_pairs(ds));
            std::printf("wrote %zu pairs to %s\n", ds.size(), cfg.output_dir.c_str());
        } else if (train->parsed()) {
            pipeline::RunConfig cfg = resolve_config(train_args);
            const pipeline::Variant v = pipeline::variant_from_string(train_variant);
            const pipeline::VariantRun run = pipeline::run_variant(v, cfg);
            print_report(run.report);
            if (!cfg.output_dir.empty())
                std::printf("artifacts in %s/%s\n", cfg.output_dir.c_str(), pipeline::slug(v));
        } else if (eval->parsed()) {
            const pipeline::Variant v = pipeline::variant_from_string(eval_variant);
            const pipeline::VariantRun run = pipeline::evaluate_run(eval_run, v);
            print_report(run.report);
        } else if (ablate->parsed()) {
            pipeline::RunConfig cfg = resolve_config(ablate_args);
            const pipeline::AblationTable table = pipeline::run_all(cfg);
            std::fputs(table.to_text().c_str(), stdout);
            if (!cfg.output_dir.empty())
                std::printf("artifacts in %s\n", cfg.output_dir.c_str());
        } else if (plots->parsed()) {
            render_run_plots(plots_run);
            std::printf("plots rendered under %s/*/plots\n", plots_run.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
