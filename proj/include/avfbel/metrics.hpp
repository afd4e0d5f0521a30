#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avfbel/errors.hpp"

// Evaluation protocol: exponential similarity between true and generated
// positivity values, binarization at a threshold, and precision/recall/F1.
namespace avfbel::metrics {

// 100 * exp(-mean |true - gen|), distances taken in normalized positivity
// units. Symmetric, 100 at equality, strictly decreasing in every |diff|.
inline double similarity(const std::vector<double>& truth, const std::vector<double>& generated) {
    if (truth.empty()) throw ContractViolation("similarity: empty input");
    if (truth.size() != generated.size())
        throw DimensionError("similarity: length mismatch " + std::to_string(truth.size()) +
                             " vs " + std::to_string(generated.size()));
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!std::isfinite(truth[i]) || !std::isfinite(generated[i]))
            throw NumericDomainError("similarity: non-finite value");
        mean_abs += std::fabs(truth[i] - generated[i]);
    }
    mean_abs /= static_cast<double>(truth.size());
    return 100.0 * std::exp(-mean_abs);
}

// Label 1 iff value >= threshold (boundary binarizes positive).
inline std::vector<int> binarize(const std::vector<double>& values, double threshold = 0.5) {
    std::vector<int> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) labels[i] = values[i] >= threshold ? 1 : 0;
    return labels;
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_degenerate = false; // no predicted positives
    bool recall_degenerate = false;    // no actual positives
    bool f1_degenerate = false;        // p + r == 0
};

inline Prf precision_recall_f1(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size())
        throw DimensionError("precision_recall_f1: length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == 1 && truth[i] == 1) ++tp;
        if (predicted[i] == 1 && truth[i] == 0) ++fp;
        if (predicted[i] == 0 && truth[i] == 1) ++fn;
    }
    Prf out;
    if (tp + fp == 0) {
        out.precision_degenerate = true;
    } else {
        out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
        out.recall_degenerate = true;
    } else {
        out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (out.precision + out.recall == 0.0) {
        out.f1_degenerate = true;
    } else {
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    }
    return out;
}

struct SampleComparison {
    std::string id;
    double epp_true = 0.0;
    double epp_generated = 0.0;
};

struct EvalReport {
    std::string variant;
    std::vector<SampleComparison> samples;
    double similarity_percent = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double threshold = 0.5;
    std::vector<std::string> flags; // degenerate metric cases
    std::size_t train_count = 0;
    std::size_t test_count = 0;
};

// Assembles the full report from per-sample comparisons.
inline EvalReport make_report(std::string variant, std::vector<SampleComparison> samples,
                              double threshold = 0.5) {
    EvalReport report;
    report.variant = std::move(variant);
    report.threshold = threshold;
    report.samples = std::move(samples);
    std::vector<double> truth, generated;
    truth.reserve(report.samples.size());
    generated.reserve(report.samples.size());
    for (const SampleComparison& s : report.samples) {
        truth.push_back(s.epp_true);
        generated.push_back(s.epp_generated);
    }
    report.similarity_percent = similarity(truth, generated);
    const Prf prf = precision_recall_f1(binarize(truth, threshold), binarize(generated, threshold));
    report.precision = prf.precision;
    report.recall = prf.recall;
    report.f1 = prf.f1;
    if (prf.precision_degenerate) report.flags.push_back("precision 0/0 (no predicted positives)");
    if (prf.recall_degenerate) report.flags.push_back("recall 0/0 (no actual positives)");
    if (prf.f1_degenerate) report.flags.push_back("f1 0/0");
    return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["variant"] = report.variant;
    j["similarity_percent"] = report.similarity_percent;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["threshold"] = report.threshold;
    j["flags"] = report.flags;
    j["train_count"] = report.train_count;
    j["test_count"] = report.test_count;
    nlohmann::json samples = nlohmann::json::array();
    for (const SampleComparison& s : report.samples)
        samples.push_back({{"id", s.id}, {"epp_true", s.epp_true}, {"epp_gen", s.epp_generated}});
    j["samples"] = samples;
    return j;
}

// Per-sample comparison CSV: id,epp_true,epp_gen.
inline std::string comparison_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "id,epp_true,epp_gen\n";
    for (const SampleComparison& s : report.samples) {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", s.epp_true, s.epp_generated);
        out << s.id << ',' << buf << '\n';
    }
    return out.str();
}

} // namespace avfbel::metrics
