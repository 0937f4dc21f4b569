#include "disagree/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "disagree/errors.hpp"

namespace disagree {

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::vector<double> to_doubles(std::span<const Fraction> fractions) {
    std::vector<double> out;
    out.reserve(fractions.size());
    for (const auto& f : fractions) out.push_back(f.value());
    return out;
}

double mse(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) {
        throw EvalError("mse: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw EvalError("mse over zero instances");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

std::size_t quantize_index(double prediction, std::span<const double> levels) {
    if (levels.empty()) throw EvalError("quantize with empty level list");
    std::size_t idx = 0;
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const double midpoint = 0.5 * (levels[i - 1] + levels[i]);
        if (prediction > midpoint) idx = i;  // exact midpoint keeps the lower level
    }
    return idx;
}

double quantize(double prediction, std::span<const double> levels) {
    return levels[quantize_index(prediction, levels)];
}

namespace {

// Maps a true label onto its level index, insisting it actually lies on one.
std::size_t label_level_index(double label, std::span<const double> levels) {
    const std::size_t idx = quantize_index(label, levels);
    if (std::abs(label - levels[idx]) > 1e-9) {
        throw EvalError("label " + format_double(label) + " does not lie on any level");
    }
    return idx;
}

struct ClassCounts {
    std::size_t tp = 0, fp = 0, fn = 0;
};

// Positive-class F1 with the degenerate-denominator-as-zero convention.
F1Result class_f1(const ClassCounts& c) {
    F1Result out;
    if (c.tp + c.fp == 0 || c.tp + c.fn == 0) {
        out.degenerate = true;
        return out;
    }
    const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (precision + recall == 0.0) {
        out.degenerate = true;
        return out;
    }
    out.f1 = 2.0 * precision * recall / (precision + recall);
    return out;
}

}  // namespace

F1Result f1_hard(std::span<const double> predictions, std::span<const double> labels,
                 std::span<const double> levels, PredictorMode mode) {
    if (predictions.size() != labels.size()) {
        throw EvalError("f1_hard: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw EvalError("f1_hard over zero instances");

    if (mode == PredictorMode::binary) {
        ClassCounts counts;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            if (labels[i] != 0.0 && labels[i] != 1.0) {
                throw EvalError("binary f1 label " + format_double(labels[i]) + " is not 0 or 1");
            }
            const bool pred = predictions[i] >= 0.5;
            const bool truth = labels[i] == 1.0;
            if (pred && truth) ++counts.tp;
            else if (pred && !truth) ++counts.fp;
            else if (!pred && truth) ++counts.fn;
        }
        return class_f1(counts);
    }

    if (levels.empty()) throw EvalError("continuous f1 needs a level list");
    std::vector<ClassCounts> per_level(levels.size());
    std::vector<bool> present(levels.size(), false);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::size_t pred = quantize_index(predictions[i], levels);
        const std::size_t truth = label_level_index(labels[i], levels);
        present[truth] = true;
        if (pred == truth) {
            ++per_level[truth].tp;
        } else {
            ++per_level[pred].fp;
            ++per_level[truth].fn;
        }
    }

    F1Result out;
    double sum = 0.0;
    std::size_t n_present = 0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!present[k]) continue;
        ++n_present;
        const F1Result level = class_f1(per_level[k]);
        sum += level.f1;
        out.degenerate = out.degenerate || level.degenerate;
    }
    out.f1 = sum / static_cast<double>(n_present);
    return out;
}

EvalReport evaluate(std::span<const double> predictions, std::span<const double> labels,
                    std::span<const double> levels, PredictorMode mode) {
    EvalReport report;
    report.mode = mode;
    report.n_instances = predictions.size();
    report.mse = mse(predictions, labels);
    const F1Result f1 = f1_hard(predictions, labels, levels, mode);
    report.f1 = f1.f1;
    report.degenerate_f1 = f1.degenerate;

    if (mode == PredictorMode::binary) {
        for (double level : {0.0, 1.0}) report.per_level_counts[level] = {0, 0};
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            ++report.per_level_counts[predictions[i] >= 0.5 ? 1.0 : 0.0].first;
            ++report.per_level_counts[labels[i]].second;
        }
    } else {
        for (double level : levels) report.per_level_counts[level] = {0, 0};
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            ++report.per_level_counts[quantize(predictions[i], levels)].first;
            ++report.per_level_counts[levels[label_level_index(labels[i], levels)]].second;
        }
    }
    return report;
}

std::string EvalReport::to_text() const {
    std::string out;
    out += "mode=" + std::string(to_string(mode)) + "\n";
    out += "n_instances=" + std::to_string(n_instances) + "\n";
    out += "f1=" + format_double(f1) + "\n";
    out += "f1_x100=" + format_double(f1 * 100.0) + "\n";
    out += "mse=" + format_double(mse) + "\n";
    out += "degenerate_f1=" + std::string(degenerate_f1 ? "1" : "0") + "\n";
    for (const auto& [level, counts] : per_level_counts) {
        out += "level_" + format_double(level) + "=" + std::to_string(counts.first) + "," +
               std::to_string(counts.second) + "\n";
    }
    return out;
}

std::string EvalReport::csv_header() { return "dataset,setup,f1,mse,n"; }

std::string EvalReport::to_csv_row(const std::string& dataset, const std::string& setup) const {
    return dataset + "," + setup + "," + format_double(f1 * 100.0) + "," + format_double(mse) +
           "," + std::to_string(n_instances);
}

DatasetStats dataset_stats(std::span<const DisagreementLabel> labels,
                           std::span<const double> levels) {
    if (labels.empty()) throw EvalError("dataset_stats over zero labels");
    if (levels.empty()) throw EvalError("dataset_stats needs a level list");

    DatasetStats stats;
    stats.n = labels.size();
    std::vector<std::size_t> counts(levels.size(), 0);

    double sum = 0.0;
    for (const auto& label : labels) {
        const double value = label.continuous.value();
        ++counts[quantize_index(value, levels)];
        sum += value;
    }
    stats.mean = sum / static_cast<double>(labels.size());

    double sq = 0.0;
    for (const auto& label : labels) {
        const double d = label.continuous.value() - stats.mean;
        sq += d * d;
    }
    stats.variance = sq / static_cast<double>(labels.size());

    stats.histogram.reserve(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        stats.histogram.emplace_back(levels[i], counts[i]);
    }
    return stats;
}

}  // namespace disagree
