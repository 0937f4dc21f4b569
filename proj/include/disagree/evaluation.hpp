#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "disagree/annotation.hpp"
#include "disagree/predictor.hpp"

namespace disagree {

// Mean squared error between aligned prediction/label lists.
double mse(std::span<const double> predictions, std::span<const double> labels);

// Nearest level, exact midpoints rounding to the lower level. levels must be
// non-empty and sorted ascending.
std::size_t quantize_index(double prediction, std::span<const double> levels);
double quantize(double prediction, std::span<const double> levels);

struct F1Result {
    double f1 = 0.0;
    // Set when some denominator was empty (no predicted or no true positives
    // for a class); the affected class contributes 0 instead of NaN.
    bool degenerate = false;
};

// Binary mode: F1 of the positive class after thresholding predictions at
// 0.5. Continuous mode: predictions are quantized onto levels and per-level
// F1 is macro-averaged over the levels present in the true labels.
F1Result f1_hard(std::span<const double> predictions, std::span<const double> labels,
                 std::span<const double> levels, PredictorMode mode);

struct EvalReport {
    double f1 = 0.0;  // in [0,1]; display convention is x100
    double mse = 0.0;
    std::size_t n_instances = 0;
    PredictorMode mode = PredictorMode::continuous;
    bool degenerate_f1 = false;
    // level -> (predicted count, true count)
    std::map<double, std::pair<std::size_t, std::size_t>> per_level_counts;

    // Flat key=value block, one pair per line.
    std::string to_text() const;
    static std::string csv_header();
    std::string to_csv_row(const std::string& dataset, const std::string& setup) const;
};

EvalReport evaluate(std::span<const double> predictions, std::span<const double> labels,
                    std::span<const double> levels, PredictorMode mode);

struct DatasetStats {
    std::vector<std::pair<double, std::size_t>> histogram;  // level -> count
    double mean = 0.0;
    double variance = 0.0;  // population variance
    std::size_t n = 0;
};

// Histogram of continuous disagreement over the achievable levels plus the
// mean/variance of the raw (unquantized) rates.
DatasetStats dataset_stats(std::span<const DisagreementLabel> labels,
                           std::span<const double> levels);

std::vector<double> to_doubles(std::span<const Fraction> fractions);

// Shortest round-trip decimal form; all CSV/text output flows through this
// so identical runs produce identical bytes.
std::string format_double(double value);

}  // namespace disagree
