#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "disagree/formatting.hpp"

namespace disagree {

enum class PredictorMode { binary, continuous };

PredictorMode parse_predictor_mode(std::string_view name);
std::string_view to_string(PredictorMode mode);

// Baseline disagreement regressor: hashed word/char n-gram features into a
// linear model trained by mini-batch gradient descent with momentum.
struct PredictorConfig {
    PredictorMode mode = PredictorMode::continuous;
    std::size_t feature_dim = static_cast<std::size_t>(1) << 18;  // power of two
    int word_ngram_min = 1;
    int word_ngram_max = 2;  // max 0 disables word grams
    int char_ngram_min = 3;
    int char_ngram_max = 5;  // max 0 disables char grams
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 8;
    int epochs = 15;
    std::uint64_t seed = 1;
    double l2 = 1e-6;
    bool shuffle = true;
    // Binary mode only: weight instances by inverse class frequency. Off by
    // default; disagreement labels are typically heavily skewed toward 0.
    bool class_weighting = false;
};

// Throws ConfigError on out-of-range hyperparameters.
void validate_config(const PredictorConfig& config);

struct FeatureEntry {
    std::uint32_t index = 0;
    double value = 0.0;

    friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

// Sorted by index, one entry per bucket.
using SparseFeatures = std::vector<FeatureEntry>;

// Lowercases, extracts word and character n-grams in the configured ranges,
// hashes each gram (FNV-1a 64) into feature_dim buckets, and scales counts
// by 1/sqrt(total gram count), so repeated grams keep more mass than a plain
// unit-norm vector would give them. Deterministic for a fixed config.
SparseFeatures featurize(std::string_view input_text, const PredictorConfig& config);

struct PredictorModel {
    PredictorConfig config;
    std::vector<double> weights;  // dense, length config.feature_dim
    double bias = 0.0;
    std::vector<double> training_log;  // mean objective per epoch

    bool trained() const { return !training_log.empty(); }
};

// Minimizes mean((head(w.x + b) - label)^2) + l2*|w|^2 where head is the
// identity in continuous mode and a logistic squash in binary mode. Labels
// come from each instance's DisagreementLabel (continuous rate or binary
// flag). Bit-reproducible for a fixed seed and config: shuffling uses the
// library Rng and every gradient reduction happens in a canonical order.
PredictorModel train(std::span<const FormattedInstance> instances, const PredictorConfig& config);

double raw_score(const PredictorModel& model, const SparseFeatures& features);

// Always in [0, 1]: logistic output in binary mode, clamped linear score in
// continuous mode. Throws ModelError on an untrained model.
double predict(const PredictorModel& model, std::string_view input_text);

// Compares the analytic gradient of the single-instance loss (MSE term plus
// l2 penalty) against central finite differences (step 1e-5) on the bias,
// every support coordinate, and random off-support coordinates, at least
// min_coordinates in total. Returns the max relative error.
double gradient_check(const PredictorModel& model, const FormattedInstance& instance,
                      int min_coordinates = 20, std::uint64_t seed = 17);

// Binary little-endian artifact with a format-version tag; load(save(m))
// reproduces the model bit for bit.
void save_model(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel load_model(const std::filesystem::path& path);

}  // namespace disagree
