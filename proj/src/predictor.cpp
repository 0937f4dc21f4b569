#include "disagree/predictor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "disagree/errors.hpp"
#include "disagree/rng.hpp"

namespace disagree {

PredictorMode parse_predictor_mode(std::string_view name) {
    if (name == "binary") return PredictorMode::binary;
    if (name == "continuous") return PredictorMode::continuous;
    throw ConfigError("unknown predictor mode '" + std::string(name) +
                      "' (expected 'binary' or 'continuous')");
}

std::string_view to_string(PredictorMode mode) {
    return mode == PredictorMode::binary ? "binary" : "continuous";
}

void validate_config(const PredictorConfig& config) {
    if (config.feature_dim < 2 || (config.feature_dim & (config.feature_dim - 1)) != 0) {
        throw ConfigError("feature_dim must be a power of two >= 2, got " +
                          std::to_string(config.feature_dim));
    }
    if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (config.momentum < 0.0 || config.momentum >= 1.0) {
        throw ConfigError("momentum must be in [0, 1)");
    }
    if (config.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (config.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (config.l2 < 0.0) throw ConfigError("l2 must be non-negative");
    if (config.word_ngram_max > 0 && config.word_ngram_min < 1) {
        throw ConfigError("word n-gram range must start at 1 or higher");
    }
    if (config.char_ngram_max > 0 && config.char_ngram_min < 1) {
        throw ConfigError("char n-gram range must start at 1 or higher");
    }
    if (config.word_ngram_max > 0 && config.word_ngram_min > config.word_ngram_max) {
        throw ConfigError("word n-gram range is inverted");
    }
    if (config.char_ngram_max > 0 && config.char_ngram_min > config.char_ngram_max) {
        throw ConfigError("char n-gram range is inverted");
    }
    if (config.word_ngram_max <= 0 && config.char_ngram_max <= 0) {
        throw ConfigError("at least one of word or char n-grams must be enabled");
    }
}

namespace {

constexpr std::uint64_t kFnvBasis = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(char tag, std::string_view data) {
    std::uint64_t h = kFnvBasis;
    h = (h ^ static_cast<unsigned char>(tag)) * kFnvPrime;
    for (char c : data) {
        h = (h ^ static_cast<unsigned char>(c)) * kFnvPrime;
    }
    return h;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Per-instance squared error and d(loss)/d(score) for the mode's head.
struct LossGrad {
    double loss = 0.0;
    double dscore = 0.0;
};

LossGrad instance_loss(PredictorMode mode, double score, double target) {
    LossGrad out;
    if (mode == PredictorMode::binary) {
        const double s = sigmoid(score);
        const double r = s - target;
        out.loss = r * r;
        out.dscore = 2.0 * r * s * (1.0 - s);
    } else {
        const double r = score - target;
        out.loss = r * r;
        out.dscore = 2.0 * r;
    }
    return out;
}

}  // namespace

SparseFeatures featurize(std::string_view input_text, const PredictorConfig& config) {
    validate_config(config);

    std::string text(input_text);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    const std::uint64_t mask = config.feature_dim - 1;
    std::unordered_map<std::uint32_t, double> counts;
    std::size_t total_grams = 0;

    auto add_gram = [&](char tag, std::string_view gram) {
        const auto bucket = static_cast<std::uint32_t>(fnv1a(tag, gram) & mask);
        counts[bucket] += 1.0;
        ++total_grams;
    };

    if (config.word_ngram_max > 0) {
        std::vector<std::string_view> tokens;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i > start) tokens.push_back(std::string_view(text).substr(start, i - start));
        }
        std::string gram;
        for (int n = config.word_ngram_min; n <= config.word_ngram_max; ++n) {
            if (tokens.size() < static_cast<std::size_t>(n)) break;
            for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
                gram.clear();
                for (int j = 0; j < n; ++j) {
                    if (j > 0) gram += ' ';
                    gram += tokens[start + static_cast<std::size_t>(j)];
                }
                add_gram('w', gram);
            }
        }
    }

    if (config.char_ngram_max > 0) {
        for (int n = config.char_ngram_min; n <= config.char_ngram_max; ++n) {
            if (text.size() < static_cast<std::size_t>(n)) break;
            for (std::size_t start = 0; start + n <= text.size(); ++start) {
                add_gram('c', std::string_view(text).substr(start, static_cast<std::size_t>(n)));
            }
        }
    }

    SparseFeatures features;
    if (total_grams == 0) return features;

    const double scale = 1.0 / std::sqrt(static_cast<double>(total_grams));
    features.reserve(counts.size());
    for (const auto& [index, count] : counts) {
        features.push_back({index, count * scale});
    }
    std::sort(features.begin(), features.end(),
              [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
    return features;
}

double raw_score(const PredictorModel& model, const SparseFeatures& features) {
    double z = model.bias;
    for (const auto& entry : features) {
        z += model.weights[entry.index] * entry.value;
    }
    return z;
}

double predict(const PredictorModel& model, std::string_view input_text) {
    if (!model.trained()) throw ModelError("predict called on an untrained model");
    const double z = raw_score(model, featurize(input_text, model.config));
    if (model.config.mode == PredictorMode::binary) return sigmoid(z);
    return std::clamp(z, 0.0, 1.0);
}

PredictorModel train(std::span<const FormattedInstance> instances, const PredictorConfig& config) {
    validate_config(config);
    if (instances.empty()) throw ConfigError("cannot train on an empty instance list");

    const std::size_t n = instances.size();
    const std::size_t dim = config.feature_dim;

    std::vector<SparseFeatures> features(n);
    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        features[i] = featurize(instances[i].input_text, config);
        targets[i] = config.mode == PredictorMode::binary
                         ? (instances[i].label.binary ? 1.0 : 0.0)
                         : instances[i].label.continuous.value();
    }

    std::vector<double> instance_weight(n, 1.0);
    if (config.class_weighting && config.mode == PredictorMode::binary) {
        std::size_t positives = 0;
        for (double t : targets) positives += t > 0.5 ? 1 : 0;
        const std::size_t negatives = n - positives;
        if (positives > 0 && negatives > 0) {
            const double wp = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
            const double wn = static_cast<double>(n) / (2.0 * static_cast<double>(negatives));
            for (std::size_t i = 0; i < n; ++i) {
                instance_weight[i] = targets[i] > 0.5 ? wp : wn;
            }
        }
    }

    PredictorModel model;
    model.config = config;
    model.weights.assign(dim, 0.0);
    model.training_log.reserve(static_cast<std::size_t>(config.epochs));

    std::vector<double> velocity(dim, 0.0);
    double bias_velocity = 0.0;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(config.seed);

    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    std::vector<std::pair<std::uint32_t, double>> contribs;
    std::vector<double> bias_residuals;
    std::vector<double> batch_losses;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) fisher_yates(std::span<std::size_t>(order), rng);

        double epoch_loss_sum = 0.0;

        for (std::size_t begin = 0; begin < n; begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, n);
            const auto b = static_cast<double>(end - begin);

            contribs.clear();
            bias_residuals.clear();
            batch_losses.clear();

            for (std::size_t pos = begin; pos < end; ++pos) {
                const std::size_t i = order[pos];
                const double z = raw_score(model, features[i]);
                LossGrad lg = instance_loss(config.mode, z, targets[i]);
                lg.loss *= instance_weight[i];
                lg.dscore *= instance_weight[i];
                batch_losses.push_back(lg.loss);
                bias_residuals.push_back(lg.dscore);
                for (const auto& entry : features[i]) {
                    contribs.emplace_back(entry.index, lg.dscore * entry.value);
                }
            }

            // Canonical reduction order: sums are identical no matter how the
            // training set was permuted, which keeps full-batch training (and
            // any fixed-order parallel variant) bit-reproducible.
            std::sort(contribs.begin(), contribs.end());
            std::sort(bias_residuals.begin(), bias_residuals.end());
            std::sort(batch_losses.begin(), batch_losses.end());

            double mse_sum = 0.0;
            for (double l : batch_losses) mse_sum += l;

            // Dense half of the update: momentum decay plus the l2 gradient,
            // with |w|^2 collected for the objective log on the side.
            double norm2 = 0.0;
            const double decay_step = config.learning_rate * 2.0 * config.l2;
            for (std::size_t j = 0; j < dim; ++j) {
                const double w = model.weights[j];
                norm2 += w * w;
                velocity[j] = config.momentum * velocity[j] - decay_step * w;
            }
            bias_velocity = config.momentum * bias_velocity;

            // Sparse half: batch-mean MSE gradient on touched coordinates.
            std::size_t idx = 0;
            while (idx < contribs.size()) {
                const std::uint32_t bucket = contribs[idx].first;
                double sum = 0.0;
                while (idx < contribs.size() && contribs[idx].first == bucket) {
                    sum += contribs[idx].second;
                    ++idx;
                }
                velocity[bucket] -= config.learning_rate * sum / b;
            }
            double bias_sum = 0.0;
            for (double r : bias_residuals) bias_sum += r;
            bias_velocity -= config.learning_rate * bias_sum / b;

            for (std::size_t j = 0; j < dim; ++j) model.weights[j] += velocity[j];
            model.bias += bias_velocity;

            epoch_loss_sum += mse_sum + b * config.l2 * norm2;
        }

        model.training_log.push_back(epoch_loss_sum / static_cast<double>(n));
    }

    return model;
}

double gradient_check(const PredictorModel& model, const FormattedInstance& instance,
                      int min_coordinates, std::uint64_t seed) {
    const SparseFeatures features = featurize(instance.input_text, model.config);
    const double target = model.config.mode == PredictorMode::binary
                              ? (instance.label.binary ? 1.0 : 0.0)
                              : instance.label.continuous.value();

    std::vector<double> weights = model.weights;
    double bias = model.bias;

    auto loss_at = [&]() {
        double z = bias;
        for (const auto& entry : features) z += weights[entry.index] * entry.value;
        double norm2 = 0.0;
        for (double w : weights) norm2 += w * w;
        return instance_loss(model.config.mode, z, target).loss + model.config.l2 * norm2;
    };

    const double z0 = raw_score(model, features);
    const double dscore = instance_loss(model.config.mode, z0, target).dscore;

    // Coordinates to probe: every support index plus random off-support ones.
    std::unordered_set<std::uint32_t> coords;
    for (const auto& entry : features) coords.insert(entry.index);
    Rng rng(seed);
    while (coords.size() < static_cast<std::size_t>(min_coordinates) &&
           coords.size() < model.weights.size()) {
        coords.insert(static_cast<std::uint32_t>(rng.below(model.weights.size())));
    }

    const double h = 1e-5;
    double max_rel = 0.0;
    auto record = [&](double analytic, double numeric) {
        const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    };

    // Bias coordinate.
    {
        bias = model.bias + h;
        const double up = loss_at();
        bias = model.bias - h;
        const double down = loss_at();
        bias = model.bias;
        record(dscore, (up - down) / (2.0 * h));
    }

    for (std::uint32_t j : coords) {
        double xj = 0.0;
        for (const auto& entry : features) {
            if (entry.index == j) {
                xj = entry.value;
                break;
            }
        }
        const double analytic = dscore * xj + 2.0 * model.config.l2 * model.weights[j];
        const double original = weights[j];
        weights[j] = original + h;
        const double up = loss_at();
        weights[j] = original - h;
        const double down = loss_at();
        weights[j] = original;
        record(analytic, (up - down) / (2.0 * h));
    }

    return max_rel;
}

namespace {

constexpr char kModelMagic[4] = {'D', 'S', 'G', 'M'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.write(buf, sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    char buf[sizeof(T)];
    in.read(buf, sizeof(T));
    if (!in) throw IoError("truncated model file");
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace

void save_model(const PredictorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

    out.write(kModelMagic, sizeof(kModelMagic));
    write_pod<std::uint32_t>(out, kModelVersion);

    const PredictorConfig& c = model.config;
    write_pod<std::uint8_t>(out, c.mode == PredictorMode::binary ? 0 : 1);
    write_pod<std::uint64_t>(out, c.feature_dim);
    write_pod<std::int32_t>(out, c.word_ngram_min);
    write_pod<std::int32_t>(out, c.word_ngram_max);
    write_pod<std::int32_t>(out, c.char_ngram_min);
    write_pod<std::int32_t>(out, c.char_ngram_max);
    write_pod<double>(out, c.learning_rate);
    write_pod<double>(out, c.momentum);
    write_pod<std::int32_t>(out, c.batch_size);
    write_pod<std::int32_t>(out, c.epochs);
    write_pod<std::uint64_t>(out, c.seed);
    write_pod<double>(out, c.l2);
    write_pod<std::uint8_t>(out, c.shuffle ? 1 : 0);
    write_pod<std::uint8_t>(out, c.class_weighting ? 1 : 0);

    write_pod<double>(out, model.bias);
    write_pod<std::uint64_t>(out, model.weights.size());
    for (double w : model.weights) write_pod<double>(out, w);
    write_pod<std::uint64_t>(out, model.training_log.size());
    for (double l : model.training_log) write_pod<double>(out, l);

    if (!out) throw IoError("failed writing model to '" + path.string() + "'");
}

PredictorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");

    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw IoError("'" + path.string() + "' is not a model file");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kModelVersion) {
        throw IoError("unsupported model format version " + std::to_string(version));
    }

    PredictorModel model;
    PredictorConfig& c = model.config;
    c.mode = read_pod<std::uint8_t>(in) == 0 ? PredictorMode::binary : PredictorMode::continuous;
    c.feature_dim = read_pod<std::uint64_t>(in);
    c.word_ngram_min = read_pod<std::int32_t>(in);
    c.word_ngram_max = read_pod<std::int32_t>(in);
    c.char_ngram_min = read_pod<std::int32_t>(in);
    c.char_ngram_max = read_pod<std::int32_t>(in);
    c.learning_rate = read_pod<double>(in);
    c.momentum = read_pod<double>(in);
    c.batch_size = read_pod<std::int32_t>(in);
    c.epochs = read_pod<std::int32_t>(in);
    c.seed = read_pod<std::uint64_t>(in);
    c.l2 = read_pod<double>(in);
    c.shuffle = read_pod<std::uint8_t>(in) != 0;
    c.class_weighting = read_pod<std::uint8_t>(in) != 0;

    model.bias = read_pod<double>(in);
    const auto n_weights = read_pod<std::uint64_t>(in);
    if (n_weights != c.feature_dim) {
        throw IoError("model weight count does not match its feature_dim");
    }
    model.weights.resize(n_weights);
    for (auto& w : model.weights) w = read_pod<double>(in);
    const auto n_log = read_pod<std::uint64_t>(in);
    model.training_log.resize(n_log);
    for (auto& l : model.training_log) l = read_pod<double>(in);

    return model;
}

}  // namespace disagree
