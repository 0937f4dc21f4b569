#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <vector>

#include "disagree/errors.hpp"
#include "disagree/evaluation.hpp"
#include "disagree/predictor.hpp"
#include "disagree/rng.hpp"
#include "synthetic.hpp"

using namespace disagree;

namespace {

FormattedInstance make_instance(std::string text, std::int64_t num, std::int64_t den) {
    FormattedInstance instance;
    instance.text_id = "t";
    instance.input_text = std::move(text);
    instance.label.continuous = Fraction(num, den);
    instance.label.binary = num != 0;
    return instance;
}

PredictorConfig small_config() {
    PredictorConfig config;
    config.feature_dim = 1 << 12;
    return config;
}

// Test-only closed-form reference: ridge regression over the same hashed
// features, solved exactly on the compacted design matrix. The SGD trainer
// has to approach this.
class RidgeOracle {
public:
    RidgeOracle(const std::vector<SparseFeatures>& rows, const std::vector<double>& targets,
                double l2) {
        for (const auto& row : rows) {
            for (const auto& entry : row) {
                remap_.emplace(entry.index, remap_.size());
            }
        }
        const std::size_t m = remap_.size();
        const std::size_t dim = m + 1;  // trailing bias column
        std::vector<std::vector<double>> a(dim, std::vector<double>(dim, 0.0));
        std::vector<double> b(dim, 0.0);

        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::vector<std::pair<std::size_t, double>> x;
            for (const auto& entry : rows[i]) x.emplace_back(remap_.at(entry.index), entry.value);
            x.emplace_back(m, 1.0);
            for (const auto& [j1, v1] : x) {
                b[j1] += v1 * targets[i];
                for (const auto& [j2, v2] : x) a[j1][j2] += v1 * v2;
            }
        }
        // mean-MSE + l2|w|^2 normal equations; the bias stays unregularized.
        const double n = static_cast<double>(rows.size());
        for (std::size_t j = 0; j < m; ++j) a[j][j] += n * l2;

        beta_ = solve(a, b);
    }

    double predict(const SparseFeatures& row) const {
        double z = beta_.back();
        for (const auto& entry : row) {
            const auto it = remap_.find(entry.index);
            if (it != remap_.end()) z += beta_[it->second] * entry.value;
        }
        return z;
    }

private:
    static std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
        const std::size_t n = b.size();
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < n; ++r) {
                if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
            }
            std::swap(a[col], a[pivot]);
            std::swap(b[col], b[pivot]);
            REQUIRE(std::abs(a[col][col]) > 1e-12);
            for (std::size_t r = col + 1; r < n; ++r) {
                const double factor = a[r][col] / a[col][col];
                for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
                b[r] -= factor * b[col];
            }
        }
        std::vector<double> x(n, 0.0);
        for (std::size_t r = n; r-- > 0;) {
            double acc = b[r];
            for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
            x[r] = acc / a[r][r];
        }
        return x;
    }

    std::map<std::uint32_t, std::size_t> remap_;
    std::vector<double> beta_;
};

}  // namespace

TEST_SUITE("predictor") {

TEST_CASE("featurize is deterministic") {
    const auto config = small_config();
    CHECK(featurize("Some Text with MixedCase", config) ==
          featurize("some text with mixedcase", config));
    CHECK(featurize("one two three", config) == featurize("one two three", config));
}

TEST_CASE("featurize counts repeated grams before normalizing") {
    PredictorConfig config = small_config();
    config.word_ngram_min = 1;
    config.word_ngram_max = 1;
    config.char_ngram_max = 0;  // words only

    const auto doubled = featurize("a a", config);
    const auto single = featurize("a", config);
    REQUIRE(doubled.size() == 1);
    REQUIRE(single.size() == 1);
    CHECK(doubled[0].index == single[0].index);  // same support
    CHECK(doubled[0].value != single[0].value);
    CHECK(doubled[0].value == doctest::Approx(std::sqrt(2.0)));
    CHECK(single[0].value == doctest::Approx(1.0));
}

TEST_CASE("text shorter than the char n-gram range yields no features") {
    PredictorConfig config = small_config();
    config.word_ngram_max = 0;  // chars only, 3..5
    CHECK(featurize("ab", config).empty());
}

TEST_CASE("config validation") {
    PredictorConfig config = small_config();
    config.feature_dim = 300;  // not a power of two
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config = small_config();
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config = small_config();
    config.epochs = 0;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config = small_config();
    config.word_ngram_max = 0;
    config.char_ngram_max = 0;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    CHECK_THROWS_AS(train({}, small_config()), ConfigError);
}

TEST_CASE("a single instance is memorized to interpolation") {
    PredictorConfig config = small_config();
    config.feature_dim = 1 << 10;
    config.learning_rate = 0.1;
    config.epochs = 3000;
    config.l2 = 0.0;

    const std::vector<FormattedInstance> data = {
        make_instance("an oddly specific sentence about annotators", 2, 5)};
    const auto model = train(data, config);

    REQUIRE(model.training_log.size() == 3000);
    CHECK(model.training_log.back() < 1e-6);
    CHECK(predict(model, data[0].input_text) == doctest::Approx(0.4).epsilon(1e-3));
    CHECK(predict(model, data[0].input_text) == predict(model, data[0].input_text));
}

TEST_CASE("constant labels are fit by a constant predictor") {
    PredictorConfig config = small_config();
    config.epochs = 40;
    config.learning_rate = 0.05;

    Rng rng(8);
    std::vector<FormattedInstance> data;
    for (int i = 0; i < 50; ++i) {
        data.push_back(make_instance(synth::filler_text(rng, 6), 3, 10));
    }
    const auto model = train(data, config);
    for (const auto& instance : data) {
        CHECK(predict(model, instance.input_text) == doctest::Approx(0.3).epsilon(0.034));
    }
}

TEST_CASE("sgd approaches the closed-form ridge fit on marker data") {
    PredictorConfig config;
    config.feature_dim = 1 << 12;
    config.word_ngram_min = 1;
    config.word_ngram_max = 1;
    config.char_ngram_max = 0;
    config.epochs = 40;
    config.learning_rate = 0.05;
    config.seed = 5;

    const auto dataset = synth::marker_dataset(400, 21);
    const auto [train_part, test_part] = split(dataset, 0.8, 3);

    auto instances_of = [](const Dataset& part) {
        std::vector<FormattedInstance> instances;
        for (const auto& record : part.records) {
            instances.push_back(build_text_only_input(record));
        }
        return instances;
    };
    const auto train_set = instances_of(train_part);
    const auto test_set = instances_of(test_part);

    std::vector<SparseFeatures> train_rows;
    std::vector<double> train_targets;
    for (const auto& instance : train_set) {
        train_rows.push_back(featurize(instance.input_text, config));
        train_targets.push_back(instance.label.continuous.value());
    }
    const RidgeOracle oracle(train_rows, train_targets, config.l2);

    std::vector<double> oracle_preds, sgd_preds, targets;
    const auto model = train(train_set, config);
    for (const auto& instance : test_set) {
        const auto row = featurize(instance.input_text, config);
        oracle_preds.push_back(std::clamp(oracle.predict(row), 0.0, 1.0));
        sgd_preds.push_back(predict(model, instance.input_text));
        targets.push_back(instance.label.continuous.value());
    }

    const double oracle_mse = mse(oracle_preds, targets);
    const double sgd_mse = mse(sgd_preds, targets);
    CHECK(oracle_mse < 2e-3);  // the features carry the signal exactly
    CHECK(sgd_mse < 0.01);
    CHECK(sgd_mse < oracle_mse + 5e-3);
}

TEST_CASE("gradient check against finite differences") {
    Rng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        PredictorConfig config;
        config.feature_dim = 1 << 10;
        config.mode = trial % 2 == 0 ? PredictorMode::continuous : PredictorMode::binary;
        config.l2 = trial % 3 == 0 ? 0.0 : 1e-4;

        PredictorModel model;
        model.config = config;
        model.weights.resize(config.feature_dim);
        for (auto& w : model.weights) w = rng.unit() - 0.5;
        model.bias = rng.unit() - 0.5;
        model.training_log = {0.0};

        const auto instance = make_instance(synth::filler_text(rng, 7),
                                            static_cast<std::int64_t>(rng.below(4)), 5);
        CHECK(gradient_check(model, instance, 20, rng.next()) < 1e-4);
    }
}

TEST_CASE("zero-weight model on a zero-feature input has a bias-only gradient") {
    PredictorConfig config = small_config();
    config.word_ngram_max = 0;  // char 3..5 only, so "ab" has no grams
    PredictorModel model;
    model.config = config;
    model.weights.assign(config.feature_dim, 0.0);
    model.training_log = {0.0};

    const auto instance = make_instance("ab", 2, 5);
    CHECK(featurize(instance.input_text, config).empty());
    CHECK(gradient_check(model, instance) < 1e-9);
}

TEST_CASE("gradient vanishes at the minimizer") {
    PredictorConfig config = small_config();
    config.word_ngram_max = 0;
    PredictorModel model;
    model.config = config;
    model.weights.assign(config.feature_dim, 0.0);
    model.bias = 0.4;  // interpolates the zero-feature instance exactly
    model.training_log = {0.0};

    const auto instance = make_instance("ab", 2, 5);
    const double score = raw_score(model, featurize(instance.input_text, config));
    CHECK(std::abs(2.0 * (score - 0.4)) < 1e-8);  // analytic gradient norm
    CHECK(gradient_check(model, instance) < 1e-9);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    const auto dataset = synth::marker_dataset(60, 4);
    std::vector<FormattedInstance> instances;
    for (const auto& record : dataset.records) {
        instances.push_back(build_text_only_input(record));
    }
    PredictorConfig config = small_config();
    config.epochs = 5;

    const auto a = train(instances, config);
    const auto b = train(instances, config);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.training_log == b.training_log);

    config.seed = 99;
    const auto c = train(instances, config);
    CHECK(a.weights != c.weights);
}

TEST_CASE("full-batch training ignores instance order") {
    const auto dataset = synth::marker_dataset(20, 14);
    std::vector<FormattedInstance> instances;
    for (const auto& record : dataset.records) {
        instances.push_back(build_text_only_input(record));
    }
    PredictorConfig config = small_config();
    config.batch_size = static_cast<int>(instances.size());
    config.shuffle = false;
    config.epochs = 5;

    const auto forward = train(instances, config);
    std::vector<FormattedInstance> reversed(instances.rbegin(), instances.rend());
    const auto backward = train(reversed, config);
    CHECK(forward.weights == backward.weights);
    CHECK(forward.bias == backward.bias);
    CHECK(forward.training_log == backward.training_log);
}

TEST_CASE("final training loss does not exceed the initial loss") {
    Rng rng(70);
    std::vector<FormattedInstance> instances;
    for (int i = 0; i < 80; ++i) {
        instances.push_back(make_instance(synth::filler_text(rng, 6),
                                          static_cast<std::int64_t>(rng.below(4)), 5));
    }
    PredictorConfig config = small_config();
    config.epochs = 10;
    const auto model = train(instances, config);
    CHECK(model.training_log.back() <= model.training_log.front() + 1e-12);
}

TEST_CASE("predictions stay inside the unit interval") {
    const auto dataset = synth::marker_dataset(50, 6);
    std::vector<FormattedInstance> instances;
    for (const auto& record : dataset.records) {
        instances.push_back(build_text_only_input(record));
    }

    for (const auto mode : {PredictorMode::continuous, PredictorMode::binary}) {
        PredictorConfig config = small_config();
        config.mode = mode;
        config.epochs = 5;
        config.learning_rate = 0.5;  // deliberately aggressive
        const auto model = train(instances, config);
        Rng rng(15);
        for (int i = 0; i < 50; ++i) {
            const double p = predict(model, synth::filler_text(rng, 5));
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("predict refuses an untrained model") {
    PredictorModel model;
    model.config = small_config();
    model.weights.assign(model.config.feature_dim, 0.0);
    CHECK_THROWS_AS(predict(model, "anything"), ModelError);
}

TEST_CASE("personal demographics crack a label the text cannot carry") {
    // Text is constant; the pool's attribute determines the label. A
    // personal-format model interpolates; a text-only model is stuck at the
    // label variance.
    Rng rng(41);
    std::vector<AnnotationRecord> records;
    std::vector<std::vector<AnnotatorProfile>> profiles;
    const DemographicSchema schema({{"politics", {"libertarian", "traditionalist"}}});
    for (int r = 0; r < 120; ++r) {
        const bool libertarian = rng.below(2) == 0;
        AnnotationRecord record;
        record.text_id = "c" + std::to_string(r);
        record.text = "the same prompt shown to every annotator";
        record.votes = libertarian ? std::vector<int>{0, 0, 1, 1, 2}
                                   : std::vector<int>{0, 0, 0, 0, 0};
        std::vector<AnnotatorProfile> record_profiles;
        for (int i = 0; i < 5; ++i) {
            record.annotator_ids.push_back("a" + std::to_string(i));
            AnnotatorProfile profile;
            profile.annotator_id = record.annotator_ids.back();
            profile.values["politics"] = libertarian ? "libertarian" : "traditionalist";
            record_profiles.push_back(std::move(profile));
        }
        records.push_back(std::move(record));
        profiles.push_back(std::move(record_profiles));
    }

    std::vector<FormattedInstance> personal_train, personal_test, text_train, text_test;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const bool test = r >= 96;
        for (auto& instance : build_personal_inputs(records[r], profiles[r], schema,
                                                    DemographicFormat::templated)) {
            (test ? personal_test : personal_train).push_back(std::move(instance));
        }
        (test ? text_test : text_train).push_back(build_text_only_input(records[r]));
    }

    PredictorConfig config = small_config();
    config.epochs = 15;
    const auto personal_model = train(personal_train, config);
    const auto text_model = train(text_train, config);

    auto heldout_mse = [](const PredictorModel& model,
                          const std::vector<FormattedInstance>& test_set) {
        std::vector<double> preds, targets;
        for (const auto& instance : test_set) {
            preds.push_back(predict(model, instance.input_text));
            targets.push_back(instance.label.continuous.value());
        }
        return mse(preds, targets);
    };

    CHECK(heldout_mse(personal_model, personal_test) < 0.01);
    CHECK(heldout_mse(text_model, text_test) > 0.07);  // label-variance floor is 0.09
}

TEST_CASE("class weighting lifts the minority class in binary mode") {
    Rng rng(90);
    std::vector<FormattedInstance> instances;
    for (int i = 0; i < 200; ++i) {
        const bool positive = i % 10 == 0;  // 10% positives
        auto instance = make_instance(
            (positive ? std::string("divisive ") : std::string("")) + synth::filler_text(rng, 5),
            positive ? 1 : 0, 3);
        instances.push_back(std::move(instance));
    }
    PredictorConfig config = small_config();
    config.mode = PredictorMode::binary;
    config.epochs = 10;

    const auto plain = train(instances, config);
    config.class_weighting = true;
    const auto weighted = train(instances, config);

    double plain_sum = 0.0, weighted_sum = 0.0;
    for (const auto& instance : instances) {
        if (!instance.label.binary) continue;
        plain_sum += predict(plain, instance.input_text);
        weighted_sum += predict(weighted, instance.input_text);
    }
    CHECK(weighted_sum > plain_sum);
}

TEST_CASE("model serialization round-trips losslessly") {
    const auto dataset = synth::marker_dataset(40, 33);
    std::vector<FormattedInstance> instances;
    for (const auto& record : dataset.records) {
        instances.push_back(build_text_only_input(record));
    }
    PredictorConfig config = small_config();
    config.epochs = 3;
    config.mode = PredictorMode::binary;
    config.class_weighting = true;
    const auto model = train(instances, config);

    const auto path = std::filesystem::temp_directory_path() / "disagree_model_rt.bin";
    save_model(model, path);
    const auto loaded = load_model(path);
    std::filesystem::remove(path);

    CHECK(loaded.weights == model.weights);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.training_log == model.training_log);
    CHECK(loaded.config.mode == model.config.mode);
    CHECK(loaded.config.feature_dim == model.config.feature_dim);
    CHECK(loaded.config.seed == model.config.seed);
    CHECK(loaded.config.learning_rate == model.config.learning_rate);
    CHECK(loaded.config.class_weighting == model.config.class_weighting);
}

TEST_CASE("corrupt model files are rejected") {
    const auto path = std::filesystem::temp_directory_path() / "disagree_model_bad.bin";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fputs("not a model", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_model(path), IoError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), IoError);  // missing file
}

}  // TEST_SUITE
