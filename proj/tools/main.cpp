// Command-line surface for the disagreement toolkit: extract labels from
// voting records, build demographic-augmented inputs, train/evaluate the
// baseline predictor, simulate artificial annotator pools, and turn
// predictions into annotation-pool recommendations.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "disagree/applications.hpp"
#include "disagree/dataset_io.hpp"
#include "disagree/errors.hpp"
#include "disagree/evaluation.hpp"
#include "disagree/predictor.hpp"
#include "disagree/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string out_dir = ".";
    bool lenient = false;
};

fs::path out_path(const CommonOptions& common, const std::string& name) {
    fs::create_directories(common.out_dir);
    return fs::path(common.out_dir) / name;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw disagree::IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    cmd->add_flag("--lenient,!--strict", common.lenient,
                  "Skip malformed records instead of aborting");
}

std::vector<double> parse_levels(const std::string& spec, const disagree::Dataset* dataset,
                                 std::span<const disagree::FormattedInstance> instances) {
    if (spec != "auto") {
        std::vector<double> levels;
        std::stringstream stream(spec);
        std::string piece;
        while (std::getline(stream, piece, ',')) {
            try {
                levels.push_back(std::stod(piece));
            } catch (const std::exception&) {
                throw disagree::ConfigError("cannot parse level '" + piece + "'");
            }
        }
        if (levels.empty()) throw disagree::ConfigError("empty --levels list");
        if (!std::is_sorted(levels.begin(), levels.end())) {
            throw disagree::ConfigError("--levels must be sorted ascending");
        }
        return levels;
    }
    if (dataset != nullptr) {
        return disagree::to_doubles(disagree::dataset_levels(*dataset));
    }
    // No dataset at hand: the distinct label values present in the instances.
    std::vector<disagree::Fraction> seen;
    for (const auto& instance : instances) {
        if (std::find(seen.begin(), seen.end(), instance.label.continuous) == seen.end()) {
            seen.push_back(instance.label.continuous);
        }
    }
    std::sort(seen.begin(), seen.end());
    return disagree::to_doubles(seen);
}

// ---------------------------------------------------------------------------
// extract-labels: dataset -> labels CSV + distribution stats
// ---------------------------------------------------------------------------

struct ExtractOptions {
    CommonOptions common;
    std::string data_path;
};

void run_extract_labels(const ExtractOptions& opt) {
    disagree::IngestStats stats;
    const auto dataset = disagree::ingest(opt.data_path, !opt.common.lenient, &stats);

    std::vector<disagree::DisagreementLabel> labels;
    auto csv = open_out(out_path(opt.common, "labels.csv"));
    csv << "text_id,binary,continuous,majority_index,majority_rate,n_annotators\n";
    for (const auto& record : dataset.records) {
        const auto profile = disagree::agreement_rates(record, dataset.space);
        const auto label = disagree::disagreement_label(profile);
        labels.push_back(label);
        csv << record.text_id << "," << (label.binary ? 1 : 0) << ","
            << disagree::format_double(label.continuous.value()) << "," << profile.majority_index
            << "," << disagree::format_double(profile.majority_rate.value()) << ","
            << record.annotator_count() << "\n";
    }

    const auto levels = disagree::to_doubles(disagree::dataset_levels(dataset));
    const auto dist = disagree::dataset_stats(labels, levels);
    auto txt = open_out(out_path(opt.common, "stats.txt"));
    txt << "n_records=" << dist.n << "\n";
    txt << "mean=" << disagree::format_double(dist.mean) << "\n";
    txt << "variance=" << disagree::format_double(dist.variance) << "\n";
    for (const auto& [level, count] : dist.histogram) {
        txt << "level_" << disagree::format_double(level) << "=" << count << "\n";
    }
    if (stats.skipped_lines > 0) {
        std::cerr << "skipped " << stats.skipped_lines << " malformed lines\n";
    }
    std::cout << "wrote labels.csv and stats.txt for " << dataset.records.size()
              << " records to " << opt.common.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// format-inputs: dataset -> model-ready instance file(s)
// ---------------------------------------------------------------------------

struct FormatOptions {
    CommonOptions common;
    std::string data_path;
    std::string demographics = "none";
    std::string format = "templated";
    double split_ratio = 0.0;  // 0 disables splitting
    std::uint64_t seed = 1;
};

void run_format_inputs(const FormatOptions& opt) {
    disagree::IngestStats stats;
    const auto dataset = disagree::ingest(opt.data_path, !opt.common.lenient, &stats);
    const auto scope = disagree::parse_demographic_scope(opt.demographics);
    const auto format = disagree::parse_demographic_format(opt.format);

    auto build = [&](const disagree::Dataset& part) {
        std::size_t skipped = 0;
        auto instances =
            disagree::build_instances(part, scope, format, opt.common.lenient, &skipped);
        if (skipped > 0) {
            std::cerr << "skipped " << skipped << " records without demographics\n";
        }
        return instances;
    };

    if (opt.split_ratio > 0.0) {
        const auto [train_part, test_part] =
            disagree::split(dataset, opt.split_ratio, opt.seed);
        const auto train_instances = build(train_part);
        const auto test_instances = build(test_part);
        disagree::write_instances(out_path(opt.common, "instances_train.jsonl"),
                                  train_instances);
        disagree::write_instances(out_path(opt.common, "instances_test.jsonl"), test_instances);
        std::cout << "wrote " << train_instances.size() << " train and "
                  << test_instances.size() << " test instances to " << opt.common.out_dir
                  << "\n";
    } else {
        const auto instances = build(dataset);
        disagree::write_instances(out_path(opt.common, "instances.jsonl"), instances);
        std::cout << "wrote " << instances.size() << " instances to " << opt.common.out_dir
                  << "\n";
    }
}

// ---------------------------------------------------------------------------
// train: instance file -> model artifact
// ---------------------------------------------------------------------------

struct TrainOptions {
    CommonOptions common;
    std::string instances_path;
    disagree::PredictorConfig config;
    std::string mode = "continuous";
};

void run_train(const TrainOptions& opt) {
    auto config = opt.config;
    config.mode = disagree::parse_predictor_mode(opt.mode);
    const auto instances = disagree::read_instances(opt.instances_path);
    const auto model = disagree::train(instances, config);
    disagree::save_model(model, out_path(opt.common, "model.bin"));

    auto log = open_out(out_path(opt.common, "training_log.txt"));
    for (std::size_t epoch = 0; epoch < model.training_log.size(); ++epoch) {
        log << epoch + 1 << " " << disagree::format_double(model.training_log[epoch]) << "\n";
    }
    std::cout << "trained on " << instances.size() << " instances; final epoch loss "
              << disagree::format_double(model.training_log.back()) << "\n";
}

// ---------------------------------------------------------------------------
// evaluate: instances + (model | external predictions) -> report
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    CommonOptions common;
    std::string instances_path;
    std::string model_path;
    std::string predictions_path;
    std::string data_path;  // optional, for auto levels
    std::string levels = "auto";
    std::string mode = "";  // defaults to the model's mode
    std::string dataset_name = "dataset";
    std::string setup_name = "default";
};

void run_evaluate(const EvaluateOptions& opt) {
    if (opt.model_path.empty() == opt.predictions_path.empty()) {
        throw disagree::ConfigError("evaluate needs exactly one of --model or --predictions");
    }
    const auto instances = disagree::read_instances(opt.instances_path);

    std::vector<double> predictions;
    disagree::PredictorMode mode = disagree::PredictorMode::continuous;
    if (!opt.model_path.empty()) {
        const auto model = disagree::load_model(opt.model_path);
        mode = model.config.mode;
        predictions.reserve(instances.size());
        for (const auto& instance : instances) {
            predictions.push_back(disagree::predict(model, instance.input_text));
        }
    } else {
        predictions = disagree::load_external_predictions(instances, opt.predictions_path);
    }
    if (!opt.mode.empty()) mode = disagree::parse_predictor_mode(opt.mode);

    std::vector<double> labels;
    labels.reserve(instances.size());
    for (const auto& instance : instances) {
        labels.push_back(mode == disagree::PredictorMode::binary
                             ? (instance.label.binary ? 1.0 : 0.0)
                             : instance.label.continuous.value());
    }

    std::optional<disagree::Dataset> dataset;
    if (!opt.data_path.empty()) {
        dataset = disagree::ingest(opt.data_path, !opt.common.lenient);
    }
    const auto levels =
        parse_levels(opt.levels, dataset ? &*dataset : nullptr, instances);

    const auto report = disagree::evaluate(predictions, labels, levels, mode);
    open_out(out_path(opt.common, "report.txt")) << report.to_text();
    auto csv = open_out(out_path(opt.common, "report.csv"));
    csv << disagree::EvalReport::csv_header() << "\n"
        << report.to_csv_row(opt.dataset_name, opt.setup_name) << "\n";
    std::cout << report.to_text();
}

// ---------------------------------------------------------------------------
// simulate: dataset + model -> artificial-annotator scatter
// ---------------------------------------------------------------------------

struct SimulateOptions {
    CommonOptions common;
    std::string data_path;
    std::string model_path;
    std::string predictions_path;
    std::string emit_instances_path;
    int grid_size = 140;
    std::size_t sample = 0;  // 0 means the whole corpus
    std::uint64_t seed = 1;
    std::string format = "templated";
    double variance_threshold = 0.01;
    double delta_threshold = 0.1;
    bool svg = false;
};

void run_simulate(const SimulateOptions& opt) {
    if (opt.grid_size != 28 && opt.grid_size != 140) {
        throw disagree::ConfigError("--grid must be 28 or 140");
    }
    const auto grid = disagree::default_grid(opt.grid_size == 28
                                                 ? disagree::GridKind::gender_ethnicity
                                                 : disagree::GridKind::gender_ethnicity_age);
    const auto format = disagree::parse_demographic_format(opt.format);
    const auto dataset = disagree::ingest(opt.data_path, !opt.common.lenient);
    const std::size_t sample = opt.sample == 0 ? dataset.records.size() : opt.sample;
    const auto indices = disagree::seeded_sample(dataset.records.size(), sample, opt.seed);

    // Instance list for the external-predictor bridge: one personal-format
    // input per sampled text and grid profile, keyed by the profile id.
    auto bridge_instances = [&]() {
        std::vector<disagree::FormattedInstance> instances;
        instances.reserve(indices.size() * grid.size());
        for (std::size_t i : indices) {
            const auto& record = dataset.records[i];
            const auto label = disagree::disagreement_from_votes(record.votes);
            for (const auto& profile : grid.profiles) {
                disagree::FormattedInstance instance;
                instance.text_id = record.text_id;
                instance.annotator_id = profile.annotator_id;
                instance.origin = disagree::InstanceOrigin::personal;
                instance.input_text =
                    disagree::grid_input(profile, grid, format, record.text);
                instance.label = label;
                instances.push_back(std::move(instance));
            }
        }
        return instances;
    };

    if (!opt.emit_instances_path.empty()) {
        const auto instances = bridge_instances();
        disagree::write_instances(opt.emit_instances_path, instances);
        std::cout << "wrote " << instances.size() << " simulation inputs to "
                  << opt.emit_instances_path << "\n";
        return;
    }

    std::vector<disagree::SimulationSummary> summaries;
    if (!opt.predictions_path.empty()) {
        const auto instances = bridge_instances();
        const auto predictions =
            disagree::load_external_predictions(instances, opt.predictions_path);
        summaries.reserve(indices.size());
        std::size_t cursor = 0;
        for (std::size_t i : indices) {
            const auto& record = dataset.records[i];
            std::vector<double> slice(predictions.begin() + cursor,
                                      predictions.begin() + cursor + grid.size());
            cursor += grid.size();
            summaries.push_back(disagree::summarize_predictions(
                record.text_id, disagree::disagreement_from_votes(record.votes),
                std::move(slice)));
        }
    } else {
        if (opt.model_path.empty()) {
            throw disagree::ConfigError(
                "simulate needs --model, --predictions, or --emit-instances");
        }
        const auto model = disagree::load_model(opt.model_path);
        summaries = disagree::batch_simulate(dataset.records, sample, opt.seed, grid, model,
                                             format);
    }

    auto csv = open_out(out_path(opt.common, "scatter.csv"));
    disagree::write_scatter_csv(csv, summaries, opt.variance_threshold, opt.delta_threshold);
    if (opt.svg) {
        auto svg = open_out(out_path(opt.common, "scatter.svg"));
        disagree::write_scatter_svg(svg, summaries);
    }
    std::cout << "simulated " << summaries.size() << " texts over " << grid.size()
              << " profiles\n";
}

// ---------------------------------------------------------------------------
// recommend: predictions -> annotator counts and diverse-pool flags
// ---------------------------------------------------------------------------

struct RecommendOptions {
    CommonOptions common;
    std::string data_path;
    std::string model_path;
    std::string policy_path;
    std::string scatter_path;
};

disagree::AssignmentPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw disagree::IoError("cannot open policy file '" + path + "'");
    json parsed;
    try {
        in >> parsed;
    } catch (const json::exception& e) {
        throw disagree::ConfigError("policy file '" + path + "': " + e.what());
    }
    disagree::AssignmentPolicy policy;
    policy.count_bands.clear();
    for (const auto& band : parsed.at("count_bands")) {
        policy.count_bands.push_back(
            {band.at(0).get<double>(), band.at(1).get<int>()});
    }
    if (parsed.contains("diversity_variance_threshold")) {
        policy.diversity_variance_threshold =
            parsed["diversity_variance_threshold"].get<double>();
    }
    disagree::validate_policy(policy);
    return policy;
}

std::map<std::string, double> load_scatter_variances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw disagree::IoError("cannot open scatter file '" + path + "'");
    std::map<std::string, double> variances;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream stream(line);
        std::string text_id, mean, variance;
        std::getline(stream, text_id, ',');
        std::getline(stream, mean, ',');
        std::getline(stream, variance, ',');
        try {
            variances[text_id] = std::stod(variance);
        } catch (const std::exception&) {
            throw disagree::ValidationError("bad variance in scatter row '" + line + "'");
        }
    }
    return variances;
}

void run_recommend(const RecommendOptions& opt) {
    const auto dataset = disagree::ingest(opt.data_path, !opt.common.lenient);
    const auto model = disagree::load_model(opt.model_path);
    const auto policy = opt.policy_path.empty() ? disagree::AssignmentPolicy::defaults()
                                                : load_policy(opt.policy_path);
    std::map<std::string, double> variances;
    if (!opt.scatter_path.empty()) variances = load_scatter_variances(opt.scatter_path);

    std::vector<disagree::Recommendation> rows;
    rows.reserve(dataset.records.size());
    for (const auto& record : dataset.records) {
        disagree::Recommendation row;
        row.text_id = record.text_id;
        row.predicted = disagree::predict(model, record.text);
        row.recommended_count = disagree::recommend_count(row.predicted, policy);
        const auto it = variances.find(record.text_id);
        if (it != variances.end()) {
            disagree::SimulationSummary summary;
            summary.variance = it->second;
            row.diverse_pool = disagree::flag_for_diverse_pool(summary, policy);
        }
        rows.push_back(std::move(row));
    }
    auto csv = open_out(out_path(opt.common, "recommendations.csv"));
    disagree::write_recommendations_csv(csv, rows);
    std::cout << "wrote " << rows.size() << " recommendations to " << opt.common.out_dir
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annotation disagreement toolkit"};
    app.require_subcommand(1);

    ExtractOptions extract;
    auto* extract_cmd =
        app.add_subcommand("extract-labels", "Derive disagreement labels and dataset stats");
    extract_cmd->add_option("--data", extract.data_path, "Dataset (.jsonl)")->required();
    add_common(extract_cmd, extract.common);
    extract_cmd->callback([&] { run_extract_labels(extract); });

    FormatOptions format;
    auto* format_cmd =
        app.add_subcommand("format-inputs", "Build model-ready inputs from a dataset");
    format_cmd->add_option("--data", format.data_path, "Dataset (.jsonl)")->required();
    format_cmd->add_option("--demographics", format.demographics, "none|group|personal")
        ->capture_default_str();
    format_cmd->add_option("--format", format.format, "templated|sentence")
        ->capture_default_str();
    format_cmd->add_option("--split", format.split_ratio,
                           "Train ratio; also writes a held-out instance file");
    format_cmd->add_option("--seed", format.seed, "Split seed")->capture_default_str();
    add_common(format_cmd, format.common);
    format_cmd->callback([&] { run_format_inputs(format); });

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "Train the baseline predictor");
    train_cmd->add_option("--instances", train.instances_path, "Instance file (.jsonl)")
        ->required();
    train_cmd->add_option("--mode", train.mode, "binary|continuous")->capture_default_str();
    train_cmd->add_option("--seed", train.config.seed, "Training seed")->capture_default_str();
    train_cmd->add_option("--epochs", train.config.epochs, "Epochs")->capture_default_str();
    train_cmd->add_option("--lr", train.config.learning_rate, "Learning rate")
        ->capture_default_str();
    train_cmd->add_option("--batch", train.config.batch_size, "Batch size")
        ->capture_default_str();
    train_cmd->add_option("--dim", train.config.feature_dim, "Feature dimension (power of two)")
        ->capture_default_str();
    train_cmd->add_option("--l2", train.config.l2, "L2 penalty")->capture_default_str();
    train_cmd->add_option("--momentum", train.config.momentum, "Momentum")
        ->capture_default_str();
    train_cmd->add_flag("--no-shuffle{false}", train.config.shuffle,
                        "Disable the per-epoch shuffle");
    train_cmd->add_flag("--class-weighting", train.config.class_weighting,
                        "Reweight binary classes by inverse frequency");
    add_common(train_cmd, train.common);
    train_cmd->callback([&] { run_train(train); });

    EvaluateOptions evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions on an instance file");
    evaluate_cmd->add_option("--instances", evaluate.instances_path, "Instance file (.jsonl)")
        ->required();
    evaluate_cmd->add_option("--model", evaluate.model_path, "Model artifact");
    evaluate_cmd->add_option("--predictions", evaluate.predictions_path,
                             "External predictions (.jsonl)");
    evaluate_cmd->add_option("--data", evaluate.data_path,
                             "Dataset for auto level derivation");
    evaluate_cmd->add_option("--levels", evaluate.levels, "auto or comma-separated levels")
        ->capture_default_str();
    evaluate_cmd->add_option("--mode", evaluate.mode, "Override the scoring mode");
    evaluate_cmd->add_option("--name", evaluate.dataset_name, "Dataset name for the CSV row")
        ->capture_default_str();
    evaluate_cmd->add_option("--setup", evaluate.setup_name, "Setup name for the CSV row")
        ->capture_default_str();
    add_common(evaluate_cmd, evaluate.common);
    evaluate_cmd->callback([&] { run_evaluate(evaluate); });

    SimulateOptions simulate;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Predict disagreement over artificial annotator pools");
    simulate_cmd->add_option("--data", simulate.data_path, "Dataset (.jsonl)")->required();
    simulate_cmd->add_option("--model", simulate.model_path, "Model artifact");
    simulate_cmd->add_option("--predictions", simulate.predictions_path,
                             "External predictions for the emitted instances");
    simulate_cmd->add_option("--emit-instances", simulate.emit_instances_path,
                             "Write simulation inputs for an external predictor and exit");
    simulate_cmd->add_option("--grid", simulate.grid_size, "28 or 140")->capture_default_str();
    simulate_cmd->add_option("--sample", simulate.sample, "Texts to sample (0 = all)")
        ->capture_default_str();
    simulate_cmd->add_option("--seed", simulate.seed, "Sampling seed")->capture_default_str();
    simulate_cmd->add_option("--format", simulate.format, "templated|sentence")
        ->capture_default_str();
    simulate_cmd->add_option("--var-threshold", simulate.variance_threshold,
                             "Variance threshold for source classification")
        ->capture_default_str();
    simulate_cmd->add_option("--delta-threshold", simulate.delta_threshold,
                             "Mean-shift threshold for source classification")
        ->capture_default_str();
    simulate_cmd->add_flag("--svg", simulate.svg, "Also render scatter.svg");
    add_common(simulate_cmd, simulate.common);
    simulate_cmd->callback([&] { run_simulate(simulate); });

    RecommendOptions recommend;
    auto* recommend_cmd =
        app.add_subcommand("recommend", "Recommend annotator counts per text");
    recommend_cmd->add_option("--data", recommend.data_path, "Dataset (.jsonl)")->required();
    recommend_cmd->add_option("--model", recommend.model_path, "Model artifact")->required();
    recommend_cmd->add_option("--policy", recommend.policy_path, "Policy JSON file");
    recommend_cmd->add_option("--scatter", recommend.scatter_path,
                              "Simulation scatter CSV for diverse-pool flags");
    add_common(recommend_cmd, recommend.common);
    recommend_cmd->callback([&] { run_recommend(recommend); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems exit 2, help exits 0
    } catch (const disagree::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
