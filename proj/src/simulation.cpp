#include "disagree/simulation.hpp"

#include <algorithm>
#include <array>

#include "disagree/errors.hpp"
#include "disagree/evaluation.hpp"
#include "disagree/rng.hpp"

namespace disagree {

SimulationGrid grid_from_schema(const DemographicSchema& schema) {
    if (schema.attributes().empty()) {
        throw ConfigError("simulation grid needs at least one attribute");
    }
    std::size_t total = 1;
    for (const auto& attr : schema.attributes()) {
        if (attr.free_form()) {
            throw ConfigError("simulation grid attribute '" + attr.name +
                              "' must enumerate its values");
        }
        total *= attr.allowed_values.size();
    }

    SimulationGrid grid;
    grid.schema = schema;
    grid.profiles.reserve(total);

    const auto& attrs = schema.attributes();
    std::vector<std::size_t> cursor(attrs.size(), 0);
    for (std::size_t i = 0; i < total; ++i) {
        AnnotatorProfile profile;
        profile.annotator_id = "sim-" + std::to_string(i);
        for (std::size_t a = 0; a < attrs.size(); ++a) {
            profile.values[attrs[a].name] = attrs[a].allowed_values[cursor[a]];
        }
        grid.profiles.push_back(std::move(profile));
        // Odometer step: last attribute varies fastest.
        for (std::size_t a = attrs.size(); a-- > 0;) {
            if (++cursor[a] < attrs[a].allowed_values.size()) break;
            cursor[a] = 0;
        }
    }
    return grid;
}

SimulationGrid default_grid(GridKind kind) {
    std::vector<AttributeSpec> attrs;
    attrs.push_back({"gender", {"woman", "man", "transgender", "non-binary"}});
    attrs.push_back({"ethnicity",
                     {"white", "black or African American", "American Indian or Alaska Native",
                      "Asian", "Native Hawaiian or other pacific islanders", "Hispanic",
                      "some other race"}});
    if (kind == GridKind::gender_ethnicity_age) {
        attrs.push_back({"age", {"18-29", "30-39", "40-49", "50-59", "60+"}});
    }
    return grid_from_schema(DemographicSchema(std::move(attrs)));
}

std::string grid_input(const AnnotatorProfile& profile, const SimulationGrid& grid,
                       DemographicFormat format, std::string_view text) {
    const std::array<std::string, 2> pieces{format_profile(profile, grid.schema, format),
                                            std::string(text)};
    return join_nonempty(pieces);
}

SimulationSummary summarize_predictions(std::string_view text_id,
                                        const DisagreementLabel& original,
                                        std::vector<double> predictions) {
    if (predictions.empty()) throw ValidationError("cannot summarize zero predictions");

    SimulationSummary summary;
    summary.text_id = std::string(text_id);
    summary.original_label = original;
    summary.predictions = std::move(predictions);

    bool all_equal = true;
    for (double p : summary.predictions) all_equal = all_equal && p == summary.predictions[0];
    if (all_equal) {
        // variance is 0 exactly when every profile predicts the same value
        summary.mean = summary.predictions[0];
        summary.variance = 0.0;
    } else {
        double sum = 0.0;
        for (double p : summary.predictions) sum += p;
        summary.mean = sum / static_cast<double>(summary.predictions.size());
        double sq = 0.0;
        for (double p : summary.predictions) {
            const double d = p - summary.mean;
            sq += d * d;
        }
        summary.variance = sq / static_cast<double>(summary.predictions.size());
    }
    summary.delta_from_original = summary.mean - original.continuous.value();
    return summary;
}

SimulationSummary simulate_text(std::string_view text, std::string_view text_id,
                                const DisagreementLabel& original, const SimulationGrid& grid,
                                const PredictorModel& model, DemographicFormat format) {
    if (!model.trained()) throw ModelError("simulation requires a trained model");
    if (model.config.mode != PredictorMode::continuous) {
        throw ModelError("simulation requires a continuous-mode model");
    }
    if (text.empty()) throw ValidationError("cannot simulate an empty text");

    std::vector<double> predictions;
    predictions.reserve(grid.size());
    for (const auto& profile : grid.profiles) {
        predictions.push_back(predict(model, grid_input(profile, grid, format, text)));
    }
    return summarize_predictions(text_id, original, std::move(predictions));
}

std::vector<std::size_t> seeded_sample(std::size_t corpus_size, std::size_t sample_size,
                                       std::uint64_t seed) {
    if (corpus_size == 0) throw ValidationError("cannot sample from an empty corpus");
    if (sample_size == 0 || sample_size > corpus_size) {
        throw ValidationError("sample size " + std::to_string(sample_size) + " outside [1, " +
                              std::to_string(corpus_size) + "]");
    }
    std::vector<std::size_t> indices(corpus_size);
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(seed);
    fisher_yates(std::span<std::size_t>(indices), rng);
    indices.resize(sample_size);
    std::sort(indices.begin(), indices.end());
    return indices;
}

std::string_view to_string(DisagreementSource source) {
    switch (source) {
        case DisagreementSource::annotator_driven: return "annotator-driven";
        case DisagreementSource::text_inherent: return "text-inherent";
        case DisagreementSource::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

DisagreementSource classify_source(const SimulationSummary& summary, double variance_threshold,
                                   double delta_threshold) {
    if (variance_threshold < 0.0 || delta_threshold < 0.0) {
        throw ConfigError("classification thresholds must be non-negative");
    }
    const bool high_variance = summary.variance > variance_threshold;
    const bool large_delta = std::abs(summary.delta_from_original) > delta_threshold;
    if (high_variance && large_delta) return DisagreementSource::annotator_driven;
    if (!high_variance && !large_delta) return DisagreementSource::text_inherent;
    return DisagreementSource::indeterminate;
}

std::vector<SimulationSummary> batch_simulate(std::span<const AnnotationRecord> records,
                                              std::size_t sample_size, std::uint64_t seed,
                                              const SimulationGrid& grid,
                                              const PredictorModel& model,
                                              DemographicFormat format) {
    const auto indices = seeded_sample(records.size(), sample_size, seed);

    std::vector<SimulationSummary> summaries;
    summaries.reserve(sample_size);
    for (std::size_t i : indices) {
        const AnnotationRecord& record = records[i];
        summaries.push_back(simulate_text(record.text, record.text_id,
                                          disagreement_from_votes(record.votes), grid, model,
                                          format));
    }
    return summaries;
}

void write_scatter_csv(std::ostream& out, std::span<const SimulationSummary> summaries,
                       double variance_threshold, double delta_threshold) {
    out << "text_id,mean,variance,original_continuous,original_binary,source_class\n";
    for (const auto& s : summaries) {
        out << s.text_id << "," << format_double(s.mean) << "," << format_double(s.variance)
            << "," << format_double(s.original_label.continuous.value()) << ","
            << (s.original_label.binary ? 1 : 0) << ","
            << to_string(classify_source(s, variance_threshold, delta_threshold)) << "\n";
    }
}

void write_scatter_svg(std::ostream& out, std::span<const SimulationSummary> summaries) {
    constexpr int width = 640;
    constexpr int height = 480;
    constexpr int margin = 48;

    double max_variance = 0.0;
    for (const auto& s : summaries) max_variance = std::max(max_variance, s.variance);
    if (max_variance <= 0.0) max_variance = 1e-6;

    // Color by the original continuous level, dark blue (0) to red (1).
    auto color_for = [](double level) {
        const int r = static_cast<int>(level * 220.0);
        const int b = static_cast<int>((1.0 - level) * 220.0);
        return "rgb(" + std::to_string(r) + ",64," + std::to_string(b) + ")";
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" font-size=\"12\" text-anchor=\"middle\">variance</text>\n";
    out << "<text x=\"14\" y=\"" << height / 2
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << height / 2 << ")\">mean prediction</text>\n";

    const double plot_w = width - 2 * margin;
    const double plot_h = height - 2 * margin;
    for (const auto& s : summaries) {
        const double x = margin + (s.variance / max_variance) * plot_w;
        const double y = height - margin - s.mean * plot_h;
        out << "<circle cx=\"" << format_double(x) << "\" cy=\"" << format_double(y)
            << "\" r=\"3\" fill=\"" << color_for(s.original_label.continuous.value())
            << "\" fill-opacity=\"0.7\"/>\n";
    }
    out << "</svg>\n";
}

}  // namespace disagree
