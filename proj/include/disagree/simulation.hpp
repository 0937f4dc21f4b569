#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disagree/formatting.hpp"
#include "disagree/predictor.hpp"

namespace disagree {

// An artificial annotator pool: the full Cartesian product of the schema's
// attribute values, ordered lexicographically by (attribute order, value
// order), so the last attribute varies fastest.
struct SimulationGrid {
    DemographicSchema schema;
    std::vector<AnnotatorProfile> profiles;

    std::size_t size() const { return profiles.size(); }
};

enum class GridKind { gender_ethnicity, gender_ethnicity_age };

// gender_ethnicity: 4 genders x 7 ethnicities = 28 profiles.
// gender_ethnicity_age: x 5 age ranges = 140 profiles.
SimulationGrid default_grid(GridKind kind);

// Cartesian product over any schema whose attributes are all enumerated.
SimulationGrid grid_from_schema(const DemographicSchema& schema);

struct SimulationSummary {
    std::string text_id;
    DisagreementLabel original_label;
    std::vector<double> predictions;  // aligned with grid profile order
    double mean = 0.0;
    double variance = 0.0;  // population variance over the grid
    double delta_from_original = 0.0;
};

// Moments over an already-computed prediction vector. Variance is exactly 0
// when all predictions are equal.
SimulationSummary summarize_predictions(std::string_view text_id,
                                        const DisagreementLabel& original,
                                        std::vector<double> predictions);

// Builds a personal-format input per grid profile, predicts each, and
// summarizes. Requires a trained continuous-mode model.
SimulationSummary simulate_text(std::string_view text, std::string_view text_id,
                                const DisagreementLabel& original, const SimulationGrid& grid,
                                const PredictorModel& model, DemographicFormat format);

// The grid input string for one profile: profile prefix, a space, the text.
std::string grid_input(const AnnotatorProfile& profile, const SimulationGrid& grid,
                       DemographicFormat format, std::string_view text);

// Sorted sample of sample_size indices out of [0, corpus_size), drawn
// without replacement from a seeded shuffle.
std::vector<std::size_t> seeded_sample(std::size_t corpus_size, std::size_t sample_size,
                                       std::uint64_t seed);

enum class DisagreementSource { annotator_driven, text_inherent, indeterminate };

std::string_view to_string(DisagreementSource source);

// High variance and a large mean shift point at the annotator pool; low
// variance and a small shift point at the text itself; anything mixed is
// indeterminate.
DisagreementSource classify_source(const SimulationSummary& summary, double variance_threshold,
                                   double delta_threshold);

// Seeded sample (without replacement) of sample_size records, summarized in
// corpus order. Labels are derived from each record's votes.
std::vector<SimulationSummary> batch_simulate(std::span<const AnnotationRecord> records,
                                              std::size_t sample_size, std::uint64_t seed,
                                              const SimulationGrid& grid,
                                              const PredictorModel& model,
                                              DemographicFormat format);

// Scatter export: text_id, mean, variance, original_continuous,
// original_binary, source_class.
void write_scatter_csv(std::ostream& out, std::span<const SimulationSummary> summaries,
                       double variance_threshold, double delta_threshold);

// Minimal scatter plot (variance on x, mean on y, color by original level).
void write_scatter_svg(std::ostream& out, std::span<const SimulationSummary> summaries);

}  // namespace disagree
