#include "disagree/applications.hpp"

#include "disagree/errors.hpp"
#include "disagree/evaluation.hpp"

namespace disagree {

AssignmentPolicy AssignmentPolicy::defaults() {
    AssignmentPolicy policy;
    policy.count_bands = {{0.05, 1}, {0.2, 3}, {1.0, 5}};
    policy.diversity_variance_threshold = 0.01;
    return policy;
}

void validate_policy(const AssignmentPolicy& policy) {
    if (policy.count_bands.empty()) throw ConfigError("policy has no count bands");
    double previous = -1.0;
    int previous_count = 0;
    for (const auto& band : policy.count_bands) {
        if (band.upper_bound <= previous) {
            throw ConfigError("policy band bounds must be strictly increasing");
        }
        if (band.annotator_count < 1) {
            throw ConfigError("policy annotator counts must be positive");
        }
        if (band.annotator_count < previous_count) {
            throw ConfigError("policy annotator counts must be non-decreasing");
        }
        previous = band.upper_bound;
        previous_count = band.annotator_count;
    }
    if (policy.count_bands.back().upper_bound != 1.0) {
        throw ConfigError("the final policy band must end at 1.0");
    }
    if (policy.diversity_variance_threshold < 0.0) {
        throw ConfigError("diversity variance threshold must be non-negative");
    }
}

int recommend_count(double predicted, const AssignmentPolicy& policy) {
    validate_policy(policy);
    if (predicted < 0.0 || predicted > 1.0) {
        throw ConfigError("predicted disagreement " + format_double(predicted) +
                          " outside [0, 1]");
    }
    for (const auto& band : policy.count_bands) {
        if (predicted <= band.upper_bound) return band.annotator_count;
    }
    return policy.count_bands.back().annotator_count;
}

bool flag_for_diverse_pool(const SimulationSummary& summary, const AssignmentPolicy& policy) {
    validate_policy(policy);
    return summary.variance > policy.diversity_variance_threshold;
}

void write_recommendations_csv(std::ostream& out, const std::vector<Recommendation>& rows) {
    out << "text_id,predicted,recommended_count,diverse_pool_flag\n";
    for (const auto& row : rows) {
        out << row.text_id << "," << format_double(row.predicted) << ","
            << row.recommended_count << "," << (row.diverse_pool ? 1 : 0) << "\n";
    }
}

}  // namespace disagree
