#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "disagree/simulation.hpp"

namespace disagree {

struct CountBand {
    double upper_bound = 1.0;  // inclusive
    int annotator_count = 1;
};

// Maps predicted disagreement to a recommended annotator count, plus the
// variance cutoff above which a text should go to a demographically broad
// pool. Bands must have strictly increasing bounds ending at 1.0 with
// non-decreasing counts.
struct AssignmentPolicy {
    std::vector<CountBand> count_bands;
    double diversity_variance_threshold = 0.01;

    static AssignmentPolicy defaults();
};

void validate_policy(const AssignmentPolicy& policy);

// Count of the first band whose upper bound covers the prediction.
int recommend_count(double predicted, const AssignmentPolicy& policy);

// True when the simulated predictions vary enough across profiles that the
// disagreement depends on who annotates.
bool flag_for_diverse_pool(const SimulationSummary& summary, const AssignmentPolicy& policy);

struct Recommendation {
    std::string text_id;
    double predicted = 0.0;
    int recommended_count = 0;
    bool diverse_pool = false;
};

void write_recommendations_csv(std::ostream& out, const std::vector<Recommendation>& rows);

}  // namespace disagree
