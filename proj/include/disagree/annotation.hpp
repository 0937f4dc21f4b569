#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disagree/fraction.hpp"

namespace disagree {

// The label universe of one dataset: K >= 2 distinct class names. Vote
// indices everywhere else are 0-based positions into this list.
class LabelSpace {
public:
    explicit LabelSpace(std::vector<std::string> class_names);

    int class_count() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& class_names() const { return names_; }

    // -1 when the name is unknown.
    int index_of(std::string_view name) const;

private:
    std::vector<std::string> names_;
};

// One text with its N votes. votes[i] was cast by annotator_ids[i].
struct AnnotationRecord {
    std::string text_id;
    std::string text;
    std::vector<int> votes;
    std::vector<std::string> annotator_ids;

    int annotator_count() const { return static_cast<int>(votes.size()); }
};

// Throws ValidationError (naming text_id) on empty text, empty votes,
// vote/annotator arity mismatch, or a vote index outside [0, K).
void validate_record(const AnnotationRecord& record, const LabelSpace& space);

// Per-class agreement rates r_k = count_k / N, plus the majority class.
// Rates are exact rationals; they sum to exactly 1.
struct AgreementProfile {
    std::vector<Fraction> rates;
    int majority_index = 0;
    Fraction majority_rate;
};

// binary is 1 exactly when anyone dissented from the majority;
// continuous = 1 - majority_rate, in [0, 1 - ceil(N/K)/N].
struct DisagreementLabel {
    bool binary = false;
    Fraction continuous;
};

// Counts votes per class. Majority ties break to the lowest class index;
// the disagreement labels are tie-break invariant either way.
AgreementProfile agreement_rates(const AnnotationRecord& record, const LabelSpace& space);

DisagreementLabel disagreement_label(const AgreementProfile& profile);

// Same label the agreement_rates -> disagreement_label path produces, computed
// straight from the votes. Needs no LabelSpace since only the top count matters.
DisagreementLabel disagreement_from_votes(std::span<const int> votes);

// Every continuous disagreement value reachable with n annotators over the
// space's K classes: {1 - m/N : m = ceil(N/K) .. N}, ascending.
std::vector<Fraction> achievable_levels(int n_annotators, const LabelSpace& space);

}  // namespace disagree
