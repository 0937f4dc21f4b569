#include "disagree/annotation.hpp"

#include <algorithm>
#include <set>

#include "disagree/errors.hpp"

namespace disagree {

LabelSpace::LabelSpace(std::vector<std::string> class_names) : names_(std::move(class_names)) {
    if (names_.size() < 2) {
        throw ValidationError("label space needs at least 2 classes, got " +
                              std::to_string(names_.size()));
    }
    std::set<std::string_view> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) {
            throw ValidationError("duplicate class name '" + name + "' in label space");
        }
    }
}

int LabelSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<int>(i);
    }
    return -1;
}

void validate_record(const AnnotationRecord& record, const LabelSpace& space) {
    if (record.text.empty()) {
        throw ValidationError("record '" + record.text_id + "' has empty text");
    }
    if (record.votes.empty()) {
        throw ValidationError("record '" + record.text_id + "' has no votes");
    }
    if (record.votes.size() != record.annotator_ids.size()) {
        throw ValidationError("record '" + record.text_id + "' has " +
                              std::to_string(record.votes.size()) + " votes but " +
                              std::to_string(record.annotator_ids.size()) + " annotator ids");
    }
    for (int vote : record.votes) {
        if (vote < 0 || vote >= space.class_count()) {
            throw ValidationError("record '" + record.text_id + "' has vote index " +
                                  std::to_string(vote) + " outside [0, " +
                                  std::to_string(space.class_count()) + ")");
        }
    }
}

AgreementProfile agreement_rates(const AnnotationRecord& record, const LabelSpace& space) {
    validate_record(record, space);

    const int k = space.class_count();
    const auto n = static_cast<std::int64_t>(record.votes.size());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (int vote : record.votes) ++counts[static_cast<std::size_t>(vote)];

    AgreementProfile profile;
    profile.rates.reserve(static_cast<std::size_t>(k));
    std::int64_t best = -1;
    for (int c = 0; c < k; ++c) {
        const std::int64_t count = counts[static_cast<std::size_t>(c)];
        profile.rates.emplace_back(count, n);
        if (count > best) {  // strict: ties keep the lowest class index
            best = count;
            profile.majority_index = c;
        }
    }
    profile.majority_rate = Fraction(best, n);
    return profile;
}

DisagreementLabel disagreement_label(const AgreementProfile& profile) {
    DisagreementLabel label;
    label.binary = profile.majority_rate != Fraction(1, 1);
    label.continuous = Fraction(1, 1) - profile.majority_rate;
    return label;
}

DisagreementLabel disagreement_from_votes(std::span<const int> votes) {
    if (votes.empty()) throw ValidationError("cannot derive a disagreement label from zero votes");
    std::vector<int> sorted(votes.begin(), votes.end());
    std::sort(sorted.begin(), sorted.end());
    std::int64_t best = 0;
    std::int64_t run = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        run = (i > 0 && sorted[i] == sorted[i - 1]) ? run + 1 : 1;
        best = std::max(best, run);
    }
    const auto n = static_cast<std::int64_t>(votes.size());
    DisagreementLabel label;
    label.binary = best != n;
    label.continuous = Fraction(n - best, n);
    return label;
}

std::vector<Fraction> achievable_levels(int n_annotators, const LabelSpace& space) {
    if (n_annotators < 1) {
        throw ValidationError("achievable_levels needs at least 1 annotator");
    }
    const std::int64_t n = n_annotators;
    const std::int64_t k = space.class_count();
    const std::int64_t min_majority = (n + k - 1) / k;  // ceil(N/K)

    std::vector<Fraction> levels;
    for (std::int64_t m = n; m >= min_majority; --m) {
        levels.emplace_back(n - m, n);
    }
    // Distinct m give distinct m/N, so the ascending list is already unique.
    return levels;
}

}  // namespace disagree
