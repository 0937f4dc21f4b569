#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disagree/annotation.hpp"

namespace disagree {

// One demographic attribute. An empty allowed_values list means free-form;
// an enumerated attribute must offer at least two values.
struct AttributeSpec {
    std::string name;
    std::vector<std::string> allowed_values;

    bool free_form() const { return allowed_values.empty(); }
};

class DemographicSchema {
public:
    DemographicSchema() = default;
    explicit DemographicSchema(std::vector<AttributeSpec> attributes);

    const std::vector<AttributeSpec>& attributes() const { return attributes_; }
    const AttributeSpec* find(std::string_view name) const;

private:
    std::vector<AttributeSpec> attributes_;
};

// The demographic values one annotator reported. Keys are attribute names
// and may cover any subset of the schema.
struct AnnotatorProfile {
    std::string annotator_id;
    std::map<std::string, std::string> values;
};

// Throws ValidationError on attributes missing from the schema or values
// outside an enumerated attribute's allowed set.
void validate_profile(const AnnotatorProfile& profile, const DemographicSchema& schema);

enum class DemographicFormat { templated, sentence };
enum class DemographicScope { none, group, personal };
enum class InstanceOrigin { text_only, group, personal };

// "templated" / "sentence" and "none" / "group" / "personal" are the CLI and
// config vocabulary; parsing is case-sensitive.
DemographicFormat parse_demographic_format(std::string_view name);
std::string_view to_string(DemographicFormat format);
DemographicScope parse_demographic_scope(std::string_view name);
std::string_view to_string(DemographicScope scope);
std::string_view to_string(InstanceOrigin origin);
InstanceOrigin parse_instance_origin(std::string_view name);

// A model-ready input string with its record-level label. annotator_id is
// set exactly for personal instances.
struct FormattedInstance {
    std::string text_id;
    std::string input_text;
    DisagreementLabel label;
    InstanceOrigin origin = InstanceOrigin::text_only;
    std::string annotator_id;
};

// "age: 22, politics: liberal, race: white, gender: woman."
// Attributes follow schema order, absent ones are skipped, names are
// lowercased, values are emitted verbatim. Empty profile -> empty string.
std::string format_templated(const AnnotatorProfile& profile, const DemographicSchema& schema);

// "the annotator is a 36 years old white woman."
// age/race/gender fill fixed slots; any other present attribute is appended
// as ", with <attribute> <value>" in schema order. A profile with no
// attributes at all falls back to a fixed unknown-demographics sentence.
std::string format_sentence(const AnnotatorProfile& profile, const DemographicSchema& schema);

std::string format_profile(const AnnotatorProfile& profile, const DemographicSchema& schema,
                           DemographicFormat format);

FormattedInstance build_text_only_input(const AnnotationRecord& record);

// All N profile strings, then the text, joined by single spaces with empty
// pieces dropped. profiles must align one-to-one with record.votes.
FormattedInstance build_group_input(const AnnotationRecord& record,
                                    std::span<const AnnotatorProfile> profiles,
                                    const DemographicSchema& schema, DemographicFormat format);

// One instance per annotator, each prefixed with that annotator's string
// alone; all N instances carry the record's label.
std::vector<FormattedInstance> build_personal_inputs(const AnnotationRecord& record,
                                                     std::span<const AnnotatorProfile> profiles,
                                                     const DemographicSchema& schema,
                                                     DemographicFormat format);

// Joins non-empty pieces with single spaces. Shared by group/personal input
// construction and the simulation's grid inputs so prefixes stay consistent.
std::string join_nonempty(std::span<const std::string> pieces);

}  // namespace disagree
