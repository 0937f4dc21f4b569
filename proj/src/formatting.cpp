#include "disagree/formatting.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "disagree/errors.hpp"

namespace disagree {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const std::string* profile_value(const AnnotatorProfile& profile, std::string_view attr) {
    auto it = profile.values.find(std::string(attr));
    return it == profile.values.end() ? nullptr : &it->second;
}

}  // namespace

DemographicSchema::DemographicSchema(std::vector<AttributeSpec> attributes)
    : attributes_(std::move(attributes)) {
    std::set<std::string_view> seen;
    for (const auto& attr : attributes_) {
        if (attr.name.empty()) throw ValidationError("schema attribute with empty name");
        if (!seen.insert(attr.name).second) {
            throw ValidationError("duplicate schema attribute '" + attr.name + "'");
        }
        if (!attr.free_form() && attr.allowed_values.size() < 2) {
            throw ValidationError("enumerated attribute '" + attr.name +
                                  "' needs at least 2 allowed values");
        }
    }
}

const AttributeSpec* DemographicSchema::find(std::string_view name) const {
    for (const auto& attr : attributes_) {
        if (attr.name == name) return &attr;
    }
    return nullptr;
}

void validate_profile(const AnnotatorProfile& profile, const DemographicSchema& schema) {
    for (const auto& [name, value] : profile.values) {
        const AttributeSpec* spec = schema.find(name);
        if (spec == nullptr) {
            throw ValidationError("profile '" + profile.annotator_id +
                                  "' uses attribute '" + name + "' not in the schema");
        }
        if (!spec->free_form() &&
            std::find(spec->allowed_values.begin(), spec->allowed_values.end(), value) ==
                spec->allowed_values.end()) {
            throw ValidationError("profile '" + profile.annotator_id + "' has value '" + value +
                                  "' outside the allowed set for attribute '" + name + "'");
        }
    }
}

DemographicFormat parse_demographic_format(std::string_view name) {
    if (name == "templated") return DemographicFormat::templated;
    if (name == "sentence") return DemographicFormat::sentence;
    throw ConfigError("unknown demographic format '" + std::string(name) +
                      "' (expected 'templated' or 'sentence')");
}

std::string_view to_string(DemographicFormat format) {
    return format == DemographicFormat::templated ? "templated" : "sentence";
}

DemographicScope parse_demographic_scope(std::string_view name) {
    if (name == "none") return DemographicScope::none;
    if (name == "group") return DemographicScope::group;
    if (name == "personal") return DemographicScope::personal;
    throw ConfigError("unknown demographics scope '" + std::string(name) +
                      "' (expected 'none', 'group' or 'personal')");
}

std::string_view to_string(DemographicScope scope) {
    switch (scope) {
        case DemographicScope::none: return "none";
        case DemographicScope::group: return "group";
        case DemographicScope::personal: return "personal";
    }
    return "none";
}

std::string_view to_string(InstanceOrigin origin) {
    switch (origin) {
        case InstanceOrigin::text_only: return "text-only";
        case InstanceOrigin::group: return "group";
        case InstanceOrigin::personal: return "personal";
    }
    return "text-only";
}

InstanceOrigin parse_instance_origin(std::string_view name) {
    if (name == "text-only") return InstanceOrigin::text_only;
    if (name == "group") return InstanceOrigin::group;
    if (name == "personal") return InstanceOrigin::personal;
    throw ValidationError("unknown instance origin '" + std::string(name) + "'");
}

std::string format_templated(const AnnotatorProfile& profile, const DemographicSchema& schema) {
    validate_profile(profile, schema);

    std::string out;
    for (const auto& attr : schema.attributes()) {
        const std::string* value = profile_value(profile, attr.name);
        if (value == nullptr) continue;
        if (!out.empty()) out += ", ";
        out += lower_ascii(attr.name);
        out += ": ";
        out += *value;
    }
    if (!out.empty()) out += ".";
    return out;
}

std::string format_sentence(const AnnotatorProfile& profile, const DemographicSchema& schema) {
    validate_profile(profile, schema);

    const std::string* age = profile_value(profile, "age");
    const std::string* race = profile_value(profile, "race");
    const std::string* gender = profile_value(profile, "gender");

    std::string slots;
    if (age != nullptr) slots = *age + " years old";
    if (race != nullptr) slots += (slots.empty() ? "" : " ") + *race;
    if (gender != nullptr) slots += (slots.empty() ? "" : " ") + *gender;

    std::string extras;
    for (const auto& attr : schema.attributes()) {
        if (attr.name == "age" || attr.name == "race" || attr.name == "gender") continue;
        const std::string* value = profile_value(profile, attr.name);
        if (value == nullptr) continue;
        extras += ", with " + lower_ascii(attr.name) + " " + *value;
    }

    if (slots.empty() && extras.empty()) {
        return "the annotator's demographics are unknown.";
    }
    std::string out = "the annotator is";
    if (!slots.empty()) out += " a " + slots;
    out += extras;
    out += ".";
    return out;
}

std::string format_profile(const AnnotatorProfile& profile, const DemographicSchema& schema,
                           DemographicFormat format) {
    return format == DemographicFormat::templated ? format_templated(profile, schema)
                                                  : format_sentence(profile, schema);
}

std::string join_nonempty(std::span<const std::string> pieces) {
    std::string out;
    for (const auto& piece : pieces) {
        if (piece.empty()) continue;
        if (!out.empty()) out += " ";
        out += piece;
    }
    return out;
}

namespace {

void check_alignment(const AnnotationRecord& record, std::span<const AnnotatorProfile> profiles) {
    if (profiles.size() != record.votes.size()) {
        throw ValidationError("record '" + record.text_id + "' has " +
                              std::to_string(record.votes.size()) + " votes but " +
                              std::to_string(profiles.size()) + " profiles");
    }
}

}  // namespace

FormattedInstance build_text_only_input(const AnnotationRecord& record) {
    if (record.text.empty()) {
        throw ValidationError("record '" + record.text_id + "' has empty text");
    }
    FormattedInstance instance;
    instance.text_id = record.text_id;
    instance.input_text = record.text;
    instance.label = disagreement_from_votes(record.votes);
    instance.origin = InstanceOrigin::text_only;
    return instance;
}

FormattedInstance build_group_input(const AnnotationRecord& record,
                                    std::span<const AnnotatorProfile> profiles,
                                    const DemographicSchema& schema, DemographicFormat format) {
    check_alignment(record, profiles);
    if (record.text.empty()) {
        throw ValidationError("record '" + record.text_id + "' has empty text");
    }

    std::vector<std::string> pieces;
    pieces.reserve(profiles.size() + 1);
    for (const auto& profile : profiles) {
        pieces.push_back(format_profile(profile, schema, format));
    }
    pieces.push_back(record.text);

    FormattedInstance instance;
    instance.text_id = record.text_id;
    instance.input_text = join_nonempty(pieces);
    instance.label = disagreement_from_votes(record.votes);
    instance.origin = InstanceOrigin::group;
    return instance;
}

std::vector<FormattedInstance> build_personal_inputs(const AnnotationRecord& record,
                                                     std::span<const AnnotatorProfile> profiles,
                                                     const DemographicSchema& schema,
                                                     DemographicFormat format) {
    check_alignment(record, profiles);
    if (record.text.empty()) {
        throw ValidationError("record '" + record.text_id + "' has empty text");
    }

    const DisagreementLabel label = disagreement_from_votes(record.votes);
    std::vector<FormattedInstance> instances;
    instances.reserve(profiles.size());
    for (const auto& profile : profiles) {
        std::vector<std::string> pieces{format_profile(profile, schema, format), record.text};
        FormattedInstance instance;
        instance.text_id = record.text_id;
        instance.input_text = join_nonempty(pieces);
        instance.label = label;
        instance.origin = InstanceOrigin::personal;
        instance.annotator_id = profile.annotator_id;
        instances.push_back(std::move(instance));
    }
    return instances;
}

}  // namespace disagree
