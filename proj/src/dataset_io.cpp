#include "disagree/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include <json.hpp>

#include "disagree/errors.hpp"
#include "disagree/rng.hpp"

namespace disagree {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json parse_line(const std::string& line, std::size_t line_number) {
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
        throw ValidationError("line " + std::to_string(line_number) + ": not valid JSON");
    }
    return parsed;
}

std::string require_string(const json& obj, const char* key, std::size_t line_number) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw ValidationError("line " + std::to_string(line_number) + ": missing string field '" +
                              key + "'");
    }
    return obj[key].get<std::string>();
}

DemographicSchema parse_schema(const json& header, std::size_t line_number) {
    if (!header.contains("schema")) return DemographicSchema();
    const json& schema_json = header["schema"];
    if (!schema_json.is_array()) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": 'schema' must be an array");
    }
    std::vector<AttributeSpec> attrs;
    for (const auto& entry : schema_json) {
        AttributeSpec spec;
        spec.name = require_string(entry, "name", line_number);
        if (!entry.contains("values")) {
            throw ValidationError("line " + std::to_string(line_number) + ": schema attribute '" +
                                  spec.name + "' missing 'values'");
        }
        const json& values = entry["values"];
        if (values.is_string() && values.get<std::string>() == "free-form") {
            // empty allowed list marks free-form
        } else if (values.is_array()) {
            for (const auto& v : values) {
                if (!v.is_string()) {
                    throw ValidationError("line " + std::to_string(line_number) +
                                          ": schema values must be strings");
                }
                spec.allowed_values.push_back(v.get<std::string>());
            }
        } else {
            throw ValidationError("line " + std::to_string(line_number) + ": schema attribute '" +
                                  spec.name + "' values must be \"free-form\" or an array");
        }
        attrs.push_back(std::move(spec));
    }
    return DemographicSchema(std::move(attrs));
}

int parse_vote(const json& vote, const LabelSpace& space, const std::string& text_id) {
    if (vote.is_number_integer()) {
        const int index = vote.get<int>();
        if (index < 0 || index >= space.class_count()) {
            throw ValidationError("record '" + text_id + "' has vote index " +
                                  std::to_string(index) + " outside [0, " +
                                  std::to_string(space.class_count()) + ")");
        }
        return index;
    }
    if (vote.is_string()) {
        const std::string name = vote.get<std::string>();
        const int index = space.index_of(name);
        if (index < 0) {
            throw ValidationError("record '" + text_id + "' votes for unknown class '" + name +
                                  "'");
        }
        return index;
    }
    throw ValidationError("record '" + text_id + "' has a vote that is neither index nor name");
}

}  // namespace

Dataset ingest(const std::filesystem::path& path, bool strict, IngestStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");

    std::string line;
    std::size_t line_number = 0;

    // Header line.
    if (!std::getline(in, line)) {
        throw ValidationError("dataset file '" + path.string() + "' is empty");
    }
    ++line_number;
    const json header = parse_line(line, line_number);
    if (!header.contains("format_version") || !header["format_version"].is_number_integer() ||
        header["format_version"].get<int>() != kFormatVersion) {
        throw ValidationError("line 1: header must declare format_version " +
                              std::to_string(kFormatVersion));
    }
    if (!header.contains("class_names") || !header["class_names"].is_array()) {
        throw ValidationError("line 1: header must declare a class_names array");
    }
    std::vector<std::string> class_names;
    for (const auto& name : header["class_names"]) {
        if (!name.is_string()) throw ValidationError("line 1: class names must be strings");
        class_names.push_back(name.get<std::string>());
    }

    Dataset dataset{LabelSpace(std::move(class_names)), parse_schema(header, 1), {}, {}};

    std::set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        try {
            const json rec = parse_line(line, line_number);

            AnnotationRecord record;
            record.text_id = require_string(rec, "text_id", line_number);
            record.text = require_string(rec, "text", line_number);
            if (!seen_ids.insert(record.text_id).second) {
                throw ValidationError("line " + std::to_string(line_number) +
                                      ": duplicate text_id '" + record.text_id + "'");
            }

            if (!rec.contains("votes") || !rec["votes"].is_array()) {
                throw ValidationError("line " + std::to_string(line_number) +
                                      ": record '" + record.text_id + "' missing votes array");
            }
            for (const auto& vote : rec["votes"]) {
                record.votes.push_back(parse_vote(vote, dataset.space, record.text_id));
            }
            if (!rec.contains("annotators") || !rec["annotators"].is_array()) {
                throw ValidationError("line " + std::to_string(line_number) + ": record '" +
                                      record.text_id + "' missing annotators array");
            }
            for (const auto& a : rec["annotators"]) {
                if (!a.is_string()) {
                    throw ValidationError("line " + std::to_string(line_number) +
                                          ": annotator ids must be strings");
                }
                record.annotator_ids.push_back(a.get<std::string>());
            }
            validate_record(record, dataset.space);

            std::vector<AnnotatorProfile> record_profiles;
            if (rec.contains("profiles")) {
                if (!rec["profiles"].is_array() ||
                    rec["profiles"].size() != record.votes.size()) {
                    throw ValidationError("line " + std::to_string(line_number) + ": record '" +
                                          record.text_id +
                                          "' profiles must align with its votes");
                }
                std::size_t i = 0;
                for (const auto& p : rec["profiles"]) {
                    if (!p.is_object()) {
                        throw ValidationError("line " + std::to_string(line_number) +
                                              ": profiles must be objects");
                    }
                    AnnotatorProfile profile;
                    profile.annotator_id = record.annotator_ids[i++];
                    for (const auto& [key, value] : p.items()) {
                        if (!value.is_string()) {
                            throw ValidationError("line " + std::to_string(line_number) +
                                                  ": profile values must be strings");
                        }
                        profile.values[key] = value.get<std::string>();
                    }
                    validate_profile(profile, dataset.schema);
                    record_profiles.push_back(std::move(profile));
                }
            }

            dataset.records.push_back(std::move(record));
            dataset.profiles.push_back(std::move(record_profiles));
        } catch (const ValidationError&) {
            if (strict) throw;
            if (stats != nullptr) ++stats->skipped_lines;
        }
    }

    if (dataset.records.empty()) {
        throw ValidationError("dataset file '" + path.string() + "' has no records");
    }
    return dataset;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

    json header;
    header["format_version"] = kFormatVersion;
    header["class_names"] = dataset.space.class_names();
    if (!dataset.schema.attributes().empty()) {
        json schema = json::array();
        for (const auto& attr : dataset.schema.attributes()) {
            json entry;
            entry["name"] = attr.name;
            if (attr.free_form()) {
                entry["values"] = "free-form";
            } else {
                entry["values"] = attr.allowed_values;
            }
            schema.push_back(entry);
        }
        header["schema"] = schema;
    }
    out << header.dump() << "\n";

    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const AnnotationRecord& record = dataset.records[i];
        json rec;
        rec["text_id"] = record.text_id;
        rec["text"] = record.text;
        rec["votes"] = record.votes;
        rec["annotators"] = record.annotator_ids;
        if (dataset.has_profiles(i)) {
            json profiles = json::array();
            for (const auto& profile : dataset.profiles[i]) {
                profiles.push_back(json(profile.values));
            }
            rec["profiles"] = profiles;
        }
        out << rec.dump() << "\n";
    }
    if (!out) throw IoError("failed writing dataset to '" + path.string() + "'");
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) {
        throw ConfigError("split ratio must lie strictly between 0 and 1");
    }

    std::vector<std::size_t> indices(dataset.records.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(seed);
    fisher_yates(std::span<std::size_t>(indices), rng);

    const auto first_count =
        static_cast<std::size_t>(ratio * static_cast<double>(indices.size()));
    std::vector<std::size_t> first(indices.begin(), indices.begin() + first_count);
    std::vector<std::size_t> second(indices.begin() + first_count, indices.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());

    auto take = [&dataset](const std::vector<std::size_t>& picks) {
        Dataset part{dataset.space, dataset.schema, {}, {}};
        part.records.reserve(picks.size());
        part.profiles.reserve(picks.size());
        for (std::size_t i : picks) {
            part.records.push_back(dataset.records[i]);
            part.profiles.push_back(dataset.profiles[i]);
        }
        return part;
    };
    return {take(first), take(second)};
}

std::vector<FormattedInstance> build_instances(const Dataset& dataset, DemographicScope scope,
                                               DemographicFormat format, bool lenient,
                                               std::size_t* skipped) {
    std::vector<FormattedInstance> instances;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const AnnotationRecord& record = dataset.records[i];
        if (scope != DemographicScope::none && !dataset.has_profiles(i)) {
            if (!lenient) {
                throw ValidationError("record '" + record.text_id +
                                      "' has no demographics but the " +
                                      std::string(to_string(scope)) +
                                      " scope was requested");
            }
            if (skipped != nullptr) ++*skipped;
            continue;
        }
        switch (scope) {
            case DemographicScope::none:
                instances.push_back(build_text_only_input(record));
                break;
            case DemographicScope::group:
                instances.push_back(
                    build_group_input(record, dataset.profiles[i], dataset.schema, format));
                break;
            case DemographicScope::personal:
                for (auto& instance : build_personal_inputs(record, dataset.profiles[i],
                                                            dataset.schema, format)) {
                    instances.push_back(std::move(instance));
                }
                break;
        }
    }
    return instances;
}

void write_instances(const std::filesystem::path& path,
                     std::span<const FormattedInstance> instances) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& instance : instances) {
        json line;
        line["text_id"] = instance.text_id;
        line["origin"] = std::string(to_string(instance.origin));
        if (instance.origin == InstanceOrigin::personal) {
            line["annotator_id"] = instance.annotator_id;
        }
        line["input_text"] = instance.input_text;
        line["binary"] = instance.label.binary ? 1 : 0;
        line["continuous_num"] = instance.label.continuous.num;
        line["continuous_den"] = instance.label.continuous.den;
        out << line.dump() << "\n";
    }
    if (!out) throw IoError("failed writing instances to '" + path.string() + "'");
}

std::vector<FormattedInstance> read_instances(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instances file '" + path.string() + "'");

    std::vector<FormattedInstance> instances;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const json obj = parse_line(line, line_number);

        FormattedInstance instance;
        instance.text_id = require_string(obj, "text_id", line_number);
        instance.origin = parse_instance_origin(require_string(obj, "origin", line_number));
        if (instance.origin == InstanceOrigin::personal) {
            instance.annotator_id = require_string(obj, "annotator_id", line_number);
        }
        instance.input_text = require_string(obj, "input_text", line_number);
        if (instance.input_text.empty()) {
            throw ValidationError("line " + std::to_string(line_number) + ": empty input_text");
        }
        if (!obj.contains("binary") || !obj.contains("continuous_num") ||
            !obj.contains("continuous_den")) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": instance missing label fields");
        }
        instance.label.binary = obj["binary"].get<int>() != 0;
        instance.label.continuous =
            Fraction(obj["continuous_num"].get<std::int64_t>(),
                     obj["continuous_den"].get<std::int64_t>());
        if (instance.label.binary != (instance.label.continuous.num != 0)) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": binary flag contradicts the continuous rate");
        }
        instances.push_back(std::move(instance));
    }
    if (instances.empty()) {
        throw ValidationError("instances file '" + path.string() + "' has no instances");
    }
    return instances;
}

namespace {

std::string prediction_key(const std::string& text_id, const std::string& annotator_id) {
    return text_id + "\x1f" + annotator_id;
}

}  // namespace

std::vector<double> load_external_predictions(std::span<const FormattedInstance> instances,
                                              const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions file '" + path.string() + "'");

    std::map<std::string, double> by_key;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const json obj = parse_line(line, line_number);
        const std::string text_id = require_string(obj, "text_id", line_number);
        const std::string annotator_id =
            obj.contains("annotator_id") ? obj["annotator_id"].get<std::string>() : "";
        if (!obj.contains("prediction") || !obj["prediction"].is_number()) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": missing numeric 'prediction'");
        }
        const auto [it, fresh] =
            by_key.emplace(prediction_key(text_id, annotator_id), obj["prediction"].get<double>());
        (void)it;
        if (!fresh) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": duplicate prediction for text_id '" + text_id +
                                  "' annotator_id '" + annotator_id + "'");
        }
    }

    std::vector<double> predictions;
    predictions.reserve(instances.size());
    std::set<std::string> used;
    for (const auto& instance : instances) {
        const std::string key = prediction_key(instance.text_id, instance.annotator_id);
        const auto it = by_key.find(key);
        if (it == by_key.end()) {
            throw ValidationError("no prediction for text_id '" + instance.text_id +
                                  "' annotator_id '" + instance.annotator_id + "'");
        }
        if (!used.insert(key).second) {
            throw ValidationError("instances repeat the key text_id '" + instance.text_id +
                                  "' annotator_id '" + instance.annotator_id + "'");
        }
        predictions.push_back(it->second);
    }
    if (used.size() != by_key.size()) {
        throw ValidationError("predictions file has " +
                              std::to_string(by_key.size() - used.size()) +
                              " entries matching no instance");
    }
    return predictions;
}

std::vector<Fraction> dataset_levels(const Dataset& dataset) {
    std::set<int> counts;
    for (const auto& record : dataset.records) counts.insert(record.annotator_count());

    std::vector<Fraction> levels;
    for (int n : counts) {
        for (const auto& level : achievable_levels(n, dataset.space)) {
            if (std::find(levels.begin(), levels.end(), level) == levels.end()) {
                levels.push_back(level);
            }
        }
    }
    std::sort(levels.begin(), levels.end());
    return levels;
}

}  // namespace disagree
