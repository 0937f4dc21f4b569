#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "disagree/annotation.hpp"
#include "disagree/formatting.hpp"

namespace disagree {

// In-memory dataset: profiles[i] aligns with records[i].votes, or is empty
// when the record carries no demographics.
struct Dataset {
    LabelSpace space;
    DemographicSchema schema;
    std::vector<AnnotationRecord> records;
    std::vector<std::vector<AnnotatorProfile>> profiles;

    bool has_profiles(std::size_t record_index) const {
        return !profiles[record_index].empty();
    }
};

struct IngestStats {
    std::size_t skipped_lines = 0;
};

// Line-delimited JSON: a header line declaring format_version, class_names
// and the demographic schema, then one record per line with text_id, text,
// votes (class names or indices), annotators and optional aligned profiles.
// Strict mode throws on the first malformed line (naming the line number);
// lenient mode skips bad record lines and counts them.
Dataset ingest(const std::filesystem::path& path, bool strict = true,
               IngestStats* stats = nullptr);

// Inverse of ingest; ingest(write_dataset(d)) reproduces d exactly.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

// Seeded shuffle then split whole records, so every instance later built
// from one text lands on a single side. ratio is the first side's share.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double ratio, std::uint64_t seed);

// Model-ready instances for the whole dataset under one demographics scope.
// A record without profiles under a group/personal scope is an error naming
// its text_id, or is skipped and counted when lenient.
std::vector<FormattedInstance> build_instances(const Dataset& dataset, DemographicScope scope,
                                               DemographicFormat format, bool lenient = false,
                                               std::size_t* skipped = nullptr);

// Formatted instances as line-delimited JSON with the exact rational label.
void write_instances(const std::filesystem::path& path,
                     std::span<const FormattedInstance> instances);
std::vector<FormattedInstance> read_instances(const std::filesystem::path& path);

// Joins externally computed predictions (JSON lines with text_id, optional
// annotator_id, prediction) 1:1 against an instance list. Throws on missing,
// duplicate, or unmatched keys. The returned vector aligns with instances.
std::vector<double> load_external_predictions(std::span<const FormattedInstance> instances,
                                              const std::filesystem::path& path);

// Union of achievable disagreement levels over all records in the dataset.
std::vector<Fraction> dataset_levels(const Dataset& dataset);

}  // namespace disagree
