#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "disagree/dataset_io.hpp"
#include "disagree/errors.hpp"
#include "synthetic.hpp"

using namespace disagree;

namespace {

namespace fs = std::filesystem;

class TempFile {
public:
    explicit TempFile(const std::string& name)
        : path_(fs::temp_directory_path() / ("disagree_test_" + name)) {}
    ~TempFile() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    const fs::path& path() const { return path_; }
    void write(const std::string& content) const {
        std::ofstream out(path_);
        out << content;
    }

private:
    fs::path path_;
};

const char* kHeader =
    R"({"format_version":1,"class_names":["yes","maybe","no"],)"
    R"("schema":[{"name":"age","values":"free-form"},{"name":"gender","values":["woman","man"]}]})";

std::string sample_file() {
    std::string content = kHeader;
    content += "\n";
    content +=
        R"({"text_id":"p1","text":"first post","votes":["yes","maybe","no"],)"
        R"("annotators":["a1","a2","a3"],)"
        R"("profiles":[{"age":"22","gender":"woman"},{"age":"34"},{"gender":"man"}]})"
        "\n";
    content +=
        R"({"text_id":"p2","text":"second post","votes":[0,0,0],"annotators":["a1","a2","a4"]})"
        "\n";
    return content;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (a.space.class_names() != b.space.class_names()) return false;
    if (a.records.size() != b.records.size()) return false;
    if (a.schema.attributes().size() != b.schema.attributes().size()) return false;
    for (std::size_t i = 0; i < a.schema.attributes().size(); ++i) {
        if (a.schema.attributes()[i].name != b.schema.attributes()[i].name) return false;
        if (a.schema.attributes()[i].allowed_values != b.schema.attributes()[i].allowed_values) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        if (a.records[i].text_id != b.records[i].text_id) return false;
        if (a.records[i].text != b.records[i].text) return false;
        if (a.records[i].votes != b.records[i].votes) return false;
        if (a.records[i].annotator_ids != b.records[i].annotator_ids) return false;
        if (a.profiles[i].size() != b.profiles[i].size()) return false;
        for (std::size_t j = 0; j < a.profiles[i].size(); ++j) {
            if (a.profiles[i][j].annotator_id != b.profiles[i][j].annotator_id) return false;
            if (a.profiles[i][j].values != b.profiles[i][j].values) return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("dataset_io") {

TEST_CASE("ingest parses votes as names or indices") {
    TempFile file("ingest.jsonl");
    file.write(sample_file());
    const auto dataset = ingest(file.path());

    CHECK(dataset.space.class_count() == 3);
    REQUIRE(dataset.records.size() == 2);
    CHECK(dataset.records[0].votes == std::vector<int>{0, 1, 2});
    CHECK(dataset.records[1].votes == std::vector<int>{0, 0, 0});
    CHECK(dataset.has_profiles(0));
    CHECK_FALSE(dataset.has_profiles(1));
    CHECK(dataset.profiles[0][0].values.at("age") == "22");
    CHECK(dataset.profiles[0][0].annotator_id == "a1");
    CHECK(dataset.profiles[0][2].values.at("gender") == "man");
}

TEST_CASE("strict ingest reports the failing line") {
    TempFile file("bad_vote.jsonl");
    file.write(std::string(kHeader) + "\n" +
               R"({"text_id":"p1","text":"t","votes":["nope"],"annotators":["a1"]})" + "\n");
    CHECK_THROWS_WITH_AS(ingest(file.path()), doctest::Contains("unknown class"),
                         ValidationError);

    TempFile arity("bad_arity.jsonl");
    arity.write(std::string(kHeader) + "\n" +
                R"({"text_id":"p1","text":"t","votes":[0,1],"annotators":["a1"]})" + "\n");
    CHECK_THROWS_AS(ingest(arity.path()), ValidationError);

    TempFile schema("bad_schema.jsonl");
    schema.write(std::string(kHeader) + "\n" +
                 R"({"text_id":"p1","text":"t","votes":[0],"annotators":["a1"],)" +
                 R"("profiles":[{"gender":"robot"}]})" + "\n");
    CHECK_THROWS_AS(ingest(schema.path()), ValidationError);

    TempFile dupes("dupes.jsonl");
    dupes.write(std::string(kHeader) + "\n" +
                R"({"text_id":"p1","text":"t","votes":[0],"annotators":["a1"]})" + "\n" +
                R"({"text_id":"p1","text":"t2","votes":[1],"annotators":["a2"]})" + "\n");
    CHECK_THROWS_WITH_AS(ingest(dupes.path()), doctest::Contains("line 3"), ValidationError);
}

TEST_CASE("lenient ingest skips bad lines and counts them") {
    TempFile file("lenient.jsonl");
    file.write(std::string(kHeader) + "\n" +
               R"({"text_id":"p1","text":"t","votes":["nope"],"annotators":["a1"]})" + "\n" +
               R"({"text_id":"p2","text":"t","votes":["yes"],"annotators":["a1"]})" + "\n" +
               "this is not json\n");
    IngestStats stats;
    const auto dataset = ingest(file.path(), /*strict=*/false, &stats);
    CHECK(dataset.records.size() == 1);
    CHECK(dataset.records[0].text_id == "p2");
    CHECK(stats.skipped_lines == 2);
}

TEST_CASE("empty and headerless files are rejected") {
    TempFile empty("empty.jsonl");
    empty.write("");
    CHECK_THROWS_AS(ingest(empty.path()), Error);

    TempFile headerless("headerless.jsonl");
    headerless.write(R"({"text_id":"p1"})" "\n");
    CHECK_THROWS_AS(ingest(headerless.path()), ValidationError);

    TempFile no_records("norecords.jsonl");
    no_records.write(std::string(kHeader) + "\n");
    CHECK_THROWS_WITH_AS(ingest(no_records.path()), doctest::Contains("no records"),
                         ValidationError);

    CHECK_THROWS_AS(ingest(fs::temp_directory_path() / "disagree_missing.jsonl"), IoError);
}

TEST_CASE("ingest -> write -> ingest round-trips losslessly") {
    TempFile original("roundtrip_a.jsonl");
    original.write(sample_file());
    const auto dataset = ingest(original.path());

    TempFile rewritten("roundtrip_b.jsonl");
    write_dataset(rewritten.path(), dataset);
    const auto again = ingest(rewritten.path());
    CHECK(datasets_equal(dataset, again));

    const auto generated = synth::crossed_dataset(25, 11);
    TempFile generated_file("roundtrip_c.jsonl");
    write_dataset(generated_file.path(), generated);
    CHECK(datasets_equal(generated, ingest(generated_file.path())));
}

TEST_CASE("split is seeded, disjoint, and exhaustive") {
    const auto dataset = synth::marker_dataset(10, 5);
    const auto [train_part, test_part] = split(dataset, 0.8, 42);
    CHECK(train_part.records.size() == 8);
    CHECK(test_part.records.size() == 2);

    std::set<std::string> ids;
    for (const auto& record : train_part.records) ids.insert(record.text_id);
    for (const auto& record : test_part.records) ids.insert(record.text_id);
    CHECK(ids.size() == 10);

    const auto [train_again, test_again] = split(dataset, 0.8, 42);
    CHECK(datasets_equal(train_part, train_again));
    CHECK(datasets_equal(test_part, test_again));

    CHECK_THROWS_AS(split(dataset, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split(dataset, 1.0, 1), ConfigError);
}

TEST_CASE("a record's personal instances land on one side of the split") {
    const auto dataset = synth::crossed_dataset(30, 9);
    const auto [train_part, test_part] = split(dataset, 0.7, 13);

    std::set<std::string> train_ids, test_ids;
    for (std::size_t i = 0; i < train_part.records.size(); ++i) {
        for (const auto& instance :
             build_personal_inputs(train_part.records[i], train_part.profiles[i],
                                   train_part.schema, DemographicFormat::templated)) {
            train_ids.insert(instance.text_id);
        }
    }
    for (std::size_t i = 0; i < test_part.records.size(); ++i) {
        for (const auto& instance :
             build_personal_inputs(test_part.records[i], test_part.profiles[i],
                                   test_part.schema, DemographicFormat::templated)) {
            test_ids.insert(instance.text_id);
        }
    }
    for (const auto& id : train_ids) CHECK(test_ids.count(id) == 0);
}

TEST_CASE("instances round-trip through the jsonl format") {
    const auto dataset = synth::crossed_dataset(8, 3);
    std::vector<FormattedInstance> instances;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        for (auto& instance :
             build_personal_inputs(dataset.records[i], dataset.profiles[i], dataset.schema,
                                   DemographicFormat::templated)) {
            instances.push_back(std::move(instance));
        }
        instances.push_back(build_text_only_input(dataset.records[i]));
    }

    TempFile file("instances.jsonl");
    write_instances(file.path(), instances);
    const auto loaded = read_instances(file.path());
    REQUIRE(loaded.size() == instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        CHECK(loaded[i].text_id == instances[i].text_id);
        CHECK(loaded[i].input_text == instances[i].input_text);
        CHECK(loaded[i].origin == instances[i].origin);
        CHECK(loaded[i].annotator_id == instances[i].annotator_id);
        CHECK(loaded[i].label.binary == instances[i].label.binary);
        CHECK(loaded[i].label.continuous == instances[i].label.continuous);
    }
}

TEST_CASE("external predictions join 1:1 on text and annotator ids") {
    const auto dataset = synth::crossed_dataset(4, 19);
    std::vector<FormattedInstance> instances;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        for (auto& instance :
             build_personal_inputs(dataset.records[i], dataset.profiles[i], dataset.schema,
                                   DemographicFormat::templated)) {
            instances.push_back(std::move(instance));
        }
    }

    auto row = [](const FormattedInstance& instance, double p) {
        return std::string(R"({"text_id":")") + instance.text_id + R"(","annotator_id":")" +
               instance.annotator_id + R"(","prediction":)" + std::to_string(p) + "}\n";
    };

    SUBCASE("aligned file loads in instance order") {
        TempFile file("preds_ok.jsonl");
        std::string content;
        // Deliberately reversed on disk; the join ignores file order.
        for (std::size_t i = instances.size(); i-- > 0;) {
            content += row(instances[i], 0.01 * static_cast<double>(i));
        }
        file.write(content);
        const auto predictions = load_external_predictions(instances, file.path());
        REQUIRE(predictions.size() == instances.size());
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            CHECK(predictions[i] == doctest::Approx(0.01 * static_cast<double>(i)));
        }
    }

    SUBCASE("missing key") {
        TempFile file("preds_missing.jsonl");
        std::string content;
        for (std::size_t i = 0; i + 1 < instances.size(); ++i) content += row(instances[i], 0.5);
        file.write(content);
        CHECK_THROWS_WITH_AS(load_external_predictions(instances, file.path()),
                             doctest::Contains("no prediction"), ValidationError);
    }

    SUBCASE("duplicate key") {
        TempFile file("preds_dup.jsonl");
        std::string content = row(instances[0], 0.5) + row(instances[0], 0.6);
        for (std::size_t i = 1; i < instances.size(); ++i) content += row(instances[i], 0.5);
        file.write(content);
        CHECK_THROWS_WITH_AS(load_external_predictions(instances, file.path()),
                             doctest::Contains("duplicate"), ValidationError);
    }

    SUBCASE("unmatched extra key") {
        TempFile file("preds_extra.jsonl");
        std::string content;
        for (const auto& instance : instances) content += row(instance, 0.5);
        content += R"({"text_id":"ghost","annotator_id":"a9","prediction":0.5})" "\n";
        file.write(content);
        CHECK_THROWS_AS(load_external_predictions(instances, file.path()), ValidationError);
    }
}

TEST_CASE("build_instances enforces the requested demographics scope") {
    TempFile file("scopes.jsonl");
    file.write(sample_file());  // p1 has profiles, p2 does not
    const auto dataset = ingest(file.path());

    SUBCASE("text-only needs no profiles") {
        const auto instances = build_instances(dataset, DemographicScope::none,
                                               DemographicFormat::templated);
        CHECK(instances.size() == 2);
        CHECK(instances[0].origin == InstanceOrigin::text_only);
    }
    SUBCASE("strict mode errors on the profile-less record by name") {
        CHECK_THROWS_WITH_AS(build_instances(dataset, DemographicScope::personal,
                                             DemographicFormat::templated),
                             doctest::Contains("p2"), ValidationError);
        CHECK_THROWS_AS(build_instances(dataset, DemographicScope::group,
                                        DemographicFormat::sentence),
                        ValidationError);
    }
    SUBCASE("lenient mode skips and counts") {
        std::size_t skipped = 0;
        const auto instances = build_instances(dataset, DemographicScope::personal,
                                               DemographicFormat::templated, true, &skipped);
        CHECK(instances.size() == 3);  // p1's three annotators
        CHECK(skipped == 1);
        for (const auto& instance : instances) CHECK(instance.text_id == "p1");
    }
}

TEST_CASE("dataset levels union over the record sizes present") {
    auto dataset = synth::marker_dataset(6, 1);  // all records have five votes
    auto levels = dataset_levels(dataset);
    CHECK(levels == std::vector<Fraction>{{0, 1}, {1, 5}, {2, 5}, {3, 5}});

    // Add a three-vote record: 1/3 and 2/3 join the union.
    AnnotationRecord record;
    record.text_id = "extra";
    record.text = "three voters";
    record.votes = {0, 1, 2};
    record.annotator_ids = {"a1", "a2", "a3"};
    dataset.records.push_back(record);
    dataset.profiles.emplace_back();
    levels = dataset_levels(dataset);
    CHECK(levels == std::vector<Fraction>{{0, 1}, {1, 5}, {1, 3}, {2, 5}, {3, 5}, {2, 3}});
}

}  // TEST_SUITE
