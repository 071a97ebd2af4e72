#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clarq::corpus {

enum class PairSource { last_comment, any_comment, sampled_negative };
enum class Label { negative = 0, positive = 1 };

std::string to_string(PairSource s);
std::string to_string(Label l);
PairSource pair_source_from_string(const std::string& s);
Label label_from_string(const std::string& s);

// One (post, question) tuple flowing through the bootstrap.
struct CandidatePair {
    std::int64_t post_id = 0;
    std::string domain;
    std::string post_text;     // title + " " + body
    std::string question_text;
    PairSource source = PairSource::any_comment;
    std::optional<Label> pseudo_label;
    std::optional<double> confidence; // set after a classifier pass

    bool operator==(const CandidatePair&) const = default;
};

// A stage dataset: every pair labeled, both classes present for trainable sets.
struct LabeledSet {
    std::string stage_name;
    std::vector<CandidatePair> pairs;
    std::uint64_t rng_seed = 0;

    std::size_t count(Label l) const;
    bool operator==(const LabeledSet&) const = default;
};

// One line of the final emitted dataset.
struct ClarQRecord {
    std::string domain;
    std::int64_t post_id = 0;
    std::string post_text;
    std::string question_text;
    std::vector<std::string> answers; // never empty
    double confidence = 0.0;

    bool operator==(const ClarQRecord&) const = default;
};

// Stage files are JSON-lines with a one-line schema-version header.
// Round-trip identity: read_stage(write_stage(s)) == s field-for-field.
void write_stage(const LabeledSet& set, std::ostream& out);
LabeledSet read_stage(std::istream& in);
void write_stage_file(const LabeledSet& set, const std::string& path);
LabeledSet read_stage_file(const std::string& path);

void write_clarq_records(const std::vector<ClarQRecord>& records, std::ostream& out);
std::vector<ClarQRecord> read_clarq_records(std::istream& in);
void append_clarq_record(const ClarQRecord& record, std::ostream& out);
std::vector<ClarQRecord> read_clarq_records_file(const std::string& path);

} // namespace clarq::corpus
