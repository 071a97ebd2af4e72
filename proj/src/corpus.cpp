#include "clarq/corpus.hpp"

#include <fstream>
#include <ostream>

#include <json.hpp>

#include "clarq/error.hpp"

namespace clarq::corpus {

namespace {
constexpr int kStageVersion = 1;
} // namespace

std::string to_string(PairSource s) {
    switch (s) {
        case PairSource::last_comment: return "last_comment";
        case PairSource::any_comment: return "any_comment";
        case PairSource::sampled_negative: return "sampled_negative";
    }
    return "any_comment";
}

std::string to_string(Label l) {
    return l == Label::positive ? "positive" : "negative";
}

PairSource pair_source_from_string(const std::string& s) {
    if (s == "last_comment") return PairSource::last_comment;
    if (s == "any_comment") return PairSource::any_comment;
    if (s == "sampled_negative") return PairSource::sampled_negative;
    throw Error("SchemaError", "unknown pair source '" + s + "'");
}

Label label_from_string(const std::string& s) {
    if (s == "positive") return Label::positive;
    if (s == "negative") return Label::negative;
    throw Error("SchemaError", "unknown label '" + s + "'");
}

std::size_t LabeledSet::count(Label l) const {
    std::size_t n = 0;
    for (const auto& pair : pairs)
        if (pair.pseudo_label == l) ++n;
    return n;
}

namespace {

nlohmann::json pair_to_json(const CandidatePair& pair) {
    nlohmann::json j = {{"post_id", pair.post_id},
                        {"domain", pair.domain},
                        {"post_text", pair.post_text},
                        {"question_text", pair.question_text},
                        {"source", to_string(pair.source)}};
    if (pair.pseudo_label) j["pseudo_label"] = to_string(*pair.pseudo_label);
    if (pair.confidence) j["confidence"] = *pair.confidence;
    return j;
}

CandidatePair pair_from_json(const nlohmann::json& j) {
    CandidatePair pair;
    pair.post_id = j.at("post_id").get<std::int64_t>();
    pair.domain = j.at("domain").get<std::string>();
    pair.post_text = j.at("post_text").get<std::string>();
    pair.question_text = j.at("question_text").get<std::string>();
    pair.source = pair_source_from_string(j.at("source").get<std::string>());
    if (j.contains("pseudo_label"))
        pair.pseudo_label = label_from_string(j.at("pseudo_label").get<std::string>());
    if (j.contains("confidence")) pair.confidence = j.at("confidence").get<double>();
    return pair;
}

} // namespace

void write_stage(const LabeledSet& set, std::ostream& out) {
    nlohmann::json header = {{"schema", "clarq-stage"},
                             {"version", kStageVersion},
                             {"stage_name", set.stage_name},
                             {"rng_seed", set.rng_seed}};
    out << header.dump() << '\n';
    for (const auto& pair : set.pairs) out << pair_to_json(pair).dump() << '\n';
}

LabeledSet read_stage(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("SchemaError", "stage file is empty");
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("schema", "") != "clarq-stage")
        throw Error("SchemaError", "not a clarq stage file");
    if (header.value("version", -1) != kStageVersion)
        throw Error("SchemaError", "unsupported stage schema version");
    LabeledSet set;
    set.stage_name = header.at("stage_name").get<std::string>();
    set.rng_seed = header.at("rng_seed").get<std::uint64_t>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        set.pairs.push_back(pair_from_json(nlohmann::json::parse(line)));
    }
    return set;
}

void write_stage_file(const LabeledSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    write_stage(set, out);
}

LabeledSet read_stage_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    return read_stage(in);
}

void append_clarq_record(const ClarQRecord& record, std::ostream& out) {
    nlohmann::json j = {{"domain", record.domain},
                        {"post_id", record.post_id},
                        {"post_text", record.post_text},
                        {"question_text", record.question_text},
                        {"answers", record.answers},
                        {"confidence", record.confidence}};
    out << j.dump() << '\n';
}

void write_clarq_records(const std::vector<ClarQRecord>& records, std::ostream& out) {
    for (const auto& record : records) append_clarq_record(record, out);
}

std::vector<ClarQRecord> read_clarq_records(std::istream& in) {
    std::vector<ClarQRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ClarQRecord record;
        record.domain = j.at("domain").get<std::string>();
        record.post_id = j.at("post_id").get<std::int64_t>();
        record.post_text = j.at("post_text").get<std::string>();
        record.question_text = j.at("question_text").get<std::string>();
        record.answers = j.at("answers").get<std::vector<std::string>>();
        record.confidence = j.at("confidence").get<double>();
        out.push_back(std::move(record));
    }
    return out;
}

std::vector<ClarQRecord> read_clarq_records_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    return read_clarq_records(in);
}

} // namespace clarq::corpus
