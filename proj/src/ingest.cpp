#include "clarq/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "clarq/error.hpp"
#include "clarq/text.hpp"
#include "clarq/xml_rows.hpp"

namespace clarq::ingest {

namespace {

std::int64_t to_int(std::string_view v, std::string_view attr, std::size_t offset) {
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw malformed_xml(offset, "attribute '" + std::string(attr) + "' is not an integer");
    return out;
}

std::string_view require(const xml::Row& row, std::string_view attr) {
    auto v = row.get(attr);
    if (!v) throw missing_attribute(std::string(attr), row.offset);
    return *v;
}

} // namespace

std::vector<RawPostRow> parse_posts(std::string_view xml, std::string_view domain) {
    std::vector<RawPostRow> out;
    for (const auto& row : xml::parse_row_file(xml, "posts")) {
        std::string_view type = require(row, "PostTypeId");
        if (type != "1" && type != "2") continue; // wiki/moderator/etc rows
        RawPostRow post;
        post.id = to_int(require(row, "Id"), "Id", row.offset);
        post.post_type = type == "1" ? PostType::question : PostType::answer;
        if (auto v = row.get("ParentId")) post.parent_id = to_int(*v, "ParentId", row.offset);
        if (auto v = row.get("AcceptedAnswerId"))
            post.accepted_answer_id = to_int(*v, "AcceptedAnswerId", row.offset);
        if (auto v = row.get("Title")) post.title = text::collapse_whitespace(*v);
        if (auto v = row.get("Body")) post.body = text::strip_html(*v);
        if (auto v = row.get("CreationDate")) post.creation = *v;
        post.domain = domain;
        out.push_back(std::move(post));
    }
    return out;
}

std::vector<RawCommentRow> parse_comments(std::string_view xml) {
    std::vector<RawCommentRow> out;
    for (const auto& row : xml::parse_row_file(xml, "comments")) {
        RawCommentRow comment;
        comment.id = to_int(require(row, "Id"), "Id", row.offset);
        comment.post_id = to_int(require(row, "PostId"), "PostId", row.offset);
        comment.text = text::collapse_whitespace(require(row, "Text"));
        if (auto v = row.get("CreationDate")) comment.creation = *v;
        if (comment.text.empty()) continue;
        out.push_back(std::move(comment));
    }
    return out;
}

std::vector<PostRecord> join_corpus(const std::vector<RawPostRow>& posts,
                                    const std::vector<RawCommentRow>& comments,
                                    std::string_view domain, JoinStats* stats) {
    JoinStats local;
    std::unordered_map<std::int64_t, PostRecord> questions;
    std::unordered_set<std::int64_t> answer_ids;
    for (const auto& post : posts) {
        if (post.post_type != PostType::question) continue;
        PostRecord record;
        record.post_id = post.id;
        record.domain = std::string(domain);
        record.title = post.title;
        record.body = post.body;
        questions.emplace(post.id, std::move(record));
    }
    local.questions = questions.size();
    for (const auto& post : posts) {
        if (post.post_type != PostType::answer || !post.parent_id) continue;
        answer_ids.insert(post.id);
        auto it = questions.find(*post.parent_id);
        if (it != questions.end()) it->second.answers.push_back(post.body);
    }

    // Comments keyed by question post; (creation, id) gives the total order.
    std::unordered_map<std::int64_t, std::vector<std::pair<const RawCommentRow*, std::int64_t>>>
        by_post;
    for (const auto& comment : comments) {
        auto it = questions.find(comment.post_id);
        if (it == questions.end()) {
            if (answer_ids.count(comment.post_id)) ++local.answer_post_comments;
            else ++local.orphan_comments;
            continue;
        }
        by_post[comment.post_id].emplace_back(&comment, comment.id);
    }

    std::vector<PostRecord> out;
    std::vector<std::int64_t> ids;
    ids.reserve(questions.size());
    for (const auto& [id, _] : questions) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (std::int64_t id : ids) {
        PostRecord& record = questions.at(id);
        if (record.answers.empty()) continue; // answered-post filter
        auto attach = by_post.find(id);
        if (attach != by_post.end()) {
            auto& list = attach->second;
            std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
                if (a.first->creation != b.first->creation)
                    return a.first->creation < b.first->creation;
                return a.second < b.second;
            });
            for (const auto& [comment, _] : list)
                record.comments.push_back(Comment{comment->text, comment->creation});
            local.attached_comments += list.size();
        }
        out.push_back(std::move(record));
    }
    local.answered_questions = out.size();
    if (stats) *stats = local;
    return out;
}

namespace {

nlohmann::json record_to_json(const PostRecord& record) {
    nlohmann::json comments = nlohmann::json::array();
    for (const auto& comment : record.comments)
        comments.push_back({{"text", comment.text}, {"creation", comment.creation}});
    return {{"post_id", record.post_id}, {"domain", record.domain},
            {"title", record.title},    {"body", record.body},
            {"answers", record.answers}, {"comments", comments}};
}

PostRecord record_from_json(const nlohmann::json& j) {
    PostRecord record;
    record.post_id = j.at("post_id").get<std::int64_t>();
    record.domain = j.at("domain").get<std::string>();
    record.title = j.at("title").get<std::string>();
    record.body = j.at("body").get<std::string>();
    record.answers = j.at("answers").get<std::vector<std::string>>();
    for (const auto& c : j.at("comments"))
        record.comments.push_back(
            Comment{c.at("text").get<std::string>(), c.at("creation").get<std::string>()});
    return record;
}

} // namespace

void write_post_records(const std::vector<PostRecord>& records, std::ostream& out) {
    for (const auto& record : records) out << record_to_json(record).dump() << '\n';
}

std::vector<PostRecord> read_post_records(std::istream& in) {
    std::vector<PostRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

void write_post_records_file(const std::vector<PostRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    write_post_records(records, out);
}

std::vector<PostRecord> read_post_records_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    return read_post_records(in);
}

} // namespace clarq::ingest
