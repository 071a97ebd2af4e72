#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clarq::ingest {

enum class PostType { question, answer };

struct RawPostRow {
    std::int64_t id = 0;
    PostType post_type = PostType::question;
    std::optional<std::int64_t> parent_id;          // set for answers
    std::optional<std::int64_t> accepted_answer_id;
    std::string title;
    std::string body;     // HTML stripped to plain text
    std::string creation; // ISO-8601 UTC
    std::string domain;
};

struct RawCommentRow {
    std::int64_t id = 0;
    std::int64_t post_id = 0;
    std::string text;
    std::string creation;
};

struct Comment {
    std::string text;
    std::string creation;

    bool operator==(const Comment&) const = default;
};

// An answered question post with its time-ordered candidate comments.
struct PostRecord {
    std::int64_t post_id = 0;
    std::string domain;
    std::string title;
    std::string body;
    std::vector<std::string> answers;  // never empty
    std::vector<Comment> comments;     // ascending (creation, comment id)

    bool operator==(const PostRecord&) const = default;
};

struct JoinStats {
    std::size_t questions = 0;
    std::size_t answered_questions = 0;
    std::size_t attached_comments = 0;
    std::size_t orphan_comments = 0;       // post_id matches no question
    std::size_t answer_post_comments = 0;  // dropped: comment on an answer
};

// Parses a Posts.xml row stream. Rows whose PostTypeId is neither question
// (1) nor answer (2) are skipped. Body HTML is stripped.
std::vector<RawPostRow> parse_posts(std::string_view xml, std::string_view domain);

// Parses a Comments.xml row stream. Text is entity-decoded and trimmed;
// rows whose text is empty after trimming are skipped.
std::vector<RawCommentRow> parse_comments(std::string_view xml);

// Keeps question posts with at least one answer, attaches their comments in
// (creation, comment id) order. Orphan comments are counted, never fatal.
std::vector<PostRecord> join_corpus(const std::vector<RawPostRow>& posts,
                                    const std::vector<RawCommentRow>& comments,
                                    std::string_view domain,
                                    JoinStats* stats = nullptr);

// JSON-lines persistence, one PostRecord per line.
void write_post_records(const std::vector<PostRecord>& records, std::ostream& out);
std::vector<PostRecord> read_post_records(std::istream& in);
void write_post_records_file(const std::vector<PostRecord>& records, const std::string& path);
std::vector<PostRecord> read_post_records_file(const std::string& path);

} // namespace clarq::ingest
