#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clarq/error.hpp"
#include "clarq/ingest.hpp"

using namespace clarq;
using ingest::PostType;

namespace {

const char* kPostsFixture =
    "<posts>"
    "<row Id=\"1\" PostTypeId=\"1\" Title=\"First\" Body=\"&lt;p&gt;body one&lt;/p&gt;\" "
    "CreationDate=\"2020-01-01T00:00:00\" />"
    "<row Id=\"2\" PostTypeId=\"1\" Title=\"Second\" Body=\"body two\" "
    "CreationDate=\"2020-01-02T00:00:00\" />"
    "<row Id=\"3\" PostTypeId=\"2\" ParentId=\"1\" Body=\"an answer\" "
    "CreationDate=\"2020-01-03T00:00:00\" />"
    "</posts>";

} // namespace

TEST_CASE("parse_posts on a 3-row fixture assigns types") {
    auto rows = ingest::parse_posts(kPostsFixture, "travel");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].post_type == PostType::question);
    CHECK(rows[0].body == "body one"); // html stripped
    CHECK(!rows[0].parent_id.has_value());
    CHECK(rows[1].post_type == PostType::question);
    CHECK(rows[2].post_type == PostType::answer);
    CHECK(rows[2].parent_id == 1);
    CHECK(rows[0].domain == "travel");
}

TEST_CASE("parse_posts skips non question/answer rows") {
    auto rows = ingest::parse_posts(
        "<posts>"
        "<row Id=\"1\" PostTypeId=\"1\" Body=\"q\" />"
        "<row Id=\"2\" PostTypeId=\"4\" Body=\"tag wiki\" />"
        "<row Id=\"3\" PostTypeId=\"1\" Body=\"q2\" />"
        "</posts>",
        "d");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == 1);
    CHECK(rows[1].id == 3);
}

TEST_CASE("parse_posts empty input") {
    CHECK(ingest::parse_posts("<posts></posts>", "d").empty());
}

TEST_CASE("missing required attribute") {
    CHECK_THROWS_WITH_AS(ingest::parse_posts("<posts><row Id=\"1\" /></posts>", "d"),
                         doctest::Contains("PostTypeId"), Error);
    CHECK_THROWS_WITH_AS(
        ingest::parse_comments("<comments><row Id=\"1\" Text=\"t\" /></comments>"),
        doctest::Contains("PostId"), Error);
}

TEST_CASE("parse_comments trims and decodes") {
    auto rows = ingest::parse_comments(
        "<comments><row Id=\"1\" PostId=\"7\" Text=\"what OS version?  \" /></comments>");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].text == "what OS version?");
    CHECK(rows[0].post_id == 7);
    CHECK(ingest::parse_comments("<comments></comments>").empty());
}

TEST_CASE("parse_comments preserves post linkage across 5 rows") {
    auto rows = ingest::parse_comments(
        "<comments>"
        "<row Id=\"1\" PostId=\"10\" Text=\"a\" /><row Id=\"2\" PostId=\"10\" Text=\"b\" />"
        "<row Id=\"3\" PostId=\"20\" Text=\"c\" /><row Id=\"4\" PostId=\"10\" Text=\"d\" />"
        "<row Id=\"5\" PostId=\"20\" Text=\"e\" />"
        "</comments>");
    REQUIRE(rows.size() == 5);
    int on_ten = 0;
    for (const auto& row : rows)
        if (row.post_id == 10) ++on_ten;
    CHECK(on_ten == 3);
}

TEST_CASE("join_corpus keeps answered posts and orders comments") {
    // 3 questions (2 answered), 5 comments on the answered ones
    std::vector<ingest::RawPostRow> posts;
    for (std::int64_t id : {1, 2, 3}) {
        ingest::RawPostRow q;
        q.id = id;
        q.post_type = PostType::question;
        q.title = "t" + std::to_string(id);
        q.body = "b";
        posts.push_back(q);
    }
    for (auto [id, parent] : {std::pair{10, 1}, {11, 2}}) {
        ingest::RawPostRow a;
        a.id = id;
        a.post_type = PostType::answer;
        a.parent_id = parent;
        a.body = "answer";
        posts.push_back(a);
    }
    // deliberately unsorted timestamps; one tie broken by comment id
    std::vector<ingest::RawCommentRow> comments = {
        {5, 1, "third", "2020-01-03"},  {4, 1, "first", "2020-01-01"},
        {3, 1, "second", "2020-01-02"}, {9, 2, "tie-b", "2020-02-01"},
        {8, 2, "tie-a", "2020-02-01"},
    };

    ingest::JoinStats stats;
    auto records = ingest::join_corpus(posts, comments, "d", &stats);
    REQUIRE(records.size() == 2); // post 3 dropped (no answer)
    CHECK(records[0].post_id == 1);
    REQUIRE(records[0].comments.size() == 3);
    CHECK(records[0].comments[0].text == "first");
    CHECK(records[0].comments[1].text == "second");
    CHECK(records[0].comments[2].text == "third");
    REQUIRE(records[1].comments.size() == 2);
    CHECK(records[1].comments[0].text == "tie-a"); // id 8 before id 9
    CHECK(records[1].comments[1].text == "tie-b");
    CHECK(stats.attached_comments == 5);
    CHECK(stats.orphan_comments == 0);

    // conservation: every input comment attached to an answered question
    std::size_t total = 0;
    for (const auto& record : records) total += record.comments.size();
    CHECK(total == comments.size());
}

TEST_CASE("join_corpus counts orphans and drops answer-post comments") {
    std::vector<ingest::RawPostRow> posts;
    ingest::RawPostRow q;
    q.id = 1;
    q.post_type = PostType::question;
    posts.push_back(q);
    ingest::RawPostRow a;
    a.id = 2;
    a.post_type = PostType::answer;
    a.parent_id = 1;
    posts.push_back(a);

    std::vector<ingest::RawCommentRow> comments = {
        {1, 1, "on question", "2020"},
        {2, 2, "on answer", "2020"},
        {3, 999, "orphan", "2020"},
    };
    ingest::JoinStats stats;
    auto records = ingest::join_corpus(posts, comments, "d", &stats);
    REQUIRE(records.size() == 1);
    CHECK(records[0].comments.size() == 1);
    CHECK(stats.orphan_comments == 1);
    CHECK(stats.answer_post_comments == 1);
}

TEST_CASE("post with answer but no comments contributes an empty comment list") {
    std::vector<ingest::RawPostRow> posts;
    ingest::RawPostRow q;
    q.id = 1;
    q.post_type = PostType::question;
    posts.push_back(q);
    ingest::RawPostRow a;
    a.id = 2;
    a.post_type = PostType::answer;
    a.parent_id = 1;
    posts.push_back(a);
    auto records = ingest::join_corpus(posts, {}, "d");
    REQUIRE(records.size() == 1);
    CHECK(records[0].comments.empty());
    CHECK(records[0].answers.size() == 1);
}

TEST_CASE("join_corpus output serialization is deterministic") {
    auto posts = ingest::parse_posts(kPostsFixture, "travel");
    auto records = ingest::join_corpus(posts, {{1, 1, "why?", "2020"}}, "travel");
    std::ostringstream a, b;
    ingest::write_post_records(records, a);
    ingest::write_post_records(ingest::join_corpus(posts, {{1, 1, "why?", "2020"}}, "travel"),
                               b);
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    CHECK(ingest::read_post_records(in) == records);
}

TEST_CASE("mini-dump ingestion matches the generated ground truth") {
    std::string root = std::string(CLARQ_REPO_DIR) + "/fixtures/minidump";
    std::ifstream counts_in(root + "/expected_counts.json");
    REQUIRE(counts_in.good());
    nlohmann::json expected = nlohmann::json::parse(counts_in);

    for (const auto& [domain, exp] : expected.items()) {
        std::ifstream posts_in(root + "/" + domain + "/Posts.xml");
        std::stringstream posts_buf;
        posts_buf << posts_in.rdbuf();
        std::ifstream comments_in(root + "/" + domain + "/Comments.xml");
        std::stringstream comments_buf;
        comments_buf << comments_in.rdbuf();

        auto posts = ingest::parse_posts(posts_buf.str(), domain);
        auto comments = ingest::parse_comments(comments_buf.str());
        ingest::JoinStats stats;
        auto records = ingest::join_corpus(posts, comments, domain, &stats);

        CHECK(stats.questions == exp.at("questions").get<std::size_t>());
        CHECK(stats.answered_questions == exp.at("answered_posts").get<std::size_t>());
        CHECK(stats.attached_comments == exp.at("attached_comments").get<std::size_t>());
        CHECK(stats.orphan_comments == exp.at("orphan_comments").get<std::size_t>());
        CHECK(stats.answer_post_comments ==
              exp.at("answer_post_comments").get<std::size_t>());

        // no loss, no duplication
        std::size_t attached = 0;
        for (const auto& record : records) {
            CHECK(!record.answers.empty());
            attached += record.comments.size();
            for (std::size_t i = 1; i < record.comments.size(); ++i)
                CHECK(record.comments[i - 1].creation <= record.comments[i].creation);
        }
        CHECK(attached == stats.attached_comments);
    }
}
