#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "clarq/error.hpp"
#include "clarq/refine.hpp"
#include "support/synthetic.hpp"

using namespace clarq;
using corpus::Label;
using corpus::LabeledSet;
using corpus::PairSource;

namespace {

refine::RefineConfig tiny_config(std::uint64_t seed, int n_iterations = 2) {
    refine::RefineConfig cfg;
    cfg.n_iterations = n_iterations;
    cfg.rng_seed = seed;
    cfg.train = testsupport::small_train_config(seed);
    return cfg;
}

std::set<std::pair<std::int64_t, std::string>> positive_keys(const LabeledSet& set) {
    std::set<std::pair<std::int64_t, std::string>> keys;
    for (const auto& pair : set.pairs)
        if (pair.pseudo_label == Label::positive)
            keys.insert({pair.post_id, pair.question_text});
    return keys;
}

// Ten hand-built positives plus enough negatives for non-degenerate training;
// documents live inside a real pool corpus so negatives can be drawn.
struct SmallFixture {
    testsupport::SyntheticCorpus corpus;
    refine::NegativePool pool;
    LabeledSet prev;

    explicit SmallFixture(std::size_t n_positives)
        : corpus(testsupport::make_synthetic({.n_posts = 40, .noise = 0.0, .seed = 5})),
          pool(corpus.posts) {
        prev.stage_name = "D0";
        for (std::size_t i = 0; i < n_positives; ++i) {
            const auto& post = corpus.posts[i];
            corpus::CandidatePair positive;
            positive.post_id = post.post_id;
            positive.domain = post.domain;
            positive.post_text = post.title + " " + post.body;
            positive.question_text = post.comments.back().text;
            positive.source = PairSource::last_comment;
            positive.pseudo_label = Label::positive;
            prev.pairs.push_back(std::move(positive));
        }
        for (std::size_t i = 0; i < n_positives; ++i) {
            const auto& post = corpus.posts[i];
            corpus::CandidatePair negative;
            negative.post_id = post.post_id;
            negative.domain = post.domain;
            negative.post_text = post.title + " " + post.body;
            negative.question_text =
                corpus.posts[(i + n_positives) % corpus.posts.size()].comments.back().text;
            negative.source = PairSource::sampled_negative;
            negative.pseudo_label = Label::negative;
            prev.pairs.push_back(std::move(negative));
        }
    }
};

} // namespace

TEST_CASE("build_seed keeps exactly the posts whose last comment asks a question") {
    auto corpus_data = testsupport::make_synthetic({.n_posts = 30, .noise = 0.0, .seed = 2});
    // make one post's last comment a statement and one post comment-free
    corpus_data.posts[3].comments.push_back({"thanks , solved it .", "2020-01-02T00:00:00"});
    corpus_data.posts[7].comments.clear();

    refine::NegativePool pool(corpus_data.posts);
    auto cfg = tiny_config(2);
    auto seed = refine::build_seed(corpus_data.posts, cfg, pool);

    CHECK(seed.stage_name == "D0");
    auto keys = positive_keys(seed);
    CHECK(keys.size() == 28);
    CHECK_FALSE(keys.count({corpus_data.posts[3].post_id,
                            corpus_data.posts[3].comments.back().text}));
    for (const auto& [post_id, question] : keys)
        CHECK(question.find('?') != std::string::npos);

    // one sampled negative per positive at the default ratio
    CHECK(seed.count(Label::negative) == seed.count(Label::positive));
    for (const auto& pair : seed.pairs) {
        if (pair.pseudo_label == Label::positive) {
            CHECK(pair.source == PairSource::last_comment);
            continue;
        }
        CHECK(pair.source == PairSource::sampled_negative);
        // never one of the paired post's own comments
        const auto& post = corpus_data.posts[static_cast<std::size_t>(pair.post_id - 1)];
        REQUIRE(post.post_id == pair.post_id);
        for (const auto& comment : post.comments)
            CHECK(comment.text != pair.question_text);
        // always some other post's seed question of the same domain
        bool from_pool = false;
        for (const auto& other : corpus_data.posts)
            if (other.post_id != pair.post_id && other.domain == pair.domain &&
                !other.comments.empty() && other.comments.back().text == pair.question_text)
                from_pool = true;
        CHECK(from_pool);
    }
}

TEST_CASE("build_seed on a 4-post corpus uses every admissible negative source") {
    // exhaustive check at a size where all candidate negatives can be listed
    auto corpus_data = testsupport::make_synthetic({.n_posts = 4, .noise = 0.0, .seed = 11});
    refine::NegativePool pool(corpus_data.posts);
    auto seed = refine::build_seed(corpus_data.posts, tiny_config(11), pool);
    CHECK(seed.count(Label::positive) == 4);
    CHECK(seed.count(Label::negative) == 4);
    for (const auto& pair : seed.pairs) {
        if (pair.pseudo_label != Label::negative) continue;
        std::vector<std::string> admissible;
        for (const auto& other : corpus_data.posts)
            if (other.post_id != pair.post_id)
                admissible.push_back(other.comments.back().text);
        CHECK(std::count(admissible.begin(), admissible.end(), pair.question_text) == 1);
    }
}

TEST_CASE("a single-post domain cannot be seeded") {
    auto corpus_data = testsupport::make_synthetic({.n_posts = 6, .noise = 0.0, .seed = 3});
    ingest::PostRecord lone;
    lone.post_id = 999;
    lone.domain = "lonely";
    lone.title = "only post";
    lone.body = "topic0 body";
    lone.answers.push_back("a");
    lone.comments.push_back({"what detail0 ?", "2020-01-01T00:00:00"});
    corpus_data.posts.push_back(lone);

    refine::NegativePool pool(corpus_data.posts);
    CHECK_THROWS_WITH_AS(refine::build_seed(corpus_data.posts, tiny_config(3), pool),
                         doctest::Contains("DomainTooSmall"), Error);
}

TEST_CASE("down-sampling keeps floor(0.4 * survivors) positives") {
    SmallFixture fx(10);
    auto cfg = tiny_config(4);
    cfg.train.epochs = 1;
    cfg.threshold = 0.0; // every positive survives, isolating the cut arithmetic
    auto step = refine::down_sample_step(fx.prev, "D1", cfg, fx.pool, {});
    CHECK(step.set.count(Label::positive) == 4);
    CHECK(step.set.count(Label::negative) == 4);
    CHECK(step.set.stage_name == "D1");
    // the kept positives all carry a confidence and remain a subset of prev
    auto prev_keys = positive_keys(fx.prev);
    for (const auto& pair : step.set.pairs) {
        if (pair.pseudo_label != Label::positive) continue;
        CHECK(pair.confidence.has_value());
        CHECK(prev_keys.count({pair.post_id, pair.question_text}) == 1);
    }
}

TEST_CASE("the confidence cut never drops below one positive") {
    SmallFixture fx(10);
    LabeledSet one;
    one.stage_name = "D0";
    // 1 positive + negatives: floor(0.4 * 1) = 0 must clamp to 1
    for (const auto& pair : fx.prev.pairs)
        if (pair.pseudo_label == Label::negative || one.count(Label::positive) == 0)
            one.pairs.push_back(pair);
    auto cfg = tiny_config(4);
    cfg.train.epochs = 1;
    cfg.threshold = 0.0;
    auto step = refine::down_sample_step(one, "D1", cfg, fx.pool, {});
    CHECK(step.set.count(Label::positive) == 1);
}

TEST_CASE("an impossible threshold collapses the stage") {
    SmallFixture fx(6);
    auto cfg = tiny_config(6);
    cfg.train.epochs = 1;
    cfg.threshold = 1.1; // probabilities never reach it
    CHECK_THROWS_WITH_AS(refine::down_sample_step(fx.prev, "D1", cfg, fx.pool, {}),
                         doctest::Contains("CollapsedStage"), Error);
    CHECK_THROWS_WITH_AS(
        refine::up_sample_step(fx.prev, fx.prev, "S0", cfg, fx.pool, {}),
        doctest::Contains("CollapsedStage"), Error);
}

TEST_CASE("up-sampling applies no confidence cut") {
    SmallFixture fx(10);
    auto cfg = tiny_config(8);
    cfg.train.epochs = 1;
    cfg.threshold = 0.0; // all target positives survive
    auto step = refine::up_sample_step(fx.prev, fx.prev, "S0", cfg, fx.pool, {});
    CHECK(positive_keys(step.set) == positive_keys(fx.prev));
}

TEST_CASE("a full refinement run obeys the structural invariants") {
    auto corpus_data = testsupport::make_synthetic({.n_posts = 80, .seed = 21});
    refine::NegativePool pool(corpus_data.posts);
    auto cfg = tiny_config(21, 2);
    cfg.train.epochs = 4;
    auto d0 = refine::build_seed(corpus_data.posts, cfg, pool);

    std::vector<LabeledSet> stages;
    auto result = refine::run_refinement(d0, cfg, pool, corpus_data.annotated,
                                         [&](const LabeledSet& s) { stages.push_back(s); });

    // stage sequence D1, D2, S2, S1, S0 and the 2N+1-row ledger
    REQUIRE(stages.size() == 5);
    CHECK(stages[0].stage_name == "D1");
    CHECK(stages[1].stage_name == "D2");
    CHECK(stages[2].stage_name == "S2");
    CHECK(stages[3].stage_name == "S1");
    CHECK(stages[4].stage_name == "S0");
    REQUIRE(result.ledger.rows.size() == 5);
    CHECK(result.ledger.rows[0].stage_name == "D1");
    CHECK(result.ledger.rows[4].stage_name == "final");
    CHECK(result.s0.stage_name == "S0");

    auto p_d0 = positive_keys(d0);
    auto p_d1 = positive_keys(stages[0]);
    auto p_d2 = positive_keys(stages[1]);
    auto p_s2 = positive_keys(stages[2]);
    auto p_s1 = positive_keys(stages[3]);
    auto p_s0 = positive_keys(stages[4]);

    auto subset = [](const auto& small, const auto& big) {
        return std::includes(big.begin(), big.end(), small.begin(), small.end());
    };
    // down-sampling shrinks monotonically; S_N is D_N verbatim
    CHECK(subset(p_d1, p_d0));
    CHECK(subset(p_d2, p_d1));
    CHECK(p_s2 == p_d2);
    // up-sampling re-admits only positives that existed one level down
    CHECK(subset(p_s1, p_d1));
    CHECK(subset(p_s0, p_d0));
    // down stages respect the 40% cut
    CHECK(p_d1.size() <= std::max<std::size_t>(1, p_d0.size() * 2 / 5));
    CHECK(p_d2.size() <= std::max<std::size_t>(1, p_d1.size() * 2 / 5));

    // every stage: negatives valid (same domain, never an own comment)
    for (const auto& stage : stages) {
        for (const auto& pair : stage.pairs) {
            if (pair.pseudo_label != Label::negative) continue;
            const auto& post =
                corpus_data.posts[static_cast<std::size_t>(pair.post_id - 1)];
            REQUIRE(post.post_id == pair.post_id);
            CHECK(pair.domain == post.domain);
            for (const auto& comment : post.comments)
                CHECK(comment.text != pair.question_text);
        }
        CHECK(stage.count(Label::positive) > 0);
        // roughly balanced: the sampler may skip duplicates, never overshoot
        CHECK(stage.count(Label::negative) <= stage.count(Label::positive));
    }
}

TEST_CASE("refinement is bit-for-bit deterministic") {
    auto corpus_data = testsupport::make_synthetic({.n_posts = 50, .seed = 33});
    refine::NegativePool pool(corpus_data.posts);
    auto cfg = tiny_config(33, 1);
    cfg.train.epochs = 3;
    auto d0 = refine::build_seed(corpus_data.posts, cfg, pool);

    auto run = [&]() {
        auto result = refine::run_refinement(d0, cfg, pool, corpus_data.annotated);
        std::stringstream ledger;
        refine::write_ledger_csv(result.ledger, ledger);
        std::stringstream s0;
        corpus::write_stage(result.s0, s0);
        return std::pair{ledger.str(), s0.str()};
    };
    auto [ledger_a, s0_a] = run();
    auto [ledger_b, s0_b] = run();
    CHECK(ledger_a == ledger_b);
    CHECK(s0_a == s0_b);
    CHECK(ledger_a.find("final") != std::string::npos);
}

TEST_CASE("classify_corpus walks every comment in order and applies the threshold") {
    auto corpus_data = testsupport::make_synthetic({.n_posts = 12, .seed = 41});
    encoder::Vocabulary vocab;
    vocab.add_text("x");
    encoder::TrainConfig tc = testsupport::small_train_config(41);
    encoder::PairScorerModel model(vocab, tc);
    model.params().set_zero(); // scores everything exactly 0.5

    auto all = refine::classify_corpus(model, corpus_data.posts, 0.5);
    std::size_t n_comments = 0;
    for (const auto& post : corpus_data.posts) n_comments += post.comments.size();
    CHECK(all.size() == n_comments);

    // input order preserved: post ids non-decreasing, comments in stored order
    std::size_t cursor = 0;
    for (const auto& post : corpus_data.posts)
        for (const auto& comment : post.comments) {
            CHECK(all[cursor].post_id == post.post_id);
            CHECK(all[cursor].question_text == comment.text);
            CHECK(all[cursor].confidence == doctest::Approx(0.5));
            CHECK_FALSE(all[cursor].answers.empty());
            ++cursor;
        }

    CHECK(refine::classify_corpus(model, corpus_data.posts, 0.51).empty());
}
