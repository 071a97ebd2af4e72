#pragma once

// Seeded synthetic corpora with a known generating rule, shared by the
// refine/eval tests and the acceptance suite. A post of type t carries
// "topict" in its body; its genuine clarification question carries the
// matching "detailt" marker (plus a post-unique value token that also
// appears in the gold answer). Noise questions carry no marker.

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "clarq/encoder.hpp"
#include "clarq/eval.hpp"
#include "clarq/ingest.hpp"
#include "clarq/rng.hpp"

namespace clarq::testsupport {

struct SyntheticOptions {
    std::size_t n_posts = 300;
    int n_types = 6;
    double noise = 0.10; // fraction of posts whose last comment is noise
    std::uint64_t seed = 1;
    std::string domain = "synth";
};

struct SyntheticCorpus {
    std::vector<ingest::PostRecord> posts;
    std::unordered_map<std::int64_t, int> type_of;
    std::unordered_set<std::string> noise_questions; // texts of noise last-comments
    std::vector<eval::AnnotatedPair> annotated;      // held-out labeled slice
};

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "the",  "a",      "my",     "setup", "config", "issue", "problem",
        "with", "when",   "running", "error", "works",  "fails", "after",
        "help", "update", "broken", "slow",  "new",    "old"};
    return words;
}

inline std::string filler(Rng& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += filler_words()[rng.index(filler_words().size())];
    }
    return out;
}

inline std::string noise_question(Rng& rng) {
    static const std::vector<std::string> pool = {
        "is this still relevant ?", "did you ever solve this ?",
        "can you try rebooting first ?", "have you searched existing threads ?"};
    return pool[rng.index(pool.size())];
}

inline SyntheticCorpus make_synthetic(const SyntheticOptions& opt) {
    SyntheticCorpus corpus;
    Rng rng(opt.seed);
    for (std::size_t p = 0; p < opt.n_posts; ++p) {
        std::int64_t id = static_cast<std::int64_t>(p + 1);
        int t = static_cast<int>(rng.index(static_cast<std::size_t>(opt.n_types)));
        corpus.type_of[id] = t;

        ingest::PostRecord post;
        post.post_id = id;
        post.domain = opt.domain;
        post.title = "trouble with topic" + std::to_string(t);
        post.body = filler(rng, 3) + " topic" + std::to_string(t) + " " + filler(rng, 4);
        post.answers.push_back("use value" + std::to_string(id) + " with topic" +
                               std::to_string(t) + " " + filler(rng, 3));

        int tick = 0;
        std::size_t n_pre = rng.index(3);
        for (std::size_t k = 0; k < n_pre; ++k)
            post.comments.push_back(
                {"see thread above " + filler(rng, 2) + " .",
                 "2020-01-01T00:0" + std::to_string(tick++) + ":00"});
        std::string last;
        if (rng.real() < opt.noise) {
            last = noise_question(rng);
            corpus.noise_questions.insert(last);
        } else {
            last = "about value" + std::to_string(id) + " , what detail" +
                   std::to_string(t) + " do you have ?";
        }
        post.comments.push_back({last, "2020-01-01T00:0" + std::to_string(tick++) + ":00"});
        corpus.posts.push_back(std::move(post));
    }

    // held-out labeled slice, roughly 7:3 positive to negative, gold labels
    // assigned by the generating rule (marker match)
    Rng test_rng(derive_seed(opt.seed, "test-slice"));
    for (std::size_t k = 0; k < opt.n_posts / 3; ++k) {
        const ingest::PostRecord& post = corpus.posts[test_rng.index(corpus.posts.size())];
        int t = corpus.type_of.at(post.post_id);
        eval::AnnotatedPair example;
        example.pair.post_id = post.post_id;
        example.pair.domain = opt.domain;
        example.pair.post_text = post.title + " " + post.body;
        if (test_rng.real() < 0.7) {
            example.pair.question_text = "about value9" +
                                         std::to_string(test_rng.index(1000)) +
                                         " , what detail" + std::to_string(t) +
                                         " do you have ?";
            example.gold_label = corpus::Label::positive;
        } else if (test_rng.real() < 0.5) {
            int other = (t + 1 + static_cast<int>(test_rng.index(
                                     static_cast<std::size_t>(opt.n_types - 1)))) %
                        opt.n_types;
            example.pair.question_text = "about value9" +
                                         std::to_string(test_rng.index(1000)) +
                                         " , what detail" + std::to_string(other) +
                                         " do you have ?";
            example.gold_label = corpus::Label::negative;
        } else {
            example.pair.question_text = noise_question(test_rng);
            example.gold_label = corpus::Label::negative;
        }
        corpus.annotated.push_back(std::move(example));
    }
    return corpus;
}

// Training configuration small enough for desk-scale synthetic runs.
inline encoder::TrainConfig small_train_config(std::uint64_t seed = 0) {
    encoder::TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.2;
    cfg.rng_seed = seed;
    cfg.max_post_len = 24;
    cfg.max_question_len = 12;
    cfg.embed_dim = 12;
    cfg.hidden_dim = 16;
    cfg.dense_dim = 12;
    return cfg;
}

} // namespace clarq::testsupport
