#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/encoder.hpp"
#include "clarq/eval.hpp"
#include "clarq/ingest.hpp"
#include "clarq/rng.hpp"

namespace clarq::refine {

struct RefineConfig {
    int n_iterations = 5;        // N
    double keep_fraction = 0.4;  // confidence cut during down-sampling
    double negative_ratio = 1.0; // negatives per positive
    std::uint64_t rng_seed = 0;
    double threshold = 0.5;
    encoder::TrainConfig train;
};

struct StageRow {
    std::string stage_name;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    eval::Metrics metrics;
};

struct StageLedger {
    std::vector<StageRow> rows;
};

// CSV: stage,positives,negatives,precision,recall,f1
void write_ledger_csv(const StageLedger& ledger, std::ostream& out);

// Negative sampling source shared by every stage: the seed positive-question
// pool per domain, plus each post's own comment texts (negatives must never
// be a comment of their paired post).
class NegativePool {
public:
    explicit NegativePool(const std::vector<ingest::PostRecord>& corpus);

    // Question text from a different post of the same domain. Returns false
    // when no candidate outside `used` exists.
    bool sample(const std::string& domain, std::int64_t post_id,
                const std::unordered_set<std::string>& used, Rng& rng,
                std::string& question_out) const;

    std::size_t domain_post_count(const std::string& domain) const;

private:
    struct Entry {
        std::int64_t post_id;
        std::string question;
    };
    std::unordered_map<std::string, std::vector<Entry>> by_domain_;
    std::unordered_map<std::int64_t, std::unordered_set<std::string>> post_comments_;
};

// Seed dataset D_0: each post's last comment, kept when it contains "?",
// paired with one same-domain sampled negative per positive.
corpus::LabeledSet build_seed(const std::vector<ingest::PostRecord>& corpus,
                              const RefineConfig& cfg, const NegativePool& pool);

struct StepResult {
    corpus::LabeledSet set;
    eval::Metrics metrics;
    encoder::PairScorerModel model;
};

// One down-sampling round: fresh model on prev, keep the top keep_fraction of
// confident surviving positives, resample negatives. Throws CollapsedStage.
StepResult down_sample_step(const corpus::LabeledSet& prev, const std::string& stage_name,
                            const RefineConfig& cfg, const NegativePool& pool,
                            const std::vector<eval::AnnotatedPair>& test_set);

// One up-sampling round: fresh model on train_set, keep every surviving
// positive of target (no confidence cut), resample negatives.
StepResult up_sample_step(const corpus::LabeledSet& train_set,
                          const corpus::LabeledSet& target, const std::string& stage_name,
                          const RefineConfig& cfg, const NegativePool& pool,
                          const std::vector<eval::AnnotatedPair>& test_set);

struct RefineResult {
    encoder::PairScorerModel final_model;
    corpus::LabeledSet s0;
    StageLedger ledger;
};

// Full Algorithm-1 run: N down rounds (D_1..D_N), S_N = D_N, N up rounds
// (S_{N-1}..S_0), final model trained on S_0. `on_stage` (when set) receives
// every produced stage for persistence.
RefineResult run_refinement(const corpus::LabeledSet& d0, const RefineConfig& cfg,
                            const NegativePool& pool,
                            const std::vector<eval::AnnotatedPair>& test_set,
                            const std::function<void(const corpus::LabeledSet&)>& on_stage = {});

// Emits a ClarQRecord for every (post, comment) pair the model scores at or
// above the threshold; input order preserved.
std::vector<corpus::ClarQRecord> classify_corpus(const encoder::PairScorerModel& model,
                                                 const std::vector<ingest::PostRecord>& posts,
                                                 double threshold);

} // namespace clarq::refine
