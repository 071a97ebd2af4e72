#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/encoder.hpp"
#include "clarq/ingest.hpp"
#include "clarq/rng.hpp"

namespace clarq::eval {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// A test pair with a human (or fixture) gold label, independent of any
// pseudo-label the pipeline may have assigned.
struct AnnotatedPair {
    corpus::CandidatePair pair;
    corpus::Label gold_label = corpus::Label::negative;
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), f1 = 2PR/(P+R); each falls
// back to 0 when its denominator is 0.
Metrics evaluate_classifier(const encoder::PairScorerModel& model,
                            const std::vector<AnnotatedPair>& test, double threshold);

double f1_score(double precision, double recall);

// Annotated test set CSV: domain,post_id,question_text,gold_label (header row).
// post_text is resolved against `posts` by post_id.
void write_annotated_csv(const std::vector<AnnotatedPair>& pairs, std::ostream& out);
std::vector<AnnotatedPair> read_annotated_csv(
    std::istream& in, const std::vector<ingest::PostRecord>& posts);

struct RerankInstance {
    std::string post_text;
    std::optional<std::string> clarification_question;
    std::vector<std::string> candidates; // pool_size answers, gold once
    std::size_t gold_index = 0;
};

struct RerankReport {
    std::array<double, 5> p_at_k{}; // k = 1..5
    double mrr = 0.0;
    bool with_cq = false;
};

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double score(const std::string& query, const std::string& answer) const = 0;
};

// Term-overlap baseline: smoothed-idf tf-idf vectors compared by cosine.
class TfIdfScorer : public Scorer {
public:
    // idf fitted over the given document collection
    explicit TfIdfScorer(const std::vector<std::string>& documents);
    double score(const std::string& query, const std::string& answer) const override;

    double idf(const std::string& token) const;

private:
    std::unordered_map<std::string, double> idf_;
    double default_idf_ = 0.0;
};

// Trained post-answer dual encoder used as a ranking model.
class EncoderScorer : public Scorer {
public:
    explicit EncoderScorer(encoder::PairScorerModel model) : model_(std::move(model)) {}
    double score(const std::string& query, const std::string& answer) const override;

private:
    encoder::PairScorerModel model_;
};

// Builds reranking instances: gold answer from the post itself, pool_size-1
// distractors sampled without replacement from other posts of the same
// domain, gold at a seeded random slot. Throws DomainTooSmall.
std::vector<RerankInstance> build_rerank_instances(
    const std::vector<ingest::PostRecord>& corpus, const std::vector<std::string>& domains,
    std::size_t n_per_domain, std::size_t pool_size, Rng& rng);

// Candidate indices sorted by scorer value descending, ties by ascending
// index. Query is post_text, optionally extended with the clarification
// question. Throws MissingCq.
std::vector<std::size_t> rerank(const Scorer& scorer, const RerankInstance& instance,
                                bool use_cq);

// P@k = mean over instances of [gold in top k]/k; MRR = mean of 1/rank(gold).
RerankReport rerank_report(const std::vector<RerankInstance>& instances,
                           const Scorer& scorer, bool use_cq);

} // namespace clarq::eval
