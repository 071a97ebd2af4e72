#include "clarq/refine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "clarq/csv.hpp"
#include "clarq/error.hpp"

namespace clarq::refine {

namespace {

std::string metric_str(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// Dedup key over (post_id, question_text, label).
std::string pair_key(std::int64_t post_id, const std::string& question, corpus::Label label) {
    return std::to_string(post_id) + '\x1f' + question + '\x1f' +
           corpus::to_string(label);
}

// Last comment on a post, i.e. max (creation, id); comments are stored
// pre-sorted so it is simply the back.
const ingest::Comment* last_comment(const ingest::PostRecord& post) {
    return post.comments.empty() ? nullptr : &post.comments.back();
}

encoder::TrainConfig stage_train_config(const RefineConfig& cfg,
                                        const std::string& stage_name) {
    encoder::TrainConfig tc = cfg.train;
    tc.rng_seed = derive_seed(cfg.rng_seed, stage_name + "/train");
    return tc;
}

eval::Metrics maybe_evaluate(const encoder::PairScorerModel& model,
                             const std::vector<eval::AnnotatedPair>& test_set,
                             double threshold) {
    if (test_set.empty()) return {};
    return eval::evaluate_classifier(model, test_set, threshold);
}

// Appends `count` freshly sampled negatives, one drawn per positive in
// round-robin order. Duplicate triples are skipped after bounded retries.
void resample_negatives(corpus::LabeledSet& set,
                        const std::vector<corpus::CandidatePair>& positives,
                        std::size_t count, const NegativePool& pool, Rng& rng) {
    std::unordered_set<std::string> seen;
    for (const auto& pair : set.pairs)
        seen.insert(pair_key(pair.post_id, pair.question_text, *pair.pseudo_label));

    // per-post record of already used negative questions
    std::unordered_map<std::int64_t, std::unordered_set<std::string>> used;
    for (std::size_t k = 0; k < count && !positives.empty(); ++k) {
        const corpus::CandidatePair& anchor = positives[k % positives.size()];
        std::string question;
        if (!pool.sample(anchor.domain, anchor.post_id, used[anchor.post_id], rng, question))
            continue; // domain exhausted for this post
        std::string key = pair_key(anchor.post_id, question, corpus::Label::negative);
        if (!seen.insert(key).second) {
            used[anchor.post_id].insert(question);
            --k; // retry with a different draw
            continue;
        }
        used[anchor.post_id].insert(question);
        corpus::CandidatePair negative;
        negative.post_id = anchor.post_id;
        negative.domain = anchor.domain;
        negative.post_text = anchor.post_text;
        negative.question_text = std::move(question);
        negative.source = corpus::PairSource::sampled_negative;
        negative.pseudo_label = corpus::Label::negative;
        set.pairs.push_back(std::move(negative));
    }
}

// Scores prev's pseudo-positive pairs and returns the survivors
// (prob_positive >= threshold) with confidence attached.
std::vector<corpus::CandidatePair> surviving_positives(
    const encoder::PairScorerModel& model, const corpus::LabeledSet& prev,
    double threshold) {
    std::vector<corpus::CandidatePair> out;
    for (const auto& pair : prev.pairs) {
        if (pair.pseudo_label != corpus::Label::positive) continue;
        double conf = model.confidence(pair.post_text, pair.question_text);
        if (conf < threshold) continue;
        corpus::CandidatePair kept = pair;
        kept.confidence = conf;
        out.push_back(std::move(kept));
    }
    return out;
}

} // namespace

void write_ledger_csv(const StageLedger& ledger, std::ostream& out) {
    out << csv::format_row({"stage", "positives", "negatives", "precision", "recall", "f1"});
    for (const auto& row : ledger.rows)
        out << csv::format_row({row.stage_name, std::to_string(row.positives),
                                std::to_string(row.negatives),
                                metric_str(row.metrics.precision),
                                metric_str(row.metrics.recall), metric_str(row.metrics.f1)});
}

NegativePool::NegativePool(const std::vector<ingest::PostRecord>& corpus) {
    for (const auto& post : corpus) {
        auto& comments = post_comments_[post.post_id];
        for (const auto& comment : post.comments) comments.insert(comment.text);
        const ingest::Comment* last = last_comment(post);
        if (last && last->text.find('?') != std::string::npos)
            by_domain_[post.domain].push_back(Entry{post.post_id, last->text});
    }
}

std::size_t NegativePool::domain_post_count(const std::string& domain) const {
    auto it = by_domain_.find(domain);
    return it == by_domain_.end() ? 0 : it->second.size();
}

bool NegativePool::sample(const std::string& domain, std::int64_t post_id,
                          const std::unordered_set<std::string>& used, Rng& rng,
                          std::string& question_out) const {
    auto it = by_domain_.find(domain);
    if (it == by_domain_.end() || it->second.empty()) return false;
    const auto& entries = it->second;
    auto own = post_comments_.find(post_id);
    auto valid = [&](const Entry& e) {
        if (e.post_id == post_id) return false;
        if (used.count(e.question)) return false;
        if (own != post_comments_.end() && own->second.count(e.question)) return false;
        return true;
    };
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Entry& e = entries[rng.index(entries.size())];
        if (valid(e)) {
            question_out = e.question;
            return true;
        }
    }
    // dense fallback: deterministic scan from a random start
    std::size_t start = rng.index(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[(start + i) % entries.size()];
        if (valid(e)) {
            question_out = e.question;
            return true;
        }
    }
    return false;
}

corpus::LabeledSet build_seed(const std::vector<ingest::PostRecord>& corpus_records,
                              const RefineConfig& cfg, const NegativePool& pool) {
    corpus::LabeledSet seed;
    seed.stage_name = "D0";
    seed.rng_seed = derive_seed(cfg.rng_seed, "D0/negatives");

    std::vector<corpus::CandidatePair> positives;
    for (const auto& post : corpus_records) {
        const ingest::Comment* last = last_comment(post);
        if (!last || last->text.find('?') == std::string::npos) continue;
        if (pool.domain_post_count(post.domain) < 2)
            throw Error("DomainTooSmall",
                        "domain '" + post.domain +
                            "' has fewer than 2 posts with seed positives; no valid "
                            "negative exists");
        corpus::CandidatePair positive;
        positive.post_id = post.post_id;
        positive.domain = post.domain;
        positive.post_text = post.title + " " + post.body;
        positive.question_text = last->text;
        positive.source = corpus::PairSource::last_comment;
        positive.pseudo_label = corpus::Label::positive;
        positives.push_back(std::move(positive));
    }
    seed.pairs = positives;

    Rng rng(seed.rng_seed);
    std::size_t n_negatives = static_cast<std::size_t>(
        std::floor(cfg.negative_ratio * static_cast<double>(positives.size())));
    resample_negatives(seed, positives, n_negatives, pool, rng);
    return seed;
}

StepResult down_sample_step(const corpus::LabeledSet& prev, const std::string& stage_name,
                            const RefineConfig& cfg, const NegativePool& pool,
                            const std::vector<eval::AnnotatedPair>& test_set) {
    encoder::PairScorerModel model =
        encoder::train_fresh(prev, stage_train_config(cfg, stage_name));

    std::vector<corpus::CandidatePair> survivors =
        surviving_positives(model, prev, cfg.threshold);
    if (survivors.empty())
        throw Error("CollapsedStage",
                    "stage '" + stage_name + "': no surviving positives (D_temp empty)");

    std::sort(survivors.begin(), survivors.end(),
              [](const corpus::CandidatePair& a, const corpus::CandidatePair& b) {
                  if (*a.confidence != *b.confidence) return *a.confidence > *b.confidence;
                  if (a.post_id != b.post_id) return a.post_id < b.post_id;
                  return a.question_text < b.question_text;
              });
    std::size_t keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor(cfg.keep_fraction * static_cast<double>(survivors.size()))));
    survivors.resize(keep);

    StepResult result{.set = {}, .metrics = maybe_evaluate(model, test_set, cfg.threshold),
                      .model = std::move(model)};
    result.set.stage_name = stage_name;
    result.set.rng_seed = derive_seed(cfg.rng_seed, stage_name + "/negatives");
    result.set.pairs = survivors;
    Rng rng(result.set.rng_seed);
    std::size_t n_negatives = static_cast<std::size_t>(
        std::floor(cfg.negative_ratio * static_cast<double>(survivors.size())));
    resample_negatives(result.set, survivors, n_negatives, pool, rng);
    return result;
}

StepResult up_sample_step(const corpus::LabeledSet& train_set,
                          const corpus::LabeledSet& target, const std::string& stage_name,
                          const RefineConfig& cfg, const NegativePool& pool,
                          const std::vector<eval::AnnotatedPair>& test_set) {
    encoder::PairScorerModel model =
        encoder::train_fresh(train_set, stage_train_config(cfg, stage_name));

    // no confidence cut here: every surviving positive of the target is kept
    std::vector<corpus::CandidatePair> survivors =
        surviving_positives(model, target, cfg.threshold);
    if (survivors.empty())
        throw Error("CollapsedStage",
                    "stage '" + stage_name + "': no surviving positives in target");

    StepResult result{.set = {}, .metrics = maybe_evaluate(model, test_set, cfg.threshold),
                      .model = std::move(model)};
    result.set.stage_name = stage_name;
    result.set.rng_seed = derive_seed(cfg.rng_seed, stage_name + "/negatives");
    result.set.pairs = survivors;
    Rng rng(result.set.rng_seed);
    std::size_t n_negatives = static_cast<std::size_t>(
        std::floor(cfg.negative_ratio * static_cast<double>(survivors.size())));
    resample_negatives(result.set, survivors, n_negatives, pool, rng);
    return result;
}

RefineResult run_refinement(const corpus::LabeledSet& d0, const RefineConfig& cfg,
                            const NegativePool& pool,
                            const std::vector<eval::AnnotatedPair>& test_set,
                            const std::function<void(const corpus::LabeledSet&)>& on_stage) {
    const int n = cfg.n_iterations;
    StageLedger ledger;
    std::vector<corpus::LabeledSet> down_stages;
    down_stages.reserve(static_cast<std::size_t>(n) + 1);
    down_stages.push_back(d0);

    for (int i = 1; i <= n; ++i) {
        std::string name = "D" + std::to_string(i);
        StepResult step = down_sample_step(down_stages.back(), name, cfg, pool, test_set);
        ledger.rows.push_back(StageRow{name, step.set.count(corpus::Label::positive),
                                       step.set.count(corpus::Label::negative),
                                       step.metrics});
        if (on_stage) on_stage(step.set);
        down_stages.push_back(std::move(step.set));
    }

    corpus::LabeledSet current = down_stages.back(); // S_N = D_N
    current.stage_name = "S" + std::to_string(n);
    if (on_stage) on_stage(current);
    for (int i = n; i >= 1; --i) {
        std::string name = "S" + std::to_string(i - 1);
        StepResult step = up_sample_step(current, down_stages[static_cast<std::size_t>(i - 1)],
                                         name, cfg, pool, test_set);
        ledger.rows.push_back(StageRow{name, step.set.count(corpus::Label::positive),
                                       step.set.count(corpus::Label::negative),
                                       step.metrics});
        if (on_stage) on_stage(step.set);
        current = std::move(step.set);
    }

    encoder::PairScorerModel final_model =
        encoder::train_fresh(current, stage_train_config(cfg, "final"));
    ledger.rows.push_back(StageRow{"final", current.count(corpus::Label::positive),
                                   current.count(corpus::Label::negative),
                                   maybe_evaluate(final_model, test_set, cfg.threshold)});
    return RefineResult{std::move(final_model), std::move(current), std::move(ledger)};
}

std::vector<corpus::ClarQRecord> classify_corpus(const encoder::PairScorerModel& model,
                                                 const std::vector<ingest::PostRecord>& posts,
                                                 double threshold) {
    std::vector<corpus::ClarQRecord> out;
    for (const auto& post : posts) {
        const std::string post_text = post.title + " " + post.body;
        for (const auto& comment : post.comments) {
            double conf = model.confidence(post_text, comment.text);
            if (conf < threshold) continue;
            corpus::ClarQRecord record;
            record.domain = post.domain;
            record.post_id = post.post_id;
            record.post_text = post_text;
            record.question_text = comment.text;
            record.answers = post.answers;
            record.confidence = conf;
            out.push_back(std::move(record));
        }
    }
    return out;
}

} // namespace clarq::refine
