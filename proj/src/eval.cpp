#include "clarq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "clarq/csv.hpp"
#include "clarq/error.hpp"
#include "clarq/text.hpp"

namespace clarq::eval {

double f1_score(double precision, double recall) {
    double sum = precision + recall;
    return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

Metrics evaluate_classifier(const encoder::PairScorerModel& model,
                            const std::vector<AnnotatedPair>& test, double threshold) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& example : test) {
        bool predicted =
            model.confidence(example.pair.post_text, example.pair.question_text) >= threshold;
        bool gold = example.gold_label == corpus::Label::positive;
        if (predicted && gold) ++tp;
        else if (predicted) ++fp;
        else if (gold) ++fn;
    }
    Metrics m;
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

void write_annotated_csv(const std::vector<AnnotatedPair>& pairs, std::ostream& out) {
    out << csv::format_row({"domain", "post_id", "question_text", "gold_label"});
    for (const auto& example : pairs)
        out << csv::format_row({example.pair.domain, std::to_string(example.pair.post_id),
                                example.pair.question_text,
                                corpus::to_string(example.gold_label)});
}

std::vector<AnnotatedPair> read_annotated_csv(std::istream& in,
                                              const std::vector<ingest::PostRecord>& posts) {
    std::unordered_map<std::int64_t, const ingest::PostRecord*> by_id;
    for (const auto& post : posts) by_id[post.post_id] = &post;

    std::vector<AnnotatedPair> out;
    std::vector<std::string> fields;
    bool header = true;
    while (csv::read_row(in, fields)) {
        if (header) {
            header = false;
            continue;
        }
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 4)
            throw Error("SchemaError", "annotated CSV rows need 4 fields");
        AnnotatedPair example;
        example.pair.domain = fields[0];
        example.pair.post_id = std::stoll(fields[1]);
        example.pair.question_text = fields[2];
        example.gold_label = corpus::label_from_string(fields[3]);
        auto it = by_id.find(example.pair.post_id);
        if (it == by_id.end())
            throw Error("SchemaError", "annotated post id " + fields[1] +
                                           " not present in the ingested corpus");
        example.pair.post_text = it->second->title + " " + it->second->body;
        example.pair.source = corpus::PairSource::any_comment;
        out.push_back(std::move(example));
    }
    return out;
}

TfIdfScorer::TfIdfScorer(const std::vector<std::string>& documents) {
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
        std::vector<std::string> tokens = text::word_tokenize(doc);
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (auto& token : tokens) ++df[token];
    }
    const double n = static_cast<double>(documents.size());
    for (const auto& [token, count] : df)
        idf_[token] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
    default_idf_ = std::log(1.0 + n) + 1.0; // unseen term: df = 0
}

double TfIdfScorer::idf(const std::string& token) const {
    auto it = idf_.find(token);
    return it == idf_.end() ? default_idf_ : it->second;
}

namespace {

std::unordered_map<std::string, double> tfidf_vector(const TfIdfScorer& scorer,
                                                     const std::string& doc) {
    std::unordered_map<std::string, double> tf;
    for (const auto& token : text::word_tokenize(doc)) tf[token] += 1.0;
    for (auto& [token, weight] : tf) weight *= scorer.idf(token);
    return tf;
}

} // namespace

double TfIdfScorer::score(const std::string& query, const std::string& answer) const {
    auto q = tfidf_vector(*this, query);
    auto a = tfidf_vector(*this, answer);
    double dot = 0.0, qn = 0.0, an = 0.0;
    for (const auto& [token, weight] : q) {
        qn += weight * weight;
        auto it = a.find(token);
        if (it != a.end()) dot += weight * it->second;
    }
    for (const auto& [token, weight] : a) an += weight * weight;
    if (qn == 0.0 || an == 0.0) return 0.0;
    return dot / (std::sqrt(qn) * std::sqrt(an));
}

double EncoderScorer::score(const std::string& query, const std::string& answer) const {
    return model_.confidence(query, answer);
}

std::vector<RerankInstance> build_rerank_instances(
    const std::vector<ingest::PostRecord>& corpus, const std::vector<std::string>& domains,
    std::size_t n_per_domain, std::size_t pool_size, Rng& rng) {
    std::unordered_map<std::string, std::vector<const ingest::PostRecord*>> by_domain;
    for (const auto& post : corpus) by_domain[post.domain].push_back(&post);

    std::vector<RerankInstance> out;
    for (const auto& domain : domains) {
        auto it = by_domain.find(domain);
        const auto& posts = it == by_domain.end()
                                ? std::vector<const ingest::PostRecord*>{}
                                : it->second;
        if (posts.size() < pool_size)
            throw Error("DomainTooSmall",
                        "domain '" + domain + "' has " + std::to_string(posts.size()) +
                            " answered posts; reranking needs >= " +
                            std::to_string(pool_size));
        for (std::size_t k = 0; k < n_per_domain; ++k) {
            const ingest::PostRecord* post = posts[rng.index(posts.size())];
            RerankInstance instance;
            instance.post_text = post->title + " " + post->body;
            // last comment containing "?" doubles as the clarification question
            for (auto rit = post->comments.rbegin(); rit != post->comments.rend(); ++rit) {
                if (rit->text.find('?') != std::string::npos) {
                    instance.clarification_question = rit->text;
                    break;
                }
            }
            const std::string& gold = post->answers[rng.index(post->answers.size())];

            // distractors without replacement from the other posts
            std::vector<std::size_t> others;
            others.reserve(posts.size() - 1);
            for (std::size_t i = 0; i < posts.size(); ++i)
                if (posts[i] != post) others.push_back(i);
            rng.shuffle(others);
            instance.candidates.reserve(pool_size);
            for (std::size_t i = 0; i + 1 < pool_size && i < others.size(); ++i) {
                const auto& answers = posts[others[i]]->answers;
                instance.candidates.push_back(answers[rng.index(answers.size())]);
            }
            instance.gold_index = rng.index(instance.candidates.size() + 1);
            instance.candidates.insert(
                instance.candidates.begin() +
                    static_cast<std::ptrdiff_t>(instance.gold_index),
                gold);
            out.push_back(std::move(instance));
        }
    }
    return out;
}

std::vector<std::size_t> rerank(const Scorer& scorer, const RerankInstance& instance,
                                bool use_cq) {
    std::string query = instance.post_text;
    if (use_cq) {
        if (!instance.clarification_question)
            throw Error("MissingCq", "instance has no clarification question");
        query += " " + *instance.clarification_question;
    }
    std::vector<double> scores(instance.candidates.size());
    for (std::size_t i = 0; i < instance.candidates.size(); ++i)
        scores[i] = scorer.score(query, instance.candidates[i]);
    std::vector<std::size_t> order(instance.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

RerankReport rerank_report(const std::vector<RerankInstance>& instances,
                           const Scorer& scorer, bool use_cq) {
    if (instances.empty()) throw Error("EmptyInput", "no reranking instances");
    RerankReport report;
    report.with_cq = use_cq;
    std::array<std::size_t, 5> hits{};
    double rr_sum = 0.0;
    for (const auto& instance : instances) {
        auto order = rerank(scorer, instance, use_cq);
        std::size_t rank = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == instance.gold_index) {
                rank = i + 1;
                break;
            }
        }
        rr_sum += 1.0 / static_cast<double>(rank);
        for (std::size_t k = 1; k <= 5; ++k)
            if (rank <= k) ++hits[k - 1];
    }
    const double n = static_cast<double>(instances.size());
    for (std::size_t k = 1; k <= 5; ++k)
        report.p_at_k[k - 1] = static_cast<double>(hits[k - 1]) / (n * static_cast<double>(k));
    report.mrr = rr_sum / n;
    return report;
}

} // namespace clarq::eval
