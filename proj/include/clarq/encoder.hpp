#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clarq/corpus.hpp"
#include "clarq/vocab.hpp"

namespace clarq::encoder {

struct TrainConfig {
    int epochs = 5;
    int batch_size = 64;
    double learning_rate = 0.05;
    std::uint64_t rng_seed = 0;
    std::size_t max_post_len = 300;
    std::size_t max_question_len = 60;
    int embed_dim = 64;   // d_e
    int hidden_dim = 128; // d_h
    int dense_dim = 64;   // d_f
};

// Gate rows stacked [input; forget; cell; output], so 4*d_h rows.
struct LstmParams {
    Eigen::MatrixXd w_input;     // 4*d_h x d_e
    Eigen::MatrixXd w_recurrent; // 4*d_h x d_h
    Eigen::VectorXd bias;        // 4*d_h
};

enum class Side { post, question };

// Full parameter set of the pair classifier. The two encoders never share
// weights; the output layer always has exactly 2 units.
struct Parameters {
    Eigen::MatrixXd embeddings; // d_e x |V|
    LstmParams post_encoder;
    LstmParams question_encoder;
    Eigen::MatrixXd w_hidden; // d_f x d_h
    Eigen::VectorXd b_hidden; // d_f
    Eigen::MatrixXd w_output; // 2 x d_f
    Eigen::VectorXd b_output; // 2

    void set_zero();
    // Visits every parameter block in a fixed order as a flat double span.
    void for_each_block(
        const std::function<void(const std::string&, double*, std::size_t)>& fn);
    std::size_t total_count();
};

// Twin LSTM encoders fused by element-wise product into a dense softmax head.
class PairScorerModel {
public:
    PairScorerModel() = default;
    PairScorerModel(Vocabulary vocab, const TrainConfig& cfg);

    const Vocabulary& vocab() const { return vocab_; }
    const TrainConfig& config() const { return cfg_; }
    Parameters& params() { return params_; }
    const Parameters& params() const { return params_; }

    // Final hidden state of the selected encoder. Throws EmptySequence.
    Eigen::VectorXd encode(std::span<const std::int32_t> ids, Side side) const;

    // (prob_negative, prob_positive); sums to 1 within 1e-9.
    std::pair<double, double> score_pair(std::span<const std::int32_t> post_ids,
                                         std::span<const std::int32_t> question_ids) const;

    // Convenience: tokenize with the model's vocab and length caps, then score.
    double confidence(const std::string& post_text, const std::string& question_text) const;

    std::vector<std::int32_t> tokenize_post(const std::string& text) const;
    std::vector<std::int32_t> tokenize_question(const std::string& text) const;

    // Cross-entropy loss of one labeled pair; accumulates analytic gradients
    // into `grads` when non-null.
    double pair_loss(std::span<const std::int32_t> post_ids,
                     std::span<const std::int32_t> question_ids, corpus::Label label,
                     Parameters* grads = nullptr) const;

    void save(const std::string& path) const;
    static PairScorerModel load(const std::string& path);

private:
    Vocabulary vocab_;
    TrainConfig cfg_;
    Parameters params_;
};

// Mini-batch SGD on cross-entropy; seeded shuffling; returns the per-epoch
// mean loss trace (cfg.epochs entries). Throws DegenerateSet when the set is
// missing a class.
std::vector<double> train(PairScorerModel& model, const corpus::LabeledSet& set,
                          const TrainConfig& cfg);

// Builds a vocabulary from the set's text, initializes a fresh model and
// trains it. Loss trace returned through `trace` when non-null.
PairScorerModel train_fresh(const corpus::LabeledSet& set, const TrainConfig& cfg,
                            std::vector<double>* trace = nullptr);

// Max relative error between analytic gradients and central finite
// differences over `sample_count` randomly chosen parameters (all of them
// when the model has fewer).
double grad_check(const PairScorerModel& model, std::span<const std::int32_t> post_ids,
                  std::span<const std::int32_t> question_ids, corpus::Label label,
                  double epsilon, std::size_t sample_count = 50, std::uint64_t seed = 7);

} // namespace clarq::encoder
