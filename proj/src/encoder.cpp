#include "clarq/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "clarq/error.hpp"
#include "clarq/rng.hpp"

namespace clarq::encoder {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
    return 1.0 / (1.0 + (-z).exp());
}

// Per-timestep activations kept for backpropagation through time.
struct LstmTrace {
    std::vector<Eigen::VectorXd> x; // embedded inputs
    std::vector<Eigen::ArrayXd> gi, gf, gc, go;
    std::vector<Eigen::VectorXd> c, h;
};

Eigen::VectorXd lstm_forward(const LstmParams& p, const Eigen::MatrixXd& embeddings,
                             std::span<const std::int32_t> ids, LstmTrace* trace) {
    const Eigen::Index dh = p.w_recurrent.cols();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(dh);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dh);
    for (std::int32_t id : ids) {
        Eigen::VectorXd x = embeddings.col(id);
        Eigen::VectorXd z = p.w_input * x + p.w_recurrent * h + p.bias;
        Eigen::ArrayXd gi = sigmoid(z.segment(0, dh).array());
        Eigen::ArrayXd gf = sigmoid(z.segment(dh, dh).array());
        Eigen::ArrayXd gc = z.segment(2 * dh, dh).array().tanh();
        Eigen::ArrayXd go = sigmoid(z.segment(3 * dh, dh).array());
        c = (gf * c.array() + gi * gc).matrix();
        h = (go * c.array().tanh()).matrix();
        if (trace) {
            trace->x.push_back(std::move(x));
            trace->gi.push_back(std::move(gi));
            trace->gf.push_back(std::move(gf));
            trace->gc.push_back(std::move(gc));
            trace->go.push_back(std::move(go));
            trace->c.push_back(c);
            trace->h.push_back(h);
        }
    }
    return h;
}

// Backpropagates dh_final through the unrolled sequence, accumulating into
// the encoder's gradient blocks and the embedding gradient.
void lstm_backward(const LstmParams& p, std::span<const std::int32_t> ids,
                   const LstmTrace& trace, const Eigen::VectorXd& dh_final,
                   LstmParams& grad, Eigen::MatrixXd& grad_embeddings) {
    const Eigen::Index dim = p.w_recurrent.cols();
    const std::size_t steps = ids.size();
    Eigen::VectorXd dh = dh_final;
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(dh_final.size());
    for (std::size_t t = steps; t-- > 0;) {
        const Eigen::ArrayXd tanh_c = trace.c[t].array().tanh();
        const Eigen::ArrayXd c_prev = t == 0 ? Eigen::ArrayXd::Zero(dim).eval()
                                             : trace.c[t - 1].array().eval();
        const Eigen::VectorXd h_prev =
            t == 0 ? Eigen::VectorXd::Zero(dim).eval() : trace.h[t - 1];

        Eigen::ArrayXd d_go = dh.array() * tanh_c;
        Eigen::ArrayXd dc_t = dc.array() + dh.array() * trace.go[t] * (1.0 - tanh_c.square());
        Eigen::ArrayXd d_gi = dc_t * trace.gc[t];
        Eigen::ArrayXd d_gc = dc_t * trace.gi[t];
        Eigen::ArrayXd d_gf = dc_t * c_prev;

        Eigen::VectorXd dz(4 * dim);
        dz.segment(0, dim) = (d_gi * trace.gi[t] * (1.0 - trace.gi[t])).matrix();
        dz.segment(dim, dim) = (d_gf * trace.gf[t] * (1.0 - trace.gf[t])).matrix();
        dz.segment(2 * dim, dim) = (d_gc * (1.0 - trace.gc[t].square())).matrix();
        dz.segment(3 * dim, dim) = (d_go * trace.go[t] * (1.0 - trace.go[t])).matrix();

        grad.w_input.noalias() += dz * trace.x[t].transpose();
        grad.w_recurrent.noalias() += dz * h_prev.transpose();
        grad.bias += dz;
        grad_embeddings.col(ids[t]).noalias() += p.w_input.transpose() * dz;

        dh = p.w_recurrent.transpose() * dz;
        dc = (dc_t * trace.gf[t]).matrix();
    }
}

LstmParams make_lstm(int hidden, int input, Rng& rng) {
    LstmParams p;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto fill = [&](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.symmetric(scale);
    };
    fill(p.w_input, 4 * hidden, input);
    fill(p.w_recurrent, 4 * hidden, hidden);
    p.bias = Eigen::VectorXd::Zero(4 * hidden);
    // forget and output gates open near 1 at the start so cell state can
    // accumulate and reach the output; counteracts the signal shrinkage of
    // the downstream element-wise product fusion
    p.bias.segment(hidden, hidden).setOnes();
    p.bias.segment(3 * hidden, hidden).setOnes();
    return p;
}

} // namespace

void Parameters::set_zero() {
    embeddings.setZero();
    for (LstmParams* enc : {&post_encoder, &question_encoder}) {
        enc->w_input.setZero();
        enc->w_recurrent.setZero();
        enc->bias.setZero();
    }
    w_hidden.setZero();
    b_hidden.setZero();
    w_output.setZero();
    b_output.setZero();
}

void Parameters::for_each_block(
    const std::function<void(const std::string&, double*, std::size_t)>& fn) {
    fn("embeddings", embeddings.data(), static_cast<std::size_t>(embeddings.size()));
    fn("post.w_input", post_encoder.w_input.data(),
       static_cast<std::size_t>(post_encoder.w_input.size()));
    fn("post.w_recurrent", post_encoder.w_recurrent.data(),
       static_cast<std::size_t>(post_encoder.w_recurrent.size()));
    fn("post.bias", post_encoder.bias.data(),
       static_cast<std::size_t>(post_encoder.bias.size()));
    fn("question.w_input", question_encoder.w_input.data(),
       static_cast<std::size_t>(question_encoder.w_input.size()));
    fn("question.w_recurrent", question_encoder.w_recurrent.data(),
       static_cast<std::size_t>(question_encoder.w_recurrent.size()));
    fn("question.bias", question_encoder.bias.data(),
       static_cast<std::size_t>(question_encoder.bias.size()));
    fn("w_hidden", w_hidden.data(), static_cast<std::size_t>(w_hidden.size()));
    fn("b_hidden", b_hidden.data(), static_cast<std::size_t>(b_hidden.size()));
    fn("w_output", w_output.data(), static_cast<std::size_t>(w_output.size()));
    fn("b_output", b_output.data(), static_cast<std::size_t>(b_output.size()));
}

std::size_t Parameters::total_count() {
    std::size_t n = 0;
    for_each_block([&](const std::string&, double*, std::size_t size) { n += size; });
    return n;
}

PairScorerModel::PairScorerModel(Vocabulary vocab, const TrainConfig& cfg)
    : vocab_(std::move(vocab)), cfg_(cfg) {
    Rng rng(derive_seed(cfg.rng_seed, "init"));
    const int de = cfg.embed_dim, dh = cfg.hidden_dim, df = cfg.dense_dim;
    auto fill = [&](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, double scale) {
        m.resize(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.symmetric(scale);
    };
    // unit-scale embeddings keep the product-fused features from starting
    // vanishingly small
    fill(params_.embeddings, de, static_cast<Eigen::Index>(vocab_.size()), 1.0);
    params_.embeddings.col(Vocabulary::kPad).setZero();
    params_.post_encoder = make_lstm(dh, de, rng);
    params_.question_encoder = make_lstm(dh, de, rng);
    fill(params_.w_hidden, df, dh, 2.0 / std::sqrt(static_cast<double>(dh)));
    params_.b_hidden = Eigen::VectorXd::Zero(df);
    fill(params_.w_output, 2, df, 1.0 / std::sqrt(static_cast<double>(df)));
    params_.b_output = Eigen::VectorXd::Zero(2);
}

Eigen::VectorXd PairScorerModel::encode(std::span<const std::int32_t> ids, Side side) const {
    if (ids.empty()) throw Error("EmptySequence", "cannot encode an empty id sequence");
    const LstmParams& p =
        side == Side::post ? params_.post_encoder : params_.question_encoder;
    return lstm_forward(p, params_.embeddings, ids, nullptr);
}

std::pair<double, double> PairScorerModel::score_pair(
    std::span<const std::int32_t> post_ids, std::span<const std::int32_t> question_ids) const {
    Eigen::VectorXd hp = encode(post_ids, Side::post);
    Eigen::VectorXd hq = encode(question_ids, Side::question);
    Eigen::VectorXd fused = (hp.array() * hq.array()).matrix();
    Eigen::VectorXd hidden =
        ((params_.w_hidden * fused + params_.b_hidden).array().tanh()).matrix();
    Eigen::Vector2d logits = params_.w_output * hidden + params_.b_output;
    double m = logits.maxCoeff();
    Eigen::Vector2d e = (logits.array() - m).exp();
    Eigen::Vector2d prob = e / e.sum();
    return {prob(0), prob(1)};
}

double PairScorerModel::confidence(const std::string& post_text,
                                   const std::string& question_text) const {
    return score_pair(tokenize_post(post_text), tokenize_question(question_text)).second;
}

std::vector<std::int32_t> PairScorerModel::tokenize_post(const std::string& text) const {
    return tokenize(text, vocab_, cfg_.max_post_len);
}

std::vector<std::int32_t> PairScorerModel::tokenize_question(const std::string& text) const {
    return tokenize(text, vocab_, cfg_.max_question_len);
}

double PairScorerModel::pair_loss(std::span<const std::int32_t> post_ids,
                                  std::span<const std::int32_t> question_ids,
                                  corpus::Label label, Parameters* grads) const {
    if (post_ids.empty() || question_ids.empty())
        throw Error("EmptySequence", "cannot score an empty id sequence");

    LstmTrace trace_p, trace_q;
    Eigen::VectorXd hp = lstm_forward(params_.post_encoder, params_.embeddings, post_ids,
                                      grads ? &trace_p : nullptr);
    Eigen::VectorXd hq = lstm_forward(params_.question_encoder, params_.embeddings,
                                      question_ids, grads ? &trace_q : nullptr);
    Eigen::VectorXd fused = (hp.array() * hq.array()).matrix();
    Eigen::VectorXd pre = params_.w_hidden * fused + params_.b_hidden;
    Eigen::VectorXd hidden = pre.array().tanh().matrix();
    Eigen::Vector2d logits = params_.w_output * hidden + params_.b_output;
    double m = logits.maxCoeff();
    Eigen::Vector2d e = (logits.array() - m).exp();
    Eigen::Vector2d prob = e / e.sum();
    const int target = label == corpus::Label::positive ? 1 : 0;
    double loss = -std::log(std::max(prob(target), 1e-300));
    if (!grads) return loss;

    Eigen::Vector2d dlogits = prob;
    dlogits(target) -= 1.0;
    grads->w_output.noalias() += dlogits * hidden.transpose();
    grads->b_output += dlogits;
    Eigen::VectorXd dhidden = params_.w_output.transpose() * dlogits;
    Eigen::VectorXd dpre = (dhidden.array() * (1.0 - hidden.array().square())).matrix();
    grads->w_hidden.noalias() += dpre * fused.transpose();
    grads->b_hidden += dpre;
    Eigen::VectorXd dfused = params_.w_hidden.transpose() * dpre;
    Eigen::VectorXd dhp = (dfused.array() * hq.array()).matrix();
    Eigen::VectorXd dhq = (dfused.array() * hp.array()).matrix();
    lstm_backward(params_.post_encoder, post_ids, trace_p, dhp, grads->post_encoder,
                  grads->embeddings);
    lstm_backward(params_.question_encoder, question_ids, trace_q, dhq,
                  grads->question_encoder, grads->embeddings);
    return loss;
}

namespace {

Parameters zero_like(const Parameters& p) {
    Parameters g = p;
    g.set_zero();
    return g;
}

struct TokenizedPair {
    std::vector<std::int32_t> post_ids;
    std::vector<std::int32_t> question_ids;
    corpus::Label label;
};

} // namespace

std::vector<double> train(PairScorerModel& model, const corpus::LabeledSet& set,
                          const TrainConfig& cfg) {
    std::size_t positives = set.count(corpus::Label::positive);
    std::size_t negatives = set.count(corpus::Label::negative);
    if (positives == 0 || negatives == 0)
        throw Error("DegenerateSet", "training set '" + set.stage_name +
                                         "' needs both classes (pos=" +
                                         std::to_string(positives) +
                                         ", neg=" + std::to_string(negatives) + ")");

    std::vector<TokenizedPair> data;
    data.reserve(set.pairs.size());
    for (const auto& pair : set.pairs) {
        if (!pair.pseudo_label)
            throw Error("DegenerateSet", "unlabeled pair in stage '" + set.stage_name + "'");
        data.push_back(TokenizedPair{model.tokenize_post(pair.post_text),
                                     model.tokenize_question(pair.question_text),
                                     *pair.pseudo_label});
    }

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.epochs));
    Rng rng(derive_seed(cfg.rng_seed, "shuffle"));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Parameters grads = zero_like(model.params());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            std::size_t batch = std::min<std::size_t>(cfg.batch_size, order.size() - pos);
            grads.set_zero();
            for (std::size_t k = 0; k < batch; ++k) {
                const TokenizedPair& ex = data[order[pos + k]];
                epoch_loss += model.pair_loss(ex.post_ids, ex.question_ids, ex.label, &grads);
            }
            const double step = cfg.learning_rate / static_cast<double>(batch);
            Parameters& params = model.params();
            std::vector<std::pair<double*, std::size_t>> targets;
            params.for_each_block([&](const std::string&, double* p, std::size_t n) {
                targets.emplace_back(p, n);
            });
            std::size_t block = 0;
            grads.for_each_block([&](const std::string&, double* g, std::size_t n) {
                Eigen::Map<Eigen::VectorXd>(targets[block].first, n) -=
                    step * Eigen::Map<const Eigen::VectorXd>(g, n);
                ++block;
            });
            pos += batch;
        }
        trace.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return trace;
}

PairScorerModel train_fresh(const corpus::LabeledSet& set, const TrainConfig& cfg,
                            std::vector<double>* trace) {
    Vocabulary vocab;
    for (const auto& pair : set.pairs) {
        vocab.add_text(pair.post_text);
        vocab.add_text(pair.question_text);
    }
    PairScorerModel model(std::move(vocab), cfg);
    auto losses = train(model, set, cfg);
    if (trace) *trace = std::move(losses);
    return model;
}

double grad_check(const PairScorerModel& model, std::span<const std::int32_t> post_ids,
                  std::span<const std::int32_t> question_ids, corpus::Label label,
                  double epsilon, std::size_t sample_count, std::uint64_t seed) {
    PairScorerModel probe = model;
    Parameters analytic = zero_like(probe.params());
    probe.pair_loss(post_ids, question_ids, label, &analytic);

    std::vector<std::pair<double*, std::size_t>> param_blocks;
    probe.params().for_each_block([&](const std::string&, double* p, std::size_t n) {
        param_blocks.emplace_back(p, n);
    });
    std::vector<std::pair<double*, std::size_t>> grad_blocks;
    analytic.for_each_block([&](const std::string&, double* p, std::size_t n) {
        grad_blocks.emplace_back(p, n);
    });

    std::size_t total = 0;
    for (const auto& [_, n] : param_blocks) total += n;
    Rng rng(seed);
    std::size_t checks = std::min(sample_count, total);
    double worst = 0.0;
    for (std::size_t k = 0; k < checks; ++k) {
        std::size_t flat = total <= sample_count ? k : rng.index(total);
        std::size_t block = 0, offset = flat;
        while (offset >= param_blocks[block].second) {
            offset -= param_blocks[block].second;
            ++block;
        }
        double* slot = param_blocks[block].first + offset;
        const double saved = *slot;
        *slot = saved + epsilon;
        double up = probe.pair_loss(post_ids, question_ids, label, nullptr);
        *slot = saved - epsilon;
        double down = probe.pair_loss(post_ids, question_ids, label, nullptr);
        *slot = saved;
        double numeric = (up - down) / (2.0 * epsilon);
        double exact = grad_blocks[block].first[offset];
        double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
        worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
    return worst;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> data(m.data(), m.data() + m.size());
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw Error("SchemaError", "tensor size mismatch in checkpoint");
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

} // namespace

void PairScorerModel::save(const std::string& path) const {
    nlohmann::json j;
    j["schema"] = "clarq-model";
    j["version"] = 1;
    j["vocab"] = vocab_.tokens();
    j["config"] = {{"epochs", cfg_.epochs},
                   {"batch_size", cfg_.batch_size},
                   {"learning_rate", cfg_.learning_rate},
                   {"rng_seed", cfg_.rng_seed},
                   {"max_post_len", cfg_.max_post_len},
                   {"max_question_len", cfg_.max_question_len},
                   {"embed_dim", cfg_.embed_dim},
                   {"hidden_dim", cfg_.hidden_dim},
                   {"dense_dim", cfg_.dense_dim}};
    nlohmann::json tensors;
    // const_cast is confined to serialization; blocks are not modified
    auto& self = const_cast<PairScorerModel&>(*this);
    self.params_.for_each_block([&](const std::string& name, double* p, std::size_t n) {
        tensors[name] = std::vector<double>(p, p + n);
    });
    j["tensors"] = tensors;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << j.dump();
}

PairScorerModel PairScorerModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("schema", "") != "clarq-model" || j.value("version", -1) != 1)
        throw Error("SchemaError", "not a supported clarq model checkpoint");
    Vocabulary vocab;
    auto tokens = j.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 2; i < tokens.size(); ++i) vocab.add_token(tokens[i]);
    TrainConfig cfg;
    const auto& c = j.at("config");
    cfg.epochs = c.at("epochs").get<int>();
    cfg.batch_size = c.at("batch_size").get<int>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    cfg.max_post_len = c.at("max_post_len").get<std::size_t>();
    cfg.max_question_len = c.at("max_question_len").get<std::size_t>();
    cfg.embed_dim = c.at("embed_dim").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.dense_dim = c.at("dense_dim").get<int>();
    PairScorerModel model(std::move(vocab), cfg);
    const auto& tensors = j.at("tensors");
    model.params_.for_each_block([&](const std::string& name, double* p, std::size_t n) {
        auto data = tensors.at(name).get<std::vector<double>>();
        if (data.size() != n)
            throw Error("SchemaError", "tensor '" + name + "' size mismatch");
        std::copy(data.begin(), data.end(), p);
    });
    return model;
}

} // namespace clarq::encoder
