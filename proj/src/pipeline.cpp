#include "clarq/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clarq/csv.hpp"
#include "clarq/error.hpp"
#include "clarq/eval.hpp"
#include "clarq/ingest.hpp"
#include "clarq/rng.hpp"

namespace fs = std::filesystem;

namespace clarq::pipeline {

namespace {

Error missing_artifact(const std::string& name) {
    return Error("MissingArtifact",
                 "required artifact '" + name + "' is missing; run the earlier stage first");
}

// Exclusive ownership of a work_dir for the duration of one command.
class WorkdirLock {
public:
    explicit WorkdirLock(const fs::path& work_dir) : path_(work_dir / ".lock") {
        fs::create_directories(work_dir);
        std::ofstream probe(path_, std::ios::out | std::ios::app);
        if (fs::exists(path_) && fs::file_size(path_) > 0)
            throw Error("WorkdirLocked",
                        "work_dir is in use (" + path_.string() + " present)");
        std::ofstream out(path_, std::ios::trunc);
        out << "locked\n";
    }
    ~WorkdirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    WorkdirLock(const WorkdirLock&) = delete;
    WorkdirLock& operator=(const WorkdirLock&) = delete;

private:
    fs::path path_;
};

struct StageTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

void write_manifest(const PipelineConfig& cfg, const std::string& stage,
                    const std::vector<std::string>& inputs, const nlohmann::json& counts,
                    double wall_time) {
    nlohmann::json manifest = {{"stage", stage},
                               {"inputs", inputs},
                               {"config_hash", config_hash(cfg)},
                               {"seed", cfg.seed},
                               {"counts", counts},
                               {"wall_time", wall_time}};
    std::ofstream out(fs::path(cfg.work_dir) / ("manifest_" + stage + ".json"));
    if (!out) throw Error("IoError", "cannot write manifest for stage " + stage);
    out << manifest.dump(2) << '\n';
}

// Every consumed artifact must come from the same config hash unless the
// caller passed the override flag.
void check_manifest_hash(const PipelineConfig& cfg, const std::string& stage) {
    fs::path path = fs::path(cfg.work_dir) / ("manifest_" + stage + ".json");
    if (!fs::exists(path)) throw missing_artifact(stage);
    std::ifstream in(path);
    nlohmann::json manifest = nlohmann::json::parse(in);
    if (cfg.force) return;
    if (manifest.value("config_hash", "") != config_hash(cfg))
        throw Error("ConfigMismatch",
                    "artifact of stage '" + stage +
                        "' was produced by a different config; re-run it or pass --force");
}

std::vector<std::string> discover_domains(const PipelineConfig& cfg) {
    std::vector<std::string> domains;
    if (!fs::is_directory(cfg.dump_dir))
        throw Error("IoError", "dump_dir '" + cfg.dump_dir + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(cfg.dump_dir)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        if (!cfg.domains.empty() &&
            std::find(cfg.domains.begin(), cfg.domains.end(), name) == cfg.domains.end())
            continue;
        if (fs::exists(entry.path() / "Posts.xml")) domains.push_back(name);
    }
    std::sort(domains.begin(), domains.end());
    if (domains.empty()) throw Error("IoError", "no domain directories under " + cfg.dump_dir);
    return domains;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> ingested_domains(const PipelineConfig& cfg) {
    fs::path dir = fs::path(cfg.work_dir) / "ingest";
    if (!fs::is_directory(dir)) throw missing_artifact("ingest");
    std::vector<std::string> domains;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".jsonl")
            domains.push_back(entry.path().stem().string());
    std::sort(domains.begin(), domains.end());
    if (domains.empty()) throw missing_artifact("ingest");
    return domains;
}

std::vector<ingest::PostRecord> load_ingested(const PipelineConfig& cfg) {
    std::vector<ingest::PostRecord> all;
    for (const auto& domain : ingested_domains(cfg)) {
        auto records = ingest::read_post_records_file(
            (fs::path(cfg.work_dir) / "ingest" / (domain + ".jsonl")).string());
        all.insert(all.end(), std::make_move_iterator(records.begin()),
                   std::make_move_iterator(records.end()));
    }
    return all;
}

std::vector<eval::AnnotatedPair> load_test_set(const PipelineConfig& cfg,
                                               const std::vector<ingest::PostRecord>& posts) {
    if (cfg.test_set_csv.empty()) return {};
    std::ifstream in(cfg.test_set_csv, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read test set CSV " + cfg.test_set_csv);
    return eval::read_annotated_csv(in, posts);
}

} // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot read config " + path);
    nlohmann::json j = nlohmann::json::parse(in);

    PipelineConfig cfg;
    cfg.dump_dir = j.at("dump_dir").get<std::string>();
    cfg.work_dir = j.at("work_dir").get<std::string>();
    if (j.contains("domains")) cfg.domains = j.at("domains").get<std::vector<std::string>>();
    cfg.seed = j.value("seed", 0ULL);
    cfg.test_set_csv = j.value("test_set_csv", "");

    if (j.contains("refine")) {
        const auto& r = j.at("refine");
        cfg.refine.n_iterations = r.value("n_iterations", cfg.refine.n_iterations);
        cfg.refine.keep_fraction = r.value("keep_fraction", cfg.refine.keep_fraction);
        cfg.refine.negative_ratio = r.value("negative_ratio", cfg.refine.negative_ratio);
        cfg.refine.threshold = r.value("threshold", cfg.refine.threshold);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        auto& train = cfg.refine.train;
        train.epochs = t.value("epochs", train.epochs);
        train.batch_size = t.value("batch_size", train.batch_size);
        train.learning_rate = t.value("learning_rate", train.learning_rate);
        train.max_post_len = t.value("max_post_len", train.max_post_len);
        train.max_question_len = t.value("max_question_len", train.max_question_len);
        train.embed_dim = t.value("embed_dim", train.embed_dim);
        train.hidden_dim = t.value("hidden_dim", train.hidden_dim);
        train.dense_dim = t.value("dense_dim", train.dense_dim);
    }
    if (j.contains("rerank")) {
        const auto& r = j.at("rerank");
        if (r.contains("domains"))
            cfg.rerank.domains = r.at("domains").get<std::vector<std::string>>();
        cfg.rerank.n_per_domain = r.value("n_per_domain", cfg.rerank.n_per_domain);
        cfg.rerank.pool_size = r.value("pool_size", cfg.rerank.pool_size);
    }
    cfg.refine.rng_seed = cfg.seed;
    cfg.refine.train.rng_seed = cfg.seed;

    if (const char* env = std::getenv("CLARQ_WORKDIR"); env && *env) cfg.work_dir = env;
    return cfg;
}

std::string config_hash(const PipelineConfig& cfg) {
    nlohmann::json j = {
        {"domains", cfg.domains},
        {"seed", cfg.seed},
        {"refine",
         {{"n_iterations", cfg.refine.n_iterations},
          {"keep_fraction", cfg.refine.keep_fraction},
          {"negative_ratio", cfg.refine.negative_ratio},
          {"threshold", cfg.refine.threshold}}},
        {"train",
         {{"epochs", cfg.refine.train.epochs},
          {"batch_size", cfg.refine.train.batch_size},
          {"learning_rate", cfg.refine.train.learning_rate},
          {"max_post_len", cfg.refine.train.max_post_len},
          {"max_question_len", cfg.refine.train.max_question_len},
          {"embed_dim", cfg.refine.train.embed_dim},
          {"hidden_dim", cfg.refine.train.hidden_dim},
          {"dense_dim", cfg.refine.train.dense_dim}}},
        {"rerank",
         {{"domains", cfg.rerank.domains},
          {"n_per_domain", cfg.rerank.n_per_domain},
          {"pool_size", cfg.rerank.pool_size}}}};
    std::ostringstream hex;
    hex << std::hex << fnv1a(j.dump());
    return hex.str();
}

void cmd_ingest(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    fs::create_directories(fs::path(cfg.work_dir) / "ingest");

    nlohmann::json counts = nlohmann::json::object();
    std::vector<std::string> inputs;
    for (const auto& domain : discover_domains(cfg)) {
        fs::path dir = fs::path(cfg.dump_dir) / domain;
        auto posts = ingest::parse_posts(read_file(dir / "Posts.xml"), domain);
        std::vector<ingest::RawCommentRow> comments;
        if (fs::exists(dir / "Comments.xml"))
            comments = ingest::parse_comments(read_file(dir / "Comments.xml"));
        ingest::JoinStats stats;
        auto records = ingest::join_corpus(posts, comments, domain, &stats);
        ingest::write_post_records_file(
            records, (fs::path(cfg.work_dir) / "ingest" / (domain + ".jsonl")).string());
        counts[domain] = {{"answered_posts", stats.answered_questions},
                          {"questions", stats.questions},
                          {"attached_comments", stats.attached_comments},
                          {"orphan_comments", stats.orphan_comments},
                          {"answer_post_comments", stats.answer_post_comments}};
        inputs.push_back((dir / "Posts.xml").string());
        inputs.push_back((dir / "Comments.xml").string());
    }
    write_manifest(cfg, "ingest", inputs, counts, timer.seconds());
}

void cmd_seed(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    check_manifest_hash(cfg, "ingest");
    auto corpus_records = load_ingested(cfg);

    refine::NegativePool pool(corpus_records);
    auto seed = refine::build_seed(corpus_records, cfg.refine, pool);
    fs::create_directories(fs::path(cfg.work_dir) / "stages");
    corpus::write_stage_file(seed, (fs::path(cfg.work_dir) / "stages" / "D0.jsonl").string());

    write_manifest(cfg, "seed", {cfg.work_dir + "/ingest"},
                   {{"positives", seed.count(corpus::Label::positive)},
                    {"negatives", seed.count(corpus::Label::negative)}},
                   timer.seconds());
}

void cmd_refine(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    fs::path d0_path = fs::path(cfg.work_dir) / "stages" / "D0.jsonl";
    if (!fs::exists(d0_path)) throw missing_artifact("D0");
    check_manifest_hash(cfg, "seed");
    auto d0 = corpus::read_stage_file(d0_path.string());
    auto corpus_records = load_ingested(cfg);
    refine::NegativePool pool(corpus_records);
    auto test_set = load_test_set(cfg, corpus_records);

    auto result = refine::run_refinement(
        d0, cfg.refine, pool, test_set, [&](const corpus::LabeledSet& stage) {
            corpus::write_stage_file(stage, (fs::path(cfg.work_dir) / "stages" /
                                             (stage.stage_name + ".jsonl"))
                                                .string());
        });

    std::ofstream ledger_out(fs::path(cfg.work_dir) / "ledger.csv", std::ios::binary);
    refine::write_ledger_csv(result.ledger, ledger_out);
    result.final_model.save((fs::path(cfg.work_dir) / "model.json").string());

    write_manifest(cfg, "refine", {d0_path.string()},
                   {{"ledger_rows", result.ledger.rows.size()},
                    {"s0_positives", result.s0.count(corpus::Label::positive)},
                    {"s0_negatives", result.s0.count(corpus::Label::negative)}},
                   timer.seconds());
}

void cmd_classify(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    fs::path model_path = fs::path(cfg.work_dir) / "model.json";
    if (!fs::exists(model_path)) throw missing_artifact("model");
    check_manifest_hash(cfg, "refine");
    auto model = encoder::PairScorerModel::load(model_path.string());

    std::ofstream out(fs::path(cfg.work_dir) / "clarq.jsonl", std::ios::binary);
    if (!out) throw Error("IoError", "cannot write clarq.jsonl");
    std::size_t emitted = 0, scanned = 0;
    for (const auto& domain : ingested_domains(cfg)) {
        auto records = ingest::read_post_records_file(
            (fs::path(cfg.work_dir) / "ingest" / (domain + ".jsonl")).string());
        for (const auto& post : records) scanned += post.comments.size();
        auto positives = refine::classify_corpus(model, records, cfg.refine.threshold);
        for (const auto& record : positives) corpus::append_clarq_record(record, out);
        emitted += positives.size();
    }
    write_manifest(cfg, "classify", {model_path.string(), cfg.work_dir + "/ingest"},
                   {{"pairs_scanned", scanned}, {"records_emitted", emitted}},
                   timer.seconds());
}

void cmd_eval(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    fs::path model_path = fs::path(cfg.work_dir) / "model.json";
    if (!fs::exists(model_path)) throw missing_artifact("model");
    if (cfg.test_set_csv.empty())
        throw Error("IoError", "cmd_eval needs test_set_csv in the config");
    check_manifest_hash(cfg, "refine");
    auto model = encoder::PairScorerModel::load(model_path.string());
    auto corpus_records = load_ingested(cfg);
    auto test_set = load_test_set(cfg, corpus_records);
    auto metrics = eval::evaluate_classifier(model, test_set, cfg.refine.threshold);

    std::ofstream out(fs::path(cfg.work_dir) / "eval.csv", std::ios::binary);
    out << csv::format_row({"precision", "recall", "f1"});
    auto fmt = [](double v) {
        std::ostringstream s;
        s.precision(6);
        s << v;
        return s.str();
    };
    out << csv::format_row({fmt(metrics.precision), fmt(metrics.recall), fmt(metrics.f1)});
    write_manifest(cfg, "eval", {model_path.string(), cfg.test_set_csv},
                   {{"test_pairs", test_set.size()}}, timer.seconds());
}

void cmd_rerank(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    check_manifest_hash(cfg, "ingest");
    auto corpus_records = load_ingested(cfg);

    std::vector<std::string> domains = cfg.rerank.domains;
    if (domains.empty()) domains = ingested_domains(cfg);
    Rng rng(derive_seed(cfg.seed, "rerank"));
    auto instances = eval::build_rerank_instances(corpus_records, domains,
                                                  cfg.rerank.n_per_domain,
                                                  cfg.rerank.pool_size, rng);
    // instances missing a clarification question cannot enter the with-CQ arm
    std::vector<eval::RerankInstance> usable;
    for (auto& instance : instances)
        if (instance.clarification_question) usable.push_back(std::move(instance));
    if (usable.empty()) throw Error("EmptyInput", "no instances carry a clarification question");

    std::vector<std::string> documents;
    for (const auto& instance : usable)
        for (const auto& candidate : instance.candidates) documents.push_back(candidate);
    eval::TfIdfScorer scorer(documents);
    auto without_cq = eval::rerank_report(usable, scorer, false);
    auto with_cq = eval::rerank_report(usable, scorer, true);

    std::ofstream out(fs::path(cfg.work_dir) / "rerank.csv", std::ios::binary);
    out << csv::format_row({"metric", "without_cq", "with_cq"});
    auto fmt = [](double v) {
        std::ostringstream s;
        s.precision(6);
        s << v;
        return s.str();
    };
    for (std::size_t k = 1; k <= 5; ++k)
        out << csv::format_row({"P@" + std::to_string(k), fmt(without_cq.p_at_k[k - 1]),
                                fmt(with_cq.p_at_k[k - 1])});
    out << csv::format_row({"MRR", fmt(without_cq.mrr), fmt(with_cq.mrr)});
    write_manifest(cfg, "rerank", {cfg.work_dir + "/ingest"},
                   {{"instances", usable.size()}}, timer.seconds());
}

void cmd_stats(const PipelineConfig& cfg) {
    WorkdirLock lock{fs::path(cfg.work_dir)};
    StageTimer timer;
    fs::path dataset = fs::path(cfg.work_dir) / "clarq.jsonl";
    if (!fs::exists(dataset)) throw missing_artifact("clarq.jsonl");
    check_manifest_hash(cfg, "classify");
    auto records = corpus::read_clarq_records_file(dataset.string());
    auto stats = domain_distribution(records);

    std::ofstream csv_out(fs::path(cfg.work_dir) / "stats.csv", std::ios::binary);
    write_stats_csv(stats, csv_out);
    std::ofstream svg_out(fs::path(cfg.work_dir) / "stats.svg", std::ios::binary);
    write_stats_svg(stats, svg_out);
    write_manifest(cfg, "stats", {dataset.string()},
                   {{"records", records.size()}, {"domains", stats.counts.size()}},
                   timer.seconds());
}

double DomainStats::top_k_share(std::size_t k) const {
    if (total == 0) return 0.0;
    std::size_t sum = 0;
    for (std::size_t i = 0; i < counts.size() && i < k; ++i) sum += counts[i].second;
    return static_cast<double>(sum) / static_cast<double>(total);
}

DomainStats domain_distribution(const std::vector<corpus::ClarQRecord>& records) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& record : records) ++counts[record.domain];
    DomainStats stats;
    stats.total = records.size();
    stats.counts.assign(counts.begin(), counts.end());
    std::sort(stats.counts.begin(), stats.counts.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return stats;
}

void write_stats_csv(const DomainStats& stats, std::ostream& out) {
    out << csv::format_row({"domain", "count", "share"});
    for (const auto& [domain, count] : stats.counts) {
        double share = stats.total == 0
                           ? 0.0
                           : static_cast<double>(count) / static_cast<double>(stats.total);
        std::ostringstream s;
        s.precision(8);
        s << share;
        out << csv::format_row({domain, std::to_string(count), s.str()});
    }
}

void write_stats_svg(const DomainStats& stats, std::ostream& out) {
    constexpr std::size_t top_k = 20;
    std::vector<std::pair<std::string, std::size_t>> bars;
    std::size_t others = 0;
    for (std::size_t i = 0; i < stats.counts.size(); ++i) {
        if (i < top_k) bars.push_back(stats.counts[i]);
        else others += stats.counts[i].second;
    }
    if (others > 0) bars.emplace_back("others", others);

    std::size_t peak = 1;
    for (const auto& [_, count] : bars) peak = std::max(peak, count);
    const int bar_w = 28, gap = 8, chart_h = 240, label_h = 90;
    const int width = static_cast<int>(bars.size()) * (bar_w + gap) + gap;
    const int height = chart_h + label_h;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& [domain, count] = bars[i];
        int h = static_cast<int>(static_cast<double>(count) / static_cast<double>(peak) *
                                 (chart_h - 20));
        int x = gap + static_cast<int>(i) * (bar_w + gap);
        int y = chart_h - h;
        out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w
            << "\" height=\"" << h << "\" fill=\"#4477aa\"/>\n";
        out << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << y - 4
            << "\" font-size=\"9\" text-anchor=\"middle\">" << count << "</text>\n";
        out << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << chart_h + 10
            << "\" font-size=\"9\" text-anchor=\"end\" transform=\"rotate(-60 "
            << x + bar_w / 2 << ' ' << chart_h + 10 << ")\">" << domain << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace clarq::pipeline
