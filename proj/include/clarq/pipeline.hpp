#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "clarq/corpus.hpp"
#include "clarq/refine.hpp"

namespace clarq::pipeline {

struct RerankSettings {
    std::vector<std::string> domains;
    std::size_t n_per_domain = 10;
    std::size_t pool_size = 100;
};

struct PipelineConfig {
    std::string dump_dir;
    std::string work_dir;
    std::vector<std::string> domains; // allowlist; empty = all
    std::uint64_t seed = 0;
    refine::RefineConfig refine;
    RerankSettings rerank;
    std::string test_set_csv; // optional annotated test set
    bool force = false;       // accept artifacts with a different config hash
};

// Reads the JSON config file; CLARQ_WORKDIR overrides work_dir when set.
PipelineConfig load_config(const std::string& path);

// Hash over every reproducibility-relevant field (paths and force excluded).
std::string config_hash(const PipelineConfig& cfg);

// Commands bind the modules into one reproducible run. Each validates its
// prerequisite artifacts and throws MissingArtifact naming the absent one.
void cmd_ingest(const PipelineConfig& cfg);
void cmd_seed(const PipelineConfig& cfg);
void cmd_refine(const PipelineConfig& cfg);
void cmd_classify(const PipelineConfig& cfg);
void cmd_eval(const PipelineConfig& cfg);
void cmd_rerank(const PipelineConfig& cfg);
void cmd_stats(const PipelineConfig& cfg);

struct DomainStats {
    std::vector<std::pair<std::string, std::size_t>> counts; // descending
    std::size_t total = 0;

    double top_k_share(std::size_t k) const;
};

DomainStats domain_distribution(const std::vector<corpus::ClarQRecord>& records);
void write_stats_csv(const DomainStats& stats, std::ostream& out);
// Static bar chart of the top 20 domains plus an aggregated "others" bar.
void write_stats_svg(const DomainStats& stats, std::ostream& out);

} // namespace clarq::pipeline
