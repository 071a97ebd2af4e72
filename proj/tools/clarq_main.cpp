#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clarq/error.hpp"
#include "clarq/pipeline.hpp"

namespace {

int fail(const std::string& code, const std::string& message) {
    nlohmann::json err = {{"error", code}, {"message", message}};
    std::cerr << err.dump() << '\n';
    return code == "MissingArtifact" ? 2 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"clarq — clarification-question dataset pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> domains;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool force = false;

    const std::vector<std::string> names = {"ingest", "seed",   "refine", "classify",
                                            "eval",   "rerank", "stats"};
    for (const auto& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "pipeline config JSON")->required();
        sub->add_option("--seed", seed, "override the master rng seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--domains", domains, "domain allowlist")->delimiter(',');
        sub->add_flag("--force", force, "accept artifacts from a different config hash");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        clarq::pipeline::PipelineConfig cfg = clarq::pipeline::load_config(config_path);
        if (seed_set) {
            cfg.seed = seed;
            cfg.refine.rng_seed = seed;
            cfg.refine.train.rng_seed = seed;
        }
        if (!domains.empty()) cfg.domains = domains;
        cfg.force = force;

        if (command == "ingest") clarq::pipeline::cmd_ingest(cfg);
        else if (command == "seed") clarq::pipeline::cmd_seed(cfg);
        else if (command == "refine") clarq::pipeline::cmd_refine(cfg);
        else if (command == "classify") clarq::pipeline::cmd_classify(cfg);
        else if (command == "eval") clarq::pipeline::cmd_eval(cfg);
        else if (command == "rerank") clarq::pipeline::cmd_rerank(cfg);
        else if (command == "stats") clarq::pipeline::cmd_stats(cfg);
    } catch (const clarq::Error& e) {
        return fail(e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("InternalError", e.what());
    }
    return 0;
}
