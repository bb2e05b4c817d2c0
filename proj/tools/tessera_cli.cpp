// Command-line driver. See README.md for the config schema and artifact
// layout.

#include "tessera/orchestrator.hpp"

#include <iostream>

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"TESSERA: MCTS over typed knowledge graphs with evaluator-guided priors"};
    app.require_subcommand(1);

    std::string config_path;
    std::string backend;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config JSON");
        if (needs_config) opt->required();
        cmd->add_option("--backend", backend,
                        "override evaluator backend (mock:proximity, mock:constant[:label], "
                        "mock:table:<file>, mock:adversarial[:n], http:<profile>)");
        cmd->add_option("--out", out, "override output directory");
        cmd->add_option("--seed", seed, "override run seed")->each([&](const std::string&) {
            seed_set = true;
        });
    };

    auto* search = app.add_subcommand("search", "run MCTS per drug-disease pair");
    add_common(search);
    auto* eval = app.add_subcommand("eval-dmdb", "score predictions against curated mechanisms");
    add_common(eval);
    auto* judge = app.add_subcommand("judge-msi", "LLM-as-judge protocol over predicted subgraphs");
    add_common(judge);
    auto* ablate = app.add_subcommand("ablate", "two-arm comparison (judged deltas + structure)");
    add_common(ablate);

    auto* cache = app.add_subcommand("cache", "cache management");
    cache->require_subcommand(1);
    auto* cache_stats = cache->add_subcommand("stats", "report cache sizes");
    add_common(cache_stats);
    auto* cache_clear = cache->add_subcommand("clear", "delete cached entries");
    add_common(cache_clear);

    auto* fixtures = app.add_subcommand("fixtures", "fixture utilities");
    fixtures->require_subcommand(1);
    auto* fixtures_generate =
        fixtures->add_subcommand("generate", "write the bundled toy substrate and fixtures");
    std::string fixtures_dir = "fixtures";
    fixtures_generate->add_option("--out", fixtures_dir, "target directory");

    CLI11_PARSE(app, argc, argv);

    try {
        tessera::CommandOverrides overrides;
        overrides.backend = backend;
        overrides.out = out;
        if (seed_set) overrides.seed = seed;

        nlohmann::json result;
        if (fixtures_generate->parsed()) {
            result = tessera::generate_fixtures(fixtures_dir);
        } else {
            tessera::ExperimentConfig config = tessera::ExperimentConfig::load(config_path);
            if (search->parsed())
                result = tessera::cmd_search(config, overrides);
            else if (eval->parsed())
                result = tessera::cmd_eval_dmdb(config, overrides);
            else if (judge->parsed())
                result = tessera::cmd_judge_msi(config, overrides);
            else if (ablate->parsed())
                result = tessera::cmd_ablate(config, overrides);
            else if (cache_stats->parsed())
                result = tessera::cmd_cache_stats(config);
            else if (cache_clear->parsed())
                result = tessera::cmd_cache_clear(config);
        }
        std::cout << result.dump(1) << "\n";
        return 0;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
