#pragma once
// Experiment driver behind the CLI verbs: search runs, DMDB evaluation, MSI
// judging, the prior ablation, cache management and fixture generation.
// Every command returns its summary as JSON and writes per-pair artifacts.

#include "tessera/config.hpp"

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace tessera {

struct CommandOverrides {
    std::optional<std::uint64_t> seed;
    std::string backend; // replaces prior/state-eval/judge backend specs
    std::string out;     // replaces the configured output directory
};

// Per pair: PPR (cached when configured) -> run_search -> subgraph and run
// artifacts. Pair failures are isolated and listed in the summary.
nlohmann::json cmd_search(const ExperimentConfig& config, const CommandOverrides& overrides = {});

// Predicted-vs-gold agreement along NSA / ESA@h / TCA / EPA-IV / EPA-OW
// (plus curated-restricted ESA when configured), micro+macro with bootstrap
// CIs, and the pooled hop/mediator analysis exports.
nlohmann::json cmd_eval_dmdb(const ExperimentConfig& config, const CommandOverrides& overrides = {});

// 3 serializations x 3 judges protocol per predicted subgraph, with
// within-judge and inter-judge agreement statistics.
nlohmann::json cmd_judge_msi(const ExperimentConfig& config, const CommandOverrides& overrides = {});

// Two-arm comparison (e.g. LLM prior vs uniform prior): judge both arms,
// report per-dimension mean deltas with bootstrap CIs, cross-arm agreement
// (Kendall tau-b, within-delta fractions), the divergence quadrants and the
// structural metric table.
nlohmann::json cmd_ablate(const ExperimentConfig& config, const CommandOverrides& overrides = {});

nlohmann::json cmd_cache_stats(const ExperimentConfig& config);
nlohmann::json cmd_cache_clear(const ExperimentConfig& config);

// Writes the bundled toy substrate, curated gold mechanisms, documented
// predicted-variant fixtures, reference texts and a ready-to-run config.
nlohmann::json generate_fixtures(const std::filesystem::path& dir);

} // namespace tessera
