#pragma once
// Experiment configuration: one JSON file with sections mirroring the module
// names. Paths are resolved relative to the config file's directory.

#include "tessera/action_space.hpp"
#include "tessera/metrics.hpp"
#include "tessera/prior_policy.hpp"
#include "tessera/search.hpp"
#include "tessera/state_eval.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tessera {

extern const char* const kVersion;

struct PairSpec {
    std::string id;
    std::string drug;
    std::string disease;
};

struct ExperimentConfig {
    nlohmann::json raw;
    std::filesystem::path base_dir; // directory of the config file

    static ExperimentConfig load(const std::filesystem::path& file);
    static ExperimentConfig from_json(nlohmann::json j, std::filesystem::path base_dir);

    std::filesystem::path resolve(const std::string& path) const;

    std::filesystem::path substrate_dir() const;
    std::vector<PairSpec> pairs() const;

    ActionSpaceConfig action_space() const;
    SearchConfig search(std::uint64_t seed_override = 0, bool has_override = false) const;
    PriorConfig prior() const;
    std::string prior_mode() const;    // "llm" | "uniform"
    std::string prior_backend() const; // backend spec string
    std::filesystem::path prior_cache_dir() const; // empty: cache disabled
    EvalConfig state_eval() const;
    std::string state_eval_mode() const;    // "llm" | "ppr"
    std::string state_eval_backend() const;

    double ppr_damping() const;
    double ppr_tol() const;
    int ppr_max_iter() const;
    std::filesystem::path ppr_cache_dir() const;

    std::vector<std::string> judge_backends() const;
    std::vector<std::uint64_t> serialization_seeds() const;
    std::filesystem::path references_dir() const;
    std::string judge_template() const;

    int bootstrap_samples() const;
    std::uint64_t metrics_seed() const;
    std::vector<int> esa_hops() const;
    bool restrict_to_curated() const;
    EpaLimits epa_limits() const;

    std::string protein_type() const;
    std::string process_type() const;

    std::filesystem::path gold_dir() const;
    std::filesystem::path predictions_dir() const;
    std::filesystem::path output_dir() const;
    nlohmann::json profiles() const;

    // Stable hash of the effective configuration; stamped into artifacts.
    std::string config_hash() const;
};

} // namespace tessera
