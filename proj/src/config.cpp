#include "tessera/config.hpp"

#include "tessera/util.hpp"

namespace tessera {

using nlohmann::json;

const char* const kVersion = "tessera 0.1.0";

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
    json j = json::parse(read_text_file(file));
    return from_json(std::move(j), std::filesystem::absolute(file).parent_path());
}

ExperimentConfig ExperimentConfig::from_json(json j, std::filesystem::path base_dir) {
    ExperimentConfig cfg;
    cfg.raw = std::move(j);
    cfg.base_dir = std::move(base_dir);
    return cfg;
}

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
    if (path.empty()) return {};
    std::filesystem::path p(path);
    return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path ExperimentConfig::substrate_dir() const {
    return resolve(raw.at("substrate").get<std::string>());
}

std::vector<PairSpec> ExperimentConfig::pairs() const {
    std::vector<PairSpec> out;
    for (const auto& jp : raw.at("pairs")) {
        PairSpec pair;
        pair.drug = jp.at("drug").get<std::string>();
        pair.disease = jp.at("disease").get<std::string>();
        pair.id = jp.value("id", pair.drug + "__" + pair.disease);
        out.push_back(std::move(pair));
    }
    return out;
}

namespace {
json section(const json& raw, const char* name) {
    return raw.contains(name) ? raw.at(name) : json::object();
}
} // namespace

ActionSpaceConfig ExperimentConfig::action_space() const {
    const json s = section(raw, "action_space");
    ActionSpaceConfig cfg;
    cfg.k = s.value("k", cfg.k);
    cfg.lambda = s.value("lambda", cfg.lambda);
    cfg.tau = s.value("tau", cfg.tau);
    if (s.contains("key_types"))
        for (const auto& t : s.at("key_types")) cfg.key_types.insert(t.get<std::string>());
    return cfg;
}

SearchConfig ExperimentConfig::search(std::uint64_t seed_override, bool has_override) const {
    const json s = section(raw, "search");
    SearchConfig cfg;
    cfg.budget = s.value("budget", cfg.budget);
    cfg.c0 = s.value("c0", cfg.c0);
    cfg.alpha = s.value("alpha", cfg.alpha);
    cfg.beta = s.value("beta", cfg.beta);
    cfg.K = s.value("K", cfg.K);
    cfg.depth_cap = s.value("depth_cap", cfg.depth_cap);
    cfg.value_floor = s.value("value_floor", cfg.value_floor);
    cfg.max_evaluator_calls = s.value("max_evaluator_calls", cfg.max_evaluator_calls);
    cfg.seed = has_override ? seed_override : s.value("seed", cfg.seed);
    return cfg;
}

PriorConfig ExperimentConfig::prior() const {
    const json s = section(raw, "prior");
    PriorConfig cfg;
    cfg.batch_size = s.value("batch_size", cfg.batch_size);
    cfg.passes = s.value("passes", cfg.passes);
    cfg.temperature = s.value("temperature", cfg.temperature);
    cfg.blend_weight = s.value("blend_weight", cfg.blend_weight);
    cfg.min_probability = s.value("min_probability", cfg.min_probability);
    if (s.contains("template_file"))
        cfg.template_text = read_text_file(resolve(s.at("template_file").get<std::string>()));
    return cfg;
}

std::string ExperimentConfig::prior_mode() const {
    return section(raw, "prior").value("mode", std::string("llm"));
}

std::string ExperimentConfig::prior_backend() const {
    return section(raw, "prior").value("backend", std::string("mock:proximity"));
}

std::filesystem::path ExperimentConfig::prior_cache_dir() const {
    return resolve(section(raw, "prior").value("cache_dir", std::string{}));
}

EvalConfig ExperimentConfig::state_eval() const {
    const json s = section(raw, "state_eval");
    EvalConfig cfg;
    cfg.depth_window = s.value("depth_window", cfg.depth_window);
    cfg.competitor_count = s.value("competitor_count", cfg.competitor_count);
    cfg.epsilon = s.value("epsilon", cfg.epsilon);
    if (s.contains("rubric")) {
        cfg.rubric.clear();
        for (const auto& label : s.at("rubric")) cfg.rubric.push_back(label.get<int>());
    }
    if (s.contains("template_file"))
        cfg.template_text = read_text_file(resolve(s.at("template_file").get<std::string>()));
    return cfg;
}

std::string ExperimentConfig::state_eval_mode() const {
    return section(raw, "state_eval").value("mode", std::string("llm"));
}

std::string ExperimentConfig::state_eval_backend() const {
    return section(raw, "state_eval").value("backend", std::string("mock:proximity"));
}

double ExperimentConfig::ppr_damping() const { return section(raw, "ppr").value("damping", 0.85); }
double ExperimentConfig::ppr_tol() const { return section(raw, "ppr").value("tol", 1e-10); }
int ExperimentConfig::ppr_max_iter() const { return section(raw, "ppr").value("max_iter", 1000); }

std::filesystem::path ExperimentConfig::ppr_cache_dir() const {
    return resolve(section(raw, "ppr").value("cache_dir", std::string{}));
}

std::vector<std::string> ExperimentConfig::judge_backends() const {
    std::vector<std::string> out;
    const json s = section(raw, "judge");
    if (s.contains("backends"))
        for (const auto& b : s.at("backends")) out.push_back(b.get<std::string>());
    if (out.empty())
        out = {"mock:proximity:judge-a", "mock:proximity:judge-b", "mock:proximity:judge-c"};
    return out;
}

std::vector<std::uint64_t> ExperimentConfig::serialization_seeds() const {
    std::vector<std::uint64_t> out;
    const json s = section(raw, "judge");
    if (s.contains("serialization_seeds"))
        for (const auto& seed : s.at("serialization_seeds")) out.push_back(seed.get<std::uint64_t>());
    if (out.empty()) out = {0, 1, 2};
    return out;
}

std::filesystem::path ExperimentConfig::references_dir() const {
    return resolve(section(raw, "judge").value("references_dir", std::string{}));
}

std::string ExperimentConfig::judge_template() const {
    const json s = section(raw, "judge");
    if (s.contains("template_file"))
        return read_text_file(resolve(s.at("template_file").get<std::string>()));
    return {};
}

int ExperimentConfig::bootstrap_samples() const {
    return section(raw, "metrics").value("bootstrap_samples", 10000);
}

std::uint64_t ExperimentConfig::metrics_seed() const {
    return section(raw, "metrics").value("seed", static_cast<std::uint64_t>(7));
}

std::vector<int> ExperimentConfig::esa_hops() const {
    std::vector<int> out;
    const json s = section(raw, "metrics");
    if (s.contains("esa_hops"))
        for (const auto& h : s.at("esa_hops")) out.push_back(h.get<int>());
    if (out.empty()) out = {1, 2};
    return out;
}

bool ExperimentConfig::restrict_to_curated() const {
    return section(raw, "metrics").value("restrict_to_curated", false);
}

EpaLimits ExperimentConfig::epa_limits() const {
    const json s = section(raw, "metrics");
    EpaLimits limits;
    limits.max_len = s.value("path_length_cap", limits.max_len);
    limits.max_paths = s.value("path_count_cap", limits.max_paths);
    return limits;
}

std::string ExperimentConfig::protein_type() const {
    return section(raw, "structural").value("protein_type", std::string("Protein"));
}

std::string ExperimentConfig::process_type() const {
    return section(raw, "structural").value("process_type", std::string("BiologicalProcess"));
}

std::filesystem::path ExperimentConfig::gold_dir() const {
    return resolve(section(raw, "eval").value("gold_dir", std::string{}));
}

std::filesystem::path ExperimentConfig::predictions_dir() const {
    return resolve(section(raw, "eval").value("predictions_dir", std::string{}));
}

std::filesystem::path ExperimentConfig::output_dir() const {
    return resolve(raw.value("output_dir", std::string("out")));
}

json ExperimentConfig::profiles() const { return section(raw, "profiles"); }

std::string ExperimentConfig::config_hash() const {
    // hash the experiment semantics only: storage locations (output/cache
    // directories) must not change artifact provenance
    json semantic = raw;
    semantic.erase("output_dir");
    if (semantic.contains("ppr") && semantic.at("ppr").is_object())
        semantic.at("ppr").erase("cache_dir");
    if (semantic.contains("prior") && semantic.at("prior").is_object())
        semantic.at("prior").erase("cache_dir");
    return hex64(fnv1a64(semantic.dump()));
}

} // namespace tessera
