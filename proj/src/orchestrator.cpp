#include "tessera/orchestrator.hpp"

#include "tessera/judge.hpp"
#include "tessera/metrics.hpp"
#include "tessera/state_eval.hpp"
#include "tessera/util.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace tessera {

using nlohmann::json;

namespace {

json artifact_meta(const ExperimentConfig& config) {
    return json{{"config_hash", config.config_hash()}, {"version", kVersion}};
}

void write_json_artifact(const std::filesystem::path& file, const ExperimentConfig& config,
                         json body) {
    body["meta"] = artifact_meta(config);
    write_text_file_atomic(file, body.dump(1) + "\n");
}

std::filesystem::path ppr_cache_file(const std::filesystem::path& dir,
                                     const KnowledgeGraph& graph, const std::string& z,
                                     double damping) {
    std::ostringstream name;
    name << "ppr_" << graph.content_hash_hex() << "_" << hex64(fnv1a64(z)) << "_" << damping
         << ".json";
    return dir / name.str();
}

PprVector obtain_ppr(const ExperimentConfig& config, const KnowledgeGraph& graph,
                     const std::string& z) {
    const auto cache_dir = config.ppr_cache_dir();
    if (!cache_dir.empty()) {
        const auto file = ppr_cache_file(cache_dir, graph, z, config.ppr_damping());
        if (std::filesystem::exists(file)) {
            try {
                return PprVector::load_json(file);
            } catch (const std::exception& err) {
                std::cerr << "warning: unreadable ppr cache " << file.string() << " (" << err.what()
                          << "), recomputing\n";
            }
        }
        PprVector ppr = compute_ppr(graph, z, config.ppr_damping(), config.ppr_tol(),
                                    config.ppr_max_iter());
        std::filesystem::create_directories(cache_dir);
        ppr.save_json(file);
        return ppr;
    }
    return compute_ppr(graph, z, config.ppr_damping(), config.ppr_tol(), config.ppr_max_iter());
}

std::string pick_backend(const std::string& configured, const CommandOverrides& overrides) {
    return overrides.backend.empty() ? configured : overrides.backend;
}

std::filesystem::path pick_output(const ExperimentConfig& config, const CommandOverrides& overrides) {
    return overrides.out.empty() ? config.output_dir() : config.resolve(overrides.out);
}

Subgraph load_pair_subgraph(const std::filesystem::path& dir, const std::string& pair_id) {
    const auto file = dir / pair_id / "subgraph.json";
    if (!std::filesystem::exists(file))
        throw std::runtime_error("missing artifact: " + file.string());
    return Subgraph::load(file);
}

std::string read_reference_text(const ExperimentConfig& config, const std::string& pair_id) {
    const auto dir = config.references_dir();
    if (dir.empty()) return {};
    const auto file = dir / (pair_id + ".txt");
    if (!std::filesystem::exists(file)) return {};
    return read_text_file(file);
}

} // namespace

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

json cmd_search(const ExperimentConfig& config, const CommandOverrides& overrides) {
    const KnowledgeGraph graph = load_graph(config.substrate_dir());
    const auto out_dir = pick_output(config, overrides);
    std::filesystem::create_directories(out_dir);

    const SearchConfig search_cfg =
        config.search(overrides.seed.value_or(0), overrides.seed.has_value());
    const ActionSpaceConfig action_cfg = config.action_space();
    const std::string prior_spec = pick_backend(config.prior_backend(), overrides);
    const std::string eval_spec = pick_backend(config.state_eval_backend(), overrides);

    std::unique_ptr<JsonCacheStore> prior_cache;
    if (!config.prior_cache_dir().empty())
        prior_cache = std::make_unique<JsonCacheStore>(config.prior_cache_dir());

    std::ostringstream action_fingerprint;
    action_fingerprint << "k=" << action_cfg.k << "|lambda=" << action_cfg.lambda
                       << "|tau=" << action_cfg.tau << "|types=";
    for (const std::string& t : action_cfg.key_types) action_fingerprint << t << ",";
    action_fingerprint << "|damping=" << config.ppr_damping();

    json pair_reports = json::array();
    for (const PairSpec& pair : config.pairs()) {
        json report{{"pair", pair.id}, {"drug", pair.drug}, {"disease", pair.disease}};
        try {
            if (!graph.has_node(pair.drug))
                throw std::runtime_error("drug node not in substrate: " + pair.drug);
            if (!graph.has_node(pair.disease))
                throw std::runtime_error("disease node not in substrate: " + pair.disease);

            const PprVector ppr = obtain_ppr(config, graph, pair.disease);

            EvaluatorGateway prior_gateway(make_backend(prior_spec, graph, config.profiles()));
            EvaluatorGateway eval_gateway(make_backend(eval_spec, graph, config.profiles()));

            const auto pair_dir = out_dir / pair.id;
            std::filesystem::create_directories(pair_dir);
            std::ofstream priors_log(pair_dir / "priors_explain.jsonl", std::ios::trunc);
            std::ofstream eval_log(pair_dir / "state_eval.jsonl", std::ios::trunc);
            priors_log << json{{"meta", artifact_meta(config)}}.dump() << "\n";
            eval_log << json{{"meta", artifact_meta(config)}}.dump() << "\n";

            UniformPriorPolicy uniform_policy;
            std::unique_ptr<LlmPriorPolicy> llm_policy;
            PriorProvider* prior_provider = &uniform_policy;
            if (config.prior_mode() == "llm") {
                llm_policy = std::make_unique<LlmPriorPolicy>(prior_gateway, config.prior(), graph,
                                                              ppr, prior_cache.get(),
                                                              action_fingerprint.str());
                llm_policy->set_sink(&priors_log);
                prior_provider = llm_policy.get();
            }

            PprEval ppr_eval_component(ppr);
            std::unique_ptr<LlmStateEval> llm_eval;
            LeafEvaluator* evaluator = &ppr_eval_component;
            if (config.state_eval_mode() == "llm") {
                llm_eval = std::make_unique<LlmStateEval>(eval_gateway, config.state_eval(), graph);
                llm_eval->set_transcript(&eval_log);
                evaluator = llm_eval.get();
            }

            SearchComponents components;
            components.graph = &graph;
            components.ppr = &ppr;
            components.action_cfg = action_cfg;
            components.prior = prior_provider;
            components.evaluator = evaluator;
            components.prior_ledger = &prior_gateway.ledger();
            components.eval_ledger = &eval_gateway.ledger();

            SearchResult result = run_search(graph, pair.drug, pair.disease, search_cfg, components);
            const Subgraph subgraph =
                build_explanation_subgraph(graph, result.explanations, pair.drug, pair.disease);

            write_json_artifact(pair_dir / "explanations.json", config, result.explanations_json());
            write_json_artifact(pair_dir / "subgraph.json", config, subgraph.to_json());
            write_json_artifact(pair_dir / "tree_stats.json", config, result.tree.stats_json());
            {
                std::ofstream search_log(pair_dir / "search_log.jsonl", std::ios::trunc);
                search_log << json{{"meta", artifact_meta(config)}}.dump() << "\n";
                for (const SimulationRecord& record : result.log)
                    search_log << record.to_json().dump() << "\n";
            }
            json calls{{"prior", prior_gateway.ledger().to_json()},
                       {"state_eval", eval_gateway.ledger().to_json()},
                       {"rank_batch", prior_gateway.ledger().count(RequestKind::rank_batch)},
                       {"score_states", eval_gateway.ledger().count(RequestKind::score_states)}};
            if (prior_cache) {
                calls["prior_cache_hits"] = prior_cache->hits();
                calls["prior_cache_misses"] = prior_cache->misses();
            }
            write_json_artifact(pair_dir / "calls.json", config, json{{"calls", calls}});

            json expansion_counts = json::array();
            for (int c : result.expansion_action_counts) expansion_counts.push_back(c);
            report["status"] = "ok";
            report["explanations"] = result.explanations.paths.size();
            report["expansions"] = result.expansions;
            report["expansion_action_counts"] = std::move(expansion_counts);
            report["root_dead_end"] = result.root_dead_end;
            if (result.root_dead_end) report["warning"] = "no legal actions at the search root";
            report["call_guard_tripped"] = result.call_guard_tripped;
            report["rank_batch_calls"] = prior_gateway.ledger().count(RequestKind::rank_batch);
            report["score_states_calls"] = eval_gateway.ledger().count(RequestKind::score_states);
        } catch (const std::exception& err) {
            report["status"] = "failed";
            report["error"] = err.what();
        }
        pair_reports.push_back(std::move(report));
    }

    json failures = json::array();
    for (const auto& r : pair_reports)
        if (r.at("status") == "failed") failures.push_back(r.at("pair"));
    json summary{{"pairs", std::move(pair_reports)},
                 {"failures", std::move(failures)},
                 {"prior_backend", prior_spec},
                 {"state_eval_backend", eval_spec},
                 {"prior_mode", config.prior_mode()},
                 {"state_eval_mode", config.state_eval_mode()}};
    write_json_artifact(out_dir / "search_summary.json", config, summary);
    return summary;
}

// ---------------------------------------------------------------------------
// eval-dmdb
// ---------------------------------------------------------------------------

json cmd_eval_dmdb(const ExperimentConfig& config, const CommandOverrides& overrides) {
    const auto out_dir = pick_output(config, overrides);
    std::filesystem::create_directories(out_dir);
    const auto gold_dir = config.gold_dir();
    const auto predictions_dir = config.predictions_dir();
    const EpaLimits limits = config.epa_limits();

    std::vector<RunMetrics> runs;
    std::vector<MediatorRecord> pooled_records;
    json per_pair_mediators = json::array();
    json failures = json::array();

    for (const PairSpec& pair : config.pairs()) {
        try {
            GraphPair graph_pair;
            graph_pair.predicted = load_pair_subgraph(predictions_dir, pair.id);
            graph_pair.curated = load_pair_subgraph(gold_dir, pair.id);
            graph_pair.drug = pair.drug;
            graph_pair.disease = pair.disease;

            RunMetrics run;
            run.run_id = pair.id;
            run.axes.push_back({"NSA", node_set_agreement(graph_pair), false});
            for (int h : config.esa_hops()) {
                run.axes.push_back(
                    {"ESA@" + std::to_string(h), edge_set_agreement(graph_pair, h, false), true});
            }
            if (config.restrict_to_curated()) {
                for (int h : config.esa_hops())
                    run.axes.push_back({"ESA@" + std::to_string(h) + "-restricted",
                                        edge_set_agreement(graph_pair, h, true), true});
            }
            run.axes.push_back({"TCA", transitive_closure_agreement(graph_pair), false});
            run.axes.push_back(
                {"EPA-IV", exact_path_agreement(graph_pair, EpaMode::in_vocabulary, limits), true});
            run.axes.push_back(
                {"EPA-OW", exact_path_agreement(graph_pair, EpaMode::open_world, limits), true});
            runs.push_back(std::move(run));

            auto records = mediator_records(graph_pair);
            per_pair_mediators.push_back(
                json{{"pair", pair.id}, {"stats", mediator_stats(records).to_json()}});
            pooled_records.insert(pooled_records.end(), records.begin(), records.end());
        } catch (const std::exception& err) {
            failures.push_back(json{{"pair", pair.id}, {"error", err.what()}});
        }
    }
    if (runs.empty())
        throw std::runtime_error("eval-dmdb: no evaluable pairs (" + failures.dump() + ")");

    const std::uint64_t seed = overrides.seed.value_or(config.metrics_seed());
    MetricReport report = aggregate(runs, config.bootstrap_samples(), seed);
    write_json_artifact(out_dir / "eval_report.json", config, report.to_json());

    const MediatorStats pooled = mediator_stats(pooled_records);
    write_json_artifact(out_dir / "mediator_stats.json", config,
                        json{{"pooled", pooled.to_json()}, {"per_pair", per_pair_mediators}});
    write_text_file_atomic(out_dir / "mediator_hops.csv", mediator_csv_hops(pooled));
    write_text_file_atomic(out_dir / "mediator_jaccard.csv", mediator_csv_jaccard(pooled));
    write_text_file_atomic(out_dir / "mediator_gold_fraction.csv",
                           mediator_csv_gold_fraction(pooled));

    json summary{{"pairs_evaluated", runs.size()}, {"failures", failures}};
    for (const AxisAggregate& axis : report.axes)
        summary["axes"][axis.axis] = json{{"micro_p", axis.micro.precision},
                                          {"micro_r", axis.micro.recall},
                                          {"micro_f1", axis.micro.f1},
                                          {"macro_f1", axis.macro_f1}};
    return summary;
}

// ---------------------------------------------------------------------------
// judge-msi
// ---------------------------------------------------------------------------

namespace {

struct JudgedArm {
    // pair id -> per-dimension mean scores (over serialization x judge)
    std::map<std::string, DimensionScores> dimension_means;
    std::map<std::string, ScoreMatrix> matrices;
};

JudgedArm judge_arm(const ExperimentConfig& config, const CommandOverrides& overrides,
                    const KnowledgeGraph& graph, const std::filesystem::path& predictions_dir,
                    std::vector<std::unique_ptr<EvaluatorGateway>>& gateways,
                    const std::string& judge_template) {
    JudgedArm arm;
    std::vector<EvaluatorGateway*> judges;
    for (auto& g : gateways) judges.push_back(g.get());
    const auto seeds = config.serialization_seeds();

    for (const PairSpec& pair : config.pairs()) {
        Subgraph subgraph = load_pair_subgraph(predictions_dir, pair.id);
        if (subgraph.nodes.empty())
            throw std::runtime_error("empty predicted subgraph for pair " + pair.id);
        JudgeRubric rubric;
        rubric.reference_text = read_reference_text(config, pair.id);
        rubric.template_text = judge_template;
        ScoreMatrix matrix = run_protocol(subgraph, rubric, judges, seeds);
        DimensionScores means;
        for (std::size_t d = 0; d < rubric.dimensions.size(); ++d)
            means.push_back(matrix.dimension_mean(d));
        arm.dimension_means[pair.id] = std::move(means);
        arm.matrices.emplace(pair.id, std::move(matrix));
    }
    (void)overrides;
    (void)graph;
    return arm;
}

std::vector<std::unique_ptr<EvaluatorGateway>> make_judges(const ExperimentConfig& config,
                                                           const CommandOverrides& overrides,
                                                           const KnowledgeGraph& graph) {
    std::vector<std::string> specs = config.judge_backends();
    if (!overrides.backend.empty())
        specs = {overrides.backend + ":judge-a", overrides.backend + ":judge-b",
                 overrides.backend + ":judge-c"};
    std::vector<std::unique_ptr<EvaluatorGateway>> gateways;
    for (const std::string& spec : specs)
        gateways.push_back(
            std::make_unique<EvaluatorGateway>(make_backend(spec, graph, config.profiles())));
    return gateways;
}

// within-judge agreement across serializations: raters = serializations,
// subjects = (pair, dimension) pooled
std::vector<double> icc_per_judge(const JudgedArm& arm, std::size_t n_judges) {
    std::vector<double> out;
    for (std::size_t j = 0; j < n_judges; ++j) {
        std::vector<std::vector<double>> matrix;
        bool sized = false;
        for (const auto& [pair_id, score_matrix] : arm.matrices) {
            (void)pair_id;
            if (!sized) {
                matrix.resize(score_matrix.seeds.size());
                sized = true;
            }
            for (std::size_t s = 0; s < score_matrix.cells.size(); ++s)
                for (std::size_t d = 0; d < score_matrix.dimensions.size(); ++d)
                    matrix[s].push_back(score_matrix.cells[s][j][d].expected);
        }
        bool zero_variance = false;
        out.push_back(icc_3k(matrix, &zero_variance));
    }
    return out;
}

// inter-judge agreement: raters = judges (serialization-averaged), subjects =
// (pair, dimension) pooled
double icc_inter_judge(const JudgedArm& arm, std::size_t n_judges) {
    std::vector<std::vector<double>> matrix(n_judges);
    for (const auto& [pair_id, score_matrix] : arm.matrices) {
        (void)pair_id;
        for (std::size_t j = 0; j < n_judges; ++j) {
            for (std::size_t d = 0; d < score_matrix.dimensions.size(); ++d) {
                double mean = 0.0;
                for (std::size_t s = 0; s < score_matrix.cells.size(); ++s)
                    mean += score_matrix.cells[s][j][d].expected;
                matrix[j].push_back(mean / static_cast<double>(score_matrix.cells.size()));
            }
        }
    }
    bool zero_variance = false;
    return icc_3k(matrix, &zero_variance);
}

std::string scores_csv(const JudgedArm& arm) {
    std::ostringstream out;
    out << "pair,dimension,judge,serialization_seed,expected\n";
    for (const auto& [pair_id, matrix] : arm.matrices) {
        for (std::size_t s = 0; s < matrix.cells.size(); ++s)
            for (std::size_t j = 0; j < matrix.judges.size(); ++j)
                for (std::size_t d = 0; d < matrix.dimensions.size(); ++d)
                    out << pair_id << "," << matrix.dimensions[d] << "," << matrix.judges[j] << ","
                        << matrix.seeds[s] << "," << matrix.cells[s][j][d].expected << "\n";
    }
    return out.str();
}

} // namespace

json cmd_judge_msi(const ExperimentConfig& config, const CommandOverrides& overrides) {
    const KnowledgeGraph graph = load_graph(config.substrate_dir());
    const auto out_dir = pick_output(config, overrides);
    std::filesystem::create_directories(out_dir);

    auto gateways = make_judges(config, overrides, graph);
    const JudgedArm arm = judge_arm(config, overrides, graph, config.predictions_dir(), gateways,
                                    config.judge_template());

    json per_pair = json::array();
    for (const auto& [pair_id, matrix] : arm.matrices)
        per_pair.push_back(json{{"pair", pair_id}, {"scores", matrix.to_json()}});

    json report{{"per_pair", std::move(per_pair)},
                {"icc_within_judge", icc_per_judge(arm, gateways.size())},
                {"icc_inter_judge", icc_inter_judge(arm, gateways.size())}};
    write_json_artifact(out_dir / "judge_report.json", config, report);
    write_text_file_atomic(out_dir / "judge_scores.csv", scores_csv(arm));

    json summary{{"pairs_judged", arm.matrices.size()},
                 {"icc_inter_judge", report.at("icc_inter_judge")}};
    return summary;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

json cmd_ablate(const ExperimentConfig& config, const CommandOverrides& overrides) {
    if (!config.raw.contains("ablate"))
        throw std::runtime_error("ablate: config needs an 'ablate' section with arm_a/arm_b");
    const json& ablate_cfg = config.raw.at("ablate");
    const auto arm_a_dir = config.resolve(ablate_cfg.at("arm_a").get<std::string>());
    const auto arm_b_dir = config.resolve(ablate_cfg.at("arm_b").get<std::string>());

    const KnowledgeGraph graph = load_graph(config.substrate_dir());
    const auto out_dir = pick_output(config, overrides);
    std::filesystem::create_directories(out_dir);

    auto gateways = make_judges(config, overrides, graph);
    const std::string judge_template = config.judge_template();
    const JudgedArm arm_a = judge_arm(config, overrides, graph, arm_a_dir, gateways, judge_template);
    const JudgedArm arm_b = judge_arm(config, overrides, graph, arm_b_dir, gateways, judge_template);

    const JudgeRubric rubric;
    const std::size_t n_dims = rubric.dimensions.size();
    const auto pairs = config.pairs();

    // per-dimension mean deltas with bootstrap CIs over pairs
    std::vector<std::vector<double>> per_dim_deltas(n_dims);
    for (const PairSpec& pair : pairs) {
        const DimensionScores& a = arm_a.dimension_means.at(pair.id);
        const DimensionScores& b = arm_b.dimension_means.at(pair.id);
        for (std::size_t d = 0; d < n_dims; ++d) per_dim_deltas[d].push_back(a[d] - b[d]);
    }
    const std::uint64_t seed = overrides.seed.value_or(config.metrics_seed());
    json dimension_deltas = json::array();
    for (std::size_t d = 0; d < n_dims; ++d) {
        const auto& deltas = per_dim_deltas[d];
        double mean = 0.0;
        for (double v : deltas) mean += v;
        mean /= static_cast<double>(deltas.size());
        Rng rng(seed + d);
        std::vector<double> samples;
        for (int b = 0; b < config.bootstrap_samples(); ++b) {
            double total = 0.0;
            for (std::size_t i = 0; i < deltas.size(); ++i)
                total += deltas[uniform_index(rng, deltas.size())];
            samples.push_back(total / static_cast<double>(deltas.size()));
        }
        std::sort(samples.begin(), samples.end());
        auto pct = [&](double q) {
            const double pos = q * static_cast<double>(samples.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, samples.size() - 1);
            return samples[lo] + (pos - lo) * (samples[hi] - samples[lo]);
        };
        dimension_deltas.push_back(json{{"dimension", rubric.dimensions[d]},
                                        {"mean_delta", mean},
                                        {"ci95", {pct(0.025), pct(0.975)}}});
    }

    // cross-arm agreement and divergence quadrants
    const CrossModelDelta cross = cross_model_delta(arm_a.dimension_means, arm_b.dimension_means);
    std::vector<double> abs_deltas, distances, avg_a, avg_b;
    for (std::size_t i = 0; i < cross.pairs.size(); ++i) {
        abs_deltas.push_back(std::abs(cross.deltas[i]));
        const Subgraph sg_a = load_pair_subgraph(arm_a_dir, cross.pairs[i]);
        const Subgraph sg_b = load_pair_subgraph(arm_b_dir, cross.pairs[i]);
        distances.push_back(edge_jaccard_distance(sg_a, sg_b));
        const DimensionScores& a = arm_a.dimension_means.at(cross.pairs[i]);
        const DimensionScores& b = arm_b.dimension_means.at(cross.pairs[i]);
        double ma = 0.0, mb = 0.0;
        for (std::size_t d = 0; d < n_dims; ++d) {
            ma += a[d];
            mb += b[d];
        }
        avg_a.push_back(ma / static_cast<double>(n_dims));
        avg_b.push_back(mb / static_cast<double>(n_dims));
    }
    const QuadrantTable quadrants = quadrant_analysis(abs_deltas, distances);
    json tau = json(nullptr);
    if (avg_a.size() >= 2) {
        bool defined = false;
        const double value = kendall_tau_b(avg_a, avg_b, &defined);
        if (defined) tau = value;
    }

    // Structural comparison table
    StructuralConfig structural_cfg;
    structural_cfg.protein_type = config.protein_type();
    structural_cfg.process_type = config.process_type();
    auto arm_structural = [&](const std::filesystem::path& dir) {
        json rows = json::array();
        for (const PairSpec& pair : pairs) {
            const Subgraph sg = load_pair_subgraph(dir, pair.id);
            json row = structural_metrics(sg, structural_cfg).to_json();
            row["pair"] = pair.id;
            rows.push_back(std::move(row));
        }
        return rows;
    };

    json report{{"arm_a", arm_a_dir.string()},
                {"arm_b", arm_b_dir.string()},
                {"dimension_deltas", std::move(dimension_deltas)},
                {"cross_arm", cross.to_json()},
                {"kendall_tau_b", tau},
                {"quadrants", quadrants.to_json()},
                {"structural", json{{"arm_a", arm_structural(arm_a_dir)},
                                    {"arm_b", arm_structural(arm_b_dir)}}}};
    write_json_artifact(out_dir / "ablate_report.json", config, report);

    json summary{{"pairs", pairs.size()},
                 {"median_abs_delta", cross.median_abs},
                 {"quadrants", quadrants.to_json()}};
    return summary;
}

// ---------------------------------------------------------------------------
// cache management
// ---------------------------------------------------------------------------

json cmd_cache_stats(const ExperimentConfig& config) {
    json out = json::object();
    const auto prior_dir = config.prior_cache_dir();
    if (!prior_dir.empty()) {
        const auto stats = JsonCacheStore::stats(prior_dir);
        out["prior"] = json{{"dir", prior_dir.string()}, {"files", stats.files}, {"bytes", stats.bytes}};
    }
    const auto ppr_dir = config.ppr_cache_dir();
    if (!ppr_dir.empty()) {
        const auto stats = JsonCacheStore::stats(ppr_dir);
        out["ppr"] = json{{"dir", ppr_dir.string()}, {"files", stats.files}, {"bytes", stats.bytes}};
    }
    return out;
}

json cmd_cache_clear(const ExperimentConfig& config) {
    json out = json::object();
    const auto prior_dir = config.prior_cache_dir();
    if (!prior_dir.empty()) out["prior_removed"] = JsonCacheStore::clear(prior_dir);
    const auto ppr_dir = config.ppr_cache_dir();
    if (!ppr_dir.empty()) out["ppr_removed"] = JsonCacheStore::clear(ppr_dir);
    return out;
}

// ---------------------------------------------------------------------------
// fixtures
// ---------------------------------------------------------------------------

json generate_fixtures(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    KnowledgeGraph substrate;
    auto add = [&](const char* id, const char* type, const char* label) {
        substrate.add_node(Node{id, type, label, std::string(label) + " (fixture node)"});
    };
    add("D", "Drug", "drug-d");
    add("A", "Protein", "protein-a");
    add("B", "Protein", "protein-b");
    add("X", "Protein", "protein-x");
    add("P1", "BiologicalProcess", "process-p1");
    add("Z", "Disease", "disease-z");
    add("D2", "Drug", "drug-d2");
    add("C1", "Protein", "protein-c1");
    add("C2", "Protein", "protein-c2");
    add("E1", "Protein", "protein-e1");
    add("Z2", "Disease", "disease-z2");
    auto edge = [&](const char* s, const char* r, const char* t) {
        substrate.add_edge(Edge{s, r, t});
    };
    edge("D", "binds", "A");
    edge("A", "activates", "B");
    edge("B", "contributes_to", "Z");
    edge("A", "associated_with", "Z");
    edge("D", "binds", "X");
    edge("X", "activates", "B");
    edge("A", "participates_in", "P1");
    edge("P1", "associated_with", "Z");
    edge("D2", "binds", "C1");
    edge("C1", "activates", "C2");
    edge("C2", "contributes_to", "Z2");
    edge("D2", "binds", "E1"); // E1 is a dead end
    save_graph(substrate, dir / "substrate");

    // curated gold mechanisms
    {
        Subgraph gold = build_subgraph(
            substrate,
            {{Edge{"D", "binds", "A"}, Edge{"A", "activates", "B"}, Edge{"B", "contributes_to", "Z"}}},
            "D", "Z");
        gold.save(dir / "gold" / "d__z" / "subgraph.json");
    }
    {
        Subgraph gold = build_subgraph(substrate,
                                       {{Edge{"D2", "binds", "C1"}, Edge{"C1", "activates", "C2"},
                                         Edge{"C2", "contributes_to", "Z2"}}},
                                       "D2", "Z2");
        gold.save(dir / "gold" / "d2__z2" / "subgraph.json");
    }

    // documented predicted variants: the shortcut subgraph (D->A, A->Z) and
    // the two-path variant (D->A->B->Z plus D->X->B->Z)
    {
        Subgraph pred;
        pred.drug = "D";
        pred.disease = "Z";
        pred.nodes = {substrate.node("D"), substrate.node("A"), substrate.node("Z")};
        pred.edges = {Edge{"D", "binds", "A"}, Edge{"A", "associated_with", "Z"}};
        pred.provenance = {{Edge{"D", "binds", "A"}, Edge{"A", "associated_with", "Z"}}};
        pred.save(dir / "fixture_runs" / "shortcut" / "d__z" / "subgraph.json");
    }
    {
        Subgraph pred = build_subgraph(
            substrate,
            {{Edge{"D", "binds", "A"}, Edge{"A", "activates", "B"}, Edge{"B", "contributes_to", "Z"}},
             {Edge{"D", "binds", "X"}, Edge{"X", "activates", "B"}, Edge{"B", "contributes_to", "Z"}}},
            "D", "Z");
        pred.save(dir / "fixture_runs" / "two_path" / "d__z" / "subgraph.json");
    }

    write_text_file_atomic(dir / "refs" / "d__z.txt",
                           "Reference mechanism: drug-d binds protein-a, which activates "
                           "protein-b; protein-b contributes to disease-z.\n");
    write_text_file_atomic(dir / "refs" / "d2__z2.txt",
                           "Reference mechanism: drug-d2 binds protein-c1, which activates "
                           "protein-c2; protein-c2 contributes to disease-z2.\n");

    json config{
        {"substrate", "substrate"},
        {"pairs", json::array({json{{"id", "d__z"}, {"drug", "D"}, {"disease", "Z"}},
                               json{{"id", "d2__z2"}, {"drug", "D2"}, {"disease", "Z2"}}})},
        {"action_space",
         {{"k", 10}, {"lambda", 0.3}, {"tau", 3}, {"key_types", {"BiologicalProcess"}}}},
        {"search", {{"budget", 60}, {"depth_cap", 8}}},
        {"ppr", {{"damping", 0.85}, {"cache_dir", "cache/ppr"}}},
        {"prior",
         {{"mode", "llm"}, {"backend", "mock:proximity"}, {"batch_size", 6}, {"passes", 2},
          {"cache_dir", "cache/priors"}}},
        {"state_eval", {{"mode", "llm"}, {"backend", "mock:proximity"}}},
        {"judge",
         {{"backends", {"mock:proximity:judge-a", "mock:proximity:judge-b",
                        "mock:proximity:judge-c"}},
          {"serialization_seeds", {0, 1, 2}},
          {"references_dir", "refs"}}},
        {"metrics", {{"bootstrap_samples", 2000}, {"seed", 7}, {"restrict_to_curated", true}}},
        {"eval", {{"gold_dir", "gold"}, {"predictions_dir", "out/search"}}},
        {"output_dir", "out/search"}};
    write_text_file_atomic(dir / "config.json", config.dump(1) + "\n");

    return json{{"dir", dir.string()},
                {"substrate_nodes", substrate.node_count()},
                {"substrate_edges", substrate.edge_count()},
                {"pairs", 2}};
}

} // namespace tessera
