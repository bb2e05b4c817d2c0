#include "tessera/orchestrator.hpp"

#include "tessera/util.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

using namespace tessera;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct FixtureDir {
    fs::path root;

    explicit FixtureDir(const std::string& tag) {
        root = fs::temp_directory_path() / ("tessera_orch_" + tag);
        fs::remove_all(root);
        generate_fixtures(root);
    }
    ~FixtureDir() { fs::remove_all(root); }

    ExperimentConfig config(const json& patches = json::object()) const {
        json raw = json::parse(read_text_file(root / "config.json"));
        for (const auto& [key, value] : patches.items()) raw[key] = value;
        return ExperimentConfig::from_json(raw, root);
    }
};

json read_json(const fs::path& file) { return json::parse(read_text_file(file)); }

} // namespace

TEST_CASE("fixtures generate writes a loadable world") {
    FixtureDir fx("fixtures");
    KnowledgeGraph g = load_graph(fx.root / "substrate");
    CHECK(g.node_count() == 11);
    CHECK(g.has_node("P1"));
    CHECK(fs::exists(fx.root / "gold" / "d__z" / "subgraph.json"));
    CHECK(fs::exists(fx.root / "fixture_runs" / "shortcut" / "d__z" / "subgraph.json"));
    CHECK(fs::exists(fx.root / "refs" / "d__z.txt"));
}

TEST_CASE("cmd_search: smoke run with proximity mocks produces all artifacts") {
    FixtureDir fx("search_smoke");
    ExperimentConfig config = fx.config();
    json summary = cmd_search(config);
    CHECK(summary.at("failures").empty());
    for (const char* pair : {"d__z", "d2__z2"}) {
        const fs::path dir = fx.root / "out" / "search" / pair;
        for (const char* artifact : {"subgraph.json", "explanations.json", "tree_stats.json",
                                     "calls.json"})
            CHECK(fs::exists(dir / artifact));
        for (const char* artifact : {"search_log.jsonl", "priors_explain.jsonl", "state_eval.jsonl"})
            CHECK(fs::exists(dir / artifact));
        // the planted mechanism is recovered
        Subgraph sg = Subgraph::load(dir / "subgraph.json");
        CHECK_FALSE(sg.edges.empty());
    }
    // every artifact carries the config hash and version
    json subgraph = read_json(fx.root / "out" / "search" / "d__z" / "subgraph.json");
    CHECK(subgraph.at("meta").at("config_hash") == config.config_hash());
    CHECK(subgraph.at("meta").at("version") == kVersion);
}

TEST_CASE("cmd_search: warm prior cache makes zero rank_batch calls") {
    FixtureDir fx("warm_cache");
    ExperimentConfig config = fx.config();
    cmd_search(config);
    json cold_calls = read_json(fx.root / "out" / "search" / "d__z" / "calls.json");
    CHECK(cold_calls.at("calls").at("rank_batch").get<long>() > 0);

    CommandOverrides overrides;
    overrides.out = "out/search_warm";
    cmd_search(config, overrides);
    json warm_calls = read_json(fx.root / "out" / "search_warm" / "d__z" / "calls.json");
    CHECK(warm_calls.at("calls").at("rank_batch").get<long>() == 0);
    // warm artifacts match the cold ones
    CHECK(read_text_file(fx.root / "out" / "search_warm" / "d__z" / "subgraph.json") ==
          read_text_file(fx.root / "out" / "search" / "d__z" / "subgraph.json"));
}

TEST_CASE("cmd_search: per-pair failures are isolated") {
    FixtureDir fx("isolated");
    json pairs = json::array({json{{"id", "bad"}, {"drug", "GHOST"}, {"disease", "Z"}},
                              json{{"id", "d__z"}, {"drug", "D"}, {"disease", "Z"}}});
    ExperimentConfig config = fx.config(json{{"pairs", pairs}});
    json summary = cmd_search(config);
    REQUIRE(summary.at("failures").size() == 1);
    CHECK(summary.at("failures").at(0) == "bad");
    CHECK(fs::exists(fx.root / "out" / "search" / "d__z" / "subgraph.json"));
}

TEST_CASE("cmd_search + cmd_eval_dmdb: byte-identical artifacts across invocations") {
    FixtureDir fx("determinism");
    ExperimentConfig config = fx.config();
    CommandOverrides eval_overrides;
    eval_overrides.out = "out/eval";

    std::vector<fs::path> to_compare;
    for (const char* pair : {"d__z", "d2__z2"})
        for (const char* artifact :
             {"subgraph.json", "explanations.json", "tree_stats.json", "calls.json",
              "search_log.jsonl", "priors_explain.jsonl", "state_eval.jsonl"})
            to_compare.push_back(fs::path("out") / "search" / pair / artifact);
    to_compare.push_back(fs::path("out") / "search" / "search_summary.json");
    for (const char* artifact : {"eval_report.json", "mediator_stats.json", "mediator_hops.csv"})
        to_compare.push_back(fs::path("out") / "eval" / artifact);

    // first invocation: cold caches
    cmd_search(config);
    cmd_eval_dmdb(config, eval_overrides);
    std::map<fs::path, std::string> snapshot;
    for (const fs::path& rel : to_compare) snapshot[rel] = read_text_file(fx.root / rel);

    // reset all run state and invoke again
    fs::remove_all(fx.root / "out");
    fs::remove_all(fx.root / "cache");
    cmd_search(config);
    cmd_eval_dmdb(config, eval_overrides);
    for (const fs::path& rel : to_compare) {
        INFO("artifact: ", rel.string());
        CHECK(read_text_file(fx.root / rel) == snapshot.at(rel));
    }
}

TEST_CASE("cmd_eval_dmdb: gold copies score perfectly on every axis") {
    FixtureDir fx("eval_gold");
    ExperimentConfig config =
        fx.config(json{{"eval", json{{"gold_dir", "gold"}, {"predictions_dir", "gold"}}}});
    CommandOverrides overrides;
    overrides.out = "out/eval_gold";
    json summary = cmd_eval_dmdb(config, overrides);
    CHECK(summary.at("pairs_evaluated") == 2);
    for (const auto& [axis, values] : summary.at("axes").items()) {
        INFO("axis: ", axis);
        CHECK(values.at("micro_p").get<double>() == 1.0);
        CHECK(values.at("micro_r").get<double>() == 1.0);
        CHECK(values.at("micro_f1").get<double>() == 1.0);
        CHECK(values.at("macro_f1").get<double>() == 1.0);
    }
}

TEST_CASE("cmd_eval_dmdb: documented fixture values, exact") {
    FixtureDir fx("eval_fixture");
    json pairs = json::array({json{{"id", "d__z"}, {"drug", "D"}, {"disease", "Z"}}});
    ExperimentConfig config = fx.config(
        json{{"pairs", pairs},
             {"eval", json{{"gold_dir", "gold"}, {"predictions_dir", "fixture_runs/shortcut"}}}});
    CommandOverrides overrides;
    overrides.out = "out/eval_fixture";
    cmd_eval_dmdb(config, overrides);
    json report = read_json(fx.root / "out" / "eval_fixture" / "eval_report.json");

    std::map<std::string, json> axes;
    for (const auto& axis : report.at("axes")) axes[axis.at("axis")] = axis;
    CHECK(axes.at("NSA").at("micro").at("precision") == 1.0);
    CHECK(axes.at("NSA").at("micro").at("recall") == 0.75);
    CHECK(axes.at("ESA@1").at("micro").at("p_num") == 1);
    CHECK(axes.at("ESA@1").at("micro").at("p_den") == 2);
    CHECK(axes.at("ESA@1").at("micro").at("r_num") == 1);
    CHECK(axes.at("ESA@1").at("micro").at("r_den") == 3);
    CHECK(axes.at("ESA@2").at("micro").at("p_num") == 2);
    CHECK(axes.at("ESA@2").at("micro").at("p_den") == 2);
    CHECK(axes.at("TCA").at("micro").at("precision") == 1.0);
    CHECK(axes.at("TCA").at("micro").at("recall") == 0.5);

    // restricted ESA axes are present (fixture config sets the probe flag)
    CHECK(axes.count("ESA@1-restricted") == 1);
    CHECK(axes.at("ESA@1-restricted").at("micro").at("precision").get<double>() >=
          axes.at("ESA@1").at("micro").at("precision").get<double>());

    SUBCASE("missing artifacts are named errors") {
        json bad_pairs = json::array({json{{"id", "nope"}, {"drug", "D"}, {"disease", "Z"}}});
        ExperimentConfig broken = fx.config(
            json{{"pairs", bad_pairs},
                 {"eval", json{{"gold_dir", "gold"}, {"predictions_dir", "fixture_runs/shortcut"}}}});
        CHECK_THROWS_WITH_AS(cmd_eval_dmdb(broken, overrides), doctest::Contains("missing artifact"),
                             std::runtime_error);
    }
}

TEST_CASE("cmd_eval_dmdb: EPA fixture on the two-path variant") {
    FixtureDir fx("eval_epa");
    json pairs = json::array({json{{"id", "d__z"}, {"drug", "D"}, {"disease", "Z"}}});
    ExperimentConfig config = fx.config(
        json{{"pairs", pairs},
             {"eval", json{{"gold_dir", "gold"}, {"predictions_dir", "fixture_runs/two_path"}}}});
    CommandOverrides overrides;
    overrides.out = "out/eval_epa";
    cmd_eval_dmdb(config, overrides);
    json report = read_json(fx.root / "out" / "eval_epa" / "eval_report.json");
    std::map<std::string, json> axes;
    for (const auto& axis : report.at("axes")) axes[axis.at("axis")] = axis;
    CHECK(axes.at("EPA-IV").at("micro").at("p_num") == 1);
    CHECK(axes.at("EPA-IV").at("micro").at("p_den") == 1);
    CHECK(axes.at("EPA-OW").at("micro").at("p_num") == 1);
    CHECK(axes.at("EPA-OW").at("micro").at("p_den") == 2);
    CHECK(axes.at("EPA-IV").at("micro").at("recall") == 1.0);
    CHECK(axes.at("EPA-OW").at("micro").at("recall") == 1.0);
}

TEST_CASE("cmd_judge_msi: protocol runs with mock judges") {
    FixtureDir fx("judge");
    ExperimentConfig config = fx.config(
        json{{"eval", json{{"gold_dir", "gold"}, {"predictions_dir", "gold"}}}});
    CommandOverrides overrides;
    overrides.out = "out/judge";
    json summary = cmd_judge_msi(config, overrides);
    CHECK(summary.at("pairs_judged") == 2);
    json report = read_json(fx.root / "out" / "judge" / "judge_report.json");
    CHECK(report.at("per_pair").size() == 2);
    REQUIRE(report.at("icc_within_judge").size() == 3);
    // the proximity judge is permutation-invariant: perfect within-judge agreement
    for (const auto& icc : report.at("icc_within_judge"))
        CHECK(icc.get<double>() == doctest::Approx(1.0));
    CHECK(fs::exists(fx.root / "out" / "judge" / "judge_scores.csv"));
}

TEST_CASE("cmd_ablate: identical arms give zero deltas everywhere") {
    FixtureDir fx("ablate_same");
    ExperimentConfig config = fx.config(
        json{{"ablate", json{{"arm_a", "gold"}, {"arm_b", "gold"}}}});
    CommandOverrides overrides;
    overrides.out = "out/ablate";
    json summary = cmd_ablate(config, overrides);
    json report = read_json(fx.root / "out" / "ablate" / "ablate_report.json");
    for (const auto& dim : report.at("dimension_deltas")) {
        CHECK(dim.at("mean_delta").get<double>() == 0.0);
        CHECK(dim.at("ci95").at(0).get<double>() == 0.0);
        CHECK(dim.at("ci95").at(1).get<double>() == 0.0);
    }
    CHECK(report.at("cross_arm").at("median_abs").get<double>() == 0.0);
    CHECK(report.at("quadrants").at("q11").get<long>() == 2); // both pairs convergent
    CHECK(summary.at("median_abs_delta") == 0.0);
}

TEST_CASE("cmd_ablate: differing arms produce a full report") {
    FixtureDir fx("ablate_diff");
    json pairs = json::array({json{{"id", "d__z"}, {"drug", "D"}, {"disease", "Z"}}});
    ExperimentConfig config = fx.config(
        json{{"pairs", pairs},
             {"ablate", json{{"arm_a", "fixture_runs/two_path"}, {"arm_b", "fixture_runs/shortcut"}}}});
    CommandOverrides overrides;
    overrides.out = "out/ablate_diff";
    cmd_ablate(config, overrides);
    json report = read_json(fx.root / "out" / "ablate_diff" / "ablate_report.json");
    CHECK(report.at("dimension_deltas").size() == 5);
    CHECK(report.at("structural").at("arm_a").size() == 1);
    // two_path has 2 drug->disease paths, shortcut has 1
    CHECK(report.at("structural").at("arm_a").at(0).at("n_path") == 2);
    CHECK(report.at("structural").at("arm_b").at(0).at("n_path") == 1);
    const json& q = report.at("quadrants");
    const long total = q.at("q11").get<long>() + q.at("q12").get<long>() +
                       q.at("q21").get<long>() + q.at("q22").get<long>();
    CHECK(total == 1);

    SUBCASE("missing arm is a named error") {
        ExperimentConfig broken = fx.config(
            json{{"pairs", pairs},
                 {"ablate", json{{"arm_a", "fixture_runs/ghost"}, {"arm_b", "fixture_runs/shortcut"}}}});
        CHECK_THROWS_WITH_AS(cmd_ablate(broken, overrides), doctest::Contains("missing artifact"),
                             std::runtime_error);
    }
}

TEST_CASE("cache stats and clear") {
    FixtureDir fx("cache_mgmt");
    ExperimentConfig config = fx.config();
    cmd_search(config);
    json stats = cmd_cache_stats(config);
    CHECK(stats.at("prior").at("files").get<long>() > 0);
    CHECK(stats.at("ppr").at("files").get<long>() > 0);
    json cleared = cmd_cache_clear(config);
    CHECK(cleared.at("prior_removed").get<long>() > 0);
    json after = cmd_cache_stats(config);
    CHECK(after.at("prior").at("files").get<long>() == 0);
}

TEST_CASE("uniform-prior + ppr-eval arm runs with zero evaluator calls") {
    FixtureDir fx("baseline2");
    ExperimentConfig config = fx.config(
        json{{"prior", json{{"mode", "uniform"}}},
             {"state_eval", json{{"mode", "ppr"}}}});
    json summary = cmd_search(config);
    CHECK(summary.at("failures").empty());
    json calls = read_json(fx.root / "out" / "search" / "d__z" / "calls.json");
    CHECK(calls.at("calls").at("rank_batch").get<long>() == 0);
    CHECK(calls.at("calls").at("score_states").get<long>() == 0);
    // the pipeline still produces a mechanism subgraph
    Subgraph sg = Subgraph::load(fx.root / "out" / "search" / "d__z" / "subgraph.json");
    CHECK_FALSE(sg.edges.empty());
}
