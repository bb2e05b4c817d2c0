#include "tessera/state_eval.hpp"

#include "oracles.hpp"

#include <cmath>
#include <sstream>

#include <doctest.h>

using namespace tessera;
using nlohmann::json;

namespace {

// tree: d -> a (P=.5, N=4) -> b (P=.5, N=1); plus siblings for pool tests
struct TreeFixture {
    SearchTree tree{"d", "z"};
    int a, b;

    TreeFixture() {
        a = tree.add_child(0, Action{"r", "a"}, 0.5);
        auto& sa = tree.mutable_at(a).stats;
        sa.visits = 4;
        b = tree.add_child(a, Action{"r", "b"}, 0.5);
        auto& sb = tree.mutable_at(b).stats;
        sb.visits = 1;
        tree.mutable_at(0).expanded = true;
        tree.mutable_at(a).expanded = true;
    }
};

} // namespace

TEST_CASE("path_statistics") {
    TreeFixture fx;
    SUBCASE("root has empty sums") {
        PathStatistics stats = path_statistics(fx.tree, 0, 1e-9);
        CHECK(stats.log_path_prior == 0.0);
        CHECK(stats.cumulative_visits == 0);
    }
    SUBCASE("two-edge path: 2 ln 0.5 and 5 visits") {
        PathStatistics stats = path_statistics(fx.tree, fx.b, 1e-9);
        CHECK(stats.log_path_prior == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
        CHECK(stats.log_path_prior == doctest::Approx(-1.3863).epsilon(1e-4));
        CHECK(stats.cumulative_visits == 5);
    }
    SUBCASE("zero prior clamps at epsilon instead of -inf") {
        SearchTree tree("d", "z");
        int c = tree.add_child(0, Action{"r", "c"}, 0.0);
        PathStatistics stats = path_statistics(tree, c, 1e-9);
        CHECK(std::isfinite(stats.log_path_prior));
        CHECK(stats.log_path_prior == doctest::Approx(std::log(1e-9)));
    }
}

TEST_CASE("select_competitors") {
    EvalConfig cfg;
    cfg.depth_window = 1;
    cfg.competitor_count = 3;

    SUBCASE("first simulation: candidate alone") {
        SearchTree tree("d", "z");
        int leaf = tree.add_child(0, Action{"r", "a"}, 1.0);
        CompetitorSet set = select_competitors(tree, leaf, cfg);
        CHECK(set.candidate == leaf);
        CHECK(set.competitors.empty());
    }

    SUBCASE("top-k of the pool by (log prior, visits) matches a brute-force sort") {
        SearchTree tree("d", "z");
        // five depth-1 siblings with distinct priors, plus the candidate
        int leaf = tree.add_child(0, Action{"r", "cand"}, 0.10);
        std::vector<int> pool;
        const double priors[5] = {0.30, 0.05, 0.20, 0.25, 0.10};
        for (int i = 0; i < 5; ++i) {
            int node = tree.add_child(0, Action{"r", "s" + std::to_string(i)}, priors[i]);
            tree.mutable_at(node).stats.visits = i; // tie-break material
            pool.push_back(node);
        }
        CompetitorSet set = select_competitors(tree, leaf, cfg);
        REQUIRE(set.competitors.size() == 3);

        // brute force: sort by (log prior desc, visits desc, index asc)
        std::vector<int> expected = pool;
        std::sort(expected.begin(), expected.end(), [&](int x, int y) {
            double px = std::log(std::max(tree.at(x).stats.prior, cfg.epsilon));
            double py = std::log(std::max(tree.at(y).stats.prior, cfg.epsilon));
            if (px != py) return px > py;
            if (tree.at(x).stats.visits != tree.at(y).stats.visits)
                return tree.at(x).stats.visits > tree.at(y).stats.visits;
            return x < y;
        });
        for (int i = 0; i < 3; ++i) CHECK(set.competitors[i] == expected[i]);
    }

    SUBCASE("depth window zero keeps only equal-depth states") {
        EvalConfig tight = cfg;
        tight.depth_window = 0;
        TreeFixture fx;
        fx.tree.add_child(fx.b, Action{"r", "deep"}, 0.5); // depth-2 state
        // candidate at depth 1: node a's sibling
        int cand = fx.tree.add_child(0, Action{"r", "cand"}, 0.2);
        CompetitorSet set = select_competitors(fx.tree, cand, tight);
        CHECK_FALSE(set.competitors.empty());
        for (int node : set.competitors) CHECK(fx.tree.at(node).depth == 1);
    }

    SUBCASE("closed and terminal states are not active") {
        SearchTree tree("d", "z");
        int leaf = tree.add_child(0, Action{"r", "cand"}, 0.5);
        int closed = tree.add_child(0, Action{"r", "c1"}, 0.9);
        tree.mutable_at(closed).stats.closed = true;
        int terminal = tree.add_child(0, Action{"r", "c2"}, 0.8);
        tree.mutable_at(terminal).terminal = true;
        int open = tree.add_child(0, Action{"r", "c3"}, 0.1);
        CompetitorSet set = select_competitors(tree, leaf, cfg);
        REQUIRE(set.competitors.size() == 1);
        CHECK(set.competitors[0] == open);
    }
}

TEST_CASE("rubric_value") {
    const std::vector<int> rubric{1, 2, 3, 4, 5};
    SUBCASE("all mass on the top label") {
        StateValue v = rubric_value({{5, 0.0}}, rubric);
        CHECK(v.value == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("uniform over the rubric is exactly zero") {
        std::map<int, double> lps;
        for (int k : rubric) lps[k] = -1.7;
        StateValue v = rubric_value(lps, rubric);
        CHECK(v.value == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("half mass on 3 and 4 gives 0.25") {
        StateValue v = rubric_value({{3, std::log(0.5)}, {4, std::log(0.5)}}, rubric);
        CHECK(v.value == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(v.label_distribution.at(3) == doctest::Approx(0.5));
        CHECK(v.label_distribution.at(1) == 0.0);
    }
    SUBCASE("no rubric label present is a contract violation") {
        CHECK_THROWS_AS(rubric_value({{9, 0.0}}, rubric), std::runtime_error);
    }
    SUBCASE("bottom label hits exactly -1") {
        StateValue v = rubric_value({{1, -0.2}}, rubric);
        CHECK(v.value == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("monotone under upward mass shifts") {
        Rng rng(31);
        for (int trial = 0; trial < 200; ++trial) {
            // random distribution over labels
            std::map<int, double> lps;
            std::vector<double> p(5);
            double total = 0.0;
            for (int i = 0; i < 5; ++i) {
                p[i] = uniform_real(rng) + 1e-6;
                total += p[i];
            }
            for (int i = 0; i < 5; ++i) lps[i + 1] = std::log(p[i] / total);
            StateValue base = rubric_value(lps, rubric);

            // shift mass from a lower to a higher label
            int lo = static_cast<int>(uniform_index(rng, 4));
            int hi = lo + 1 + static_cast<int>(uniform_index(rng, 4 - lo));
            double shift = (p[lo] / total) * uniform_real(rng);
            std::map<int, double> shifted = lps;
            shifted[lo + 1] = std::log(std::max(p[lo] / total - shift, 1e-12));
            shifted[hi + 1] = std::log(p[hi] / total + shift);
            StateValue up = rubric_value(shifted, rubric);
            CHECK(up.value >= base.value - 1e-9);
        }
    }
}

TEST_CASE("evaluate_state") {
    KnowledgeGraph g;
    for (const char* id : {"d", "a", "b", "z"}) g.add_node(Node{id, "T", id, ""});
    g.add_edge(Edge{"d", "r", "a"});
    g.add_edge(Edge{"a", "r", "b"});
    g.add_edge(Edge{"b", "r", "z"});
    g.add_edge(Edge{"a", "r", "z"});

    SearchTree tree("d", "z");
    int a = tree.add_child(0, Action{"r", "a"}, 0.7);
    int b = tree.add_child(a, Action{"r", "b"}, 0.6);
    tree.mutable_at(0).expanded = true;

    EvalConfig cfg;
    ExplanationSet empty;

    SUBCASE("constant mock with full mass on 5 yields value 1") {
        EvaluatorGateway gateway(std::make_shared<ConstantBackend>(5));
        CompetitorSet set = select_competitors(tree, b, cfg);
        StateValue v = evaluate_state(tree, set, empty, gateway, cfg, g);
        CHECK(v.value == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("proximity mock matches the hand-computed rubric value") {
        EvaluatorGateway gateway(std::make_shared<ProximityBackend>(g));
        CompetitorSet set = select_competitors(tree, b, cfg);
        StateValue v = evaluate_state(tree, set, empty, gateway, cfg, g);
        // dist(b -> z) = 1, so the label is clamp(5-1) = 4: v = (2*4-6)/4 = 0.5
        CHECK(v.value == doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("empty explanation set marks the prompt; call still succeeds") {
        std::string seen_prompt;
        auto backend = std::make_shared<FunctionBackend>("mock:capture", [&](const EvaluatorRequest& req) {
            seen_prompt = req.prompt;
            json lps = json::object();
            lps["4"] = 0.0;
            return json{{"scores", json::array({json{{"index", 0}, {"label_logprobs", lps}}})}};
        });
        EvaluatorGateway gateway(backend);
        CompetitorSet set = select_competitors(tree, b, cfg);
        StateValue v = evaluate_state(tree, set, empty, gateway, cfg, g);
        CHECK(v.value == doctest::Approx(0.5));
        CHECK(seen_prompt.find("no accepted paths yet") != std::string::npos);
    }

    SUBCASE("missing candidate: one retry then an error") {
        auto backend = std::make_shared<FunctionBackend>("mock:nocand", [&](const EvaluatorRequest& req) {
            json lps = json::object();
            lps["4"] = 0.0;
            // score only a competitor index, never the candidate (index 0)
            long other = req.payload.at("states").size() > 1 ? 1 : 0;
            if (other == 0) { // no competitor available: return an empty scores array
                return json{{"scores", json::array()}};
            }
            return json{{"scores", json::array({json{{"index", other}, {"label_logprobs", lps}}})}};
        });
        EvaluatorGateway gateway(backend);
        CompetitorSet set = select_competitors(tree, b, cfg);
        CHECK_THROWS_WITH_AS(evaluate_state(tree, set, empty, gateway, cfg, g),
                             doctest::Contains("candidate"), std::runtime_error);
        CHECK(gateway.ledger().count(RequestKind::score_states) == 2); // the retry happened
    }

    SUBCASE("transcript logging captures the distribution") {
        EvaluatorGateway gateway(std::make_shared<ConstantBackend>(4));
        CompetitorSet set = select_competitors(tree, b, cfg);
        std::ostringstream transcript;
        evaluate_state(tree, set, empty, gateway, cfg, g, &transcript);
        json record = json::parse(transcript.str());
        CHECK(record.at("value") == doctest::Approx(0.5));
        CHECK(record.at("label_distribution").at("4") == doctest::Approx(1.0));
    }
}

TEST_CASE("ppr_eval: rank calibration to [-1, 1]") {
    KnowledgeGraph g;
    for (const char* id : {"z", "a", "b", "c", "e"}) g.add_node(Node{id, "T", "", ""});
    g.add_edge(Edge{"z", "r", "a"});
    g.add_edge(Edge{"a", "r", "b"});
    g.add_edge(Edge{"b", "r", "c"});
    g.add_edge(Edge{"c", "r", "e"});
    PprVector ppr = compute_ppr(g, "z", 0.85, 1e-14, 10000);
    CHECK(ppr_eval("z", ppr) == doctest::Approx(1.0));  // top rank
    CHECK(ppr_eval("b", ppr) == doctest::Approx(0.0));  // median of five
    CHECK(ppr_eval("e", ppr) == doctest::Approx(-1.0)); // bottom rank

    SUBCASE("monotone in the underlying score") {
        Rng rng(61);
        KnowledgeGraph rg = oracles::random_digraph(rng, 25, 0.12, true);
        PprVector p = compute_ppr(rg, "n0", 0.85, 1e-12, 5000);
        for (std::size_t i = 0; i < rg.node_count(); ++i)
            for (std::size_t j = 0; j < rg.node_count(); ++j)
                if (p.score_at(i) > p.score_at(j))
                    CHECK(ppr_eval(rg.nodes()[i].id, p) >= ppr_eval(rg.nodes()[j].id, p));
    }
}
