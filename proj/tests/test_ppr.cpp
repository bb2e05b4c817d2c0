#include "tessera/ppr.hpp"

#include "oracles.hpp"

#include <cmath>
#include <filesystem>

#include <doctest.h>

using namespace tessera;

TEST_CASE("compute_ppr: single absorbing node") {
    KnowledgeGraph g;
    g.add_node(Node{"z", "Disease", "", ""});
    PprVector ppr = compute_ppr(g, "z", 0.85, 1e-10, 1000);
    CHECK(ppr.score("z") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rank_percentile(ppr, "z") == 0.5); // single-node convention
}

TEST_CASE("compute_ppr: 2-cycle matches the dense oracle to 1e-10") {
    KnowledgeGraph g;
    g.add_node(Node{"a", "T", "", ""});
    g.add_node(Node{"z", "T", "", ""});
    g.add_edge(Edge{"a", "r", "z"});
    g.add_edge(Edge{"z", "r", "a"});
    PprVector ppr = compute_ppr(g, "z", 0.85, 1e-14, 10000);
    auto oracle = oracles::dense_ppr(g, "z", 0.85);
    CHECK(std::abs(ppr.score("a") - oracle[g.index_of("a")]) < 1e-10);
    CHECK(std::abs(ppr.score("z") - oracle[g.index_of("z")]) < 1e-10);
    CHECK(ppr.score("z") > ppr.score("a")); // teleport mass concentrates on z
}

TEST_CASE("compute_ppr: random digraphs match the dense oracle (L1 < 1e-8)") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        KnowledgeGraph g = oracles::random_digraph(rng, 50, 0.08, trial % 2 == 1);
        const std::string z = "n" + std::to_string(uniform_index(rng, 50));
        PprVector ppr = compute_ppr(g, z, 0.85, 1e-12, 5000);
        auto oracle = oracles::dense_ppr(g, z, 0.85);
        double l1 = 0.0;
        for (std::size_t i = 0; i < g.node_count(); ++i)
            l1 += std::abs(ppr.score_at(i) - oracle[i]);
        CHECK(l1 < 1e-8);
    }
}

TEST_CASE("compute_ppr: scores sum to 1 even with dangling nodes") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        KnowledgeGraph g = oracles::random_digraph(rng, 30, 0.05, true);
        PprVector ppr = compute_ppr(g, "n0", 0.85, 1e-12, 5000);
        double total = 0.0;
        for (double s : ppr.scores()) total += s;
        CHECK(std::abs(total - 1.0) < 1e-9);
        CHECK(ppr.score("n0") > 0.0);
    }
}

TEST_CASE("compute_ppr: determinism and error paths") {
    Rng rng(88);
    KnowledgeGraph g = oracles::random_digraph(rng, 20, 0.15);
    PprVector a = compute_ppr(g, "n3", 0.85, 1e-10, 1000);
    PprVector b = compute_ppr(g, "n3", 0.85, 1e-10, 1000);
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(a.score_at(i) == b.score_at(i));

    CHECK_THROWS_AS(compute_ppr(g, "ghost", 0.85, 1e-10, 1000), std::runtime_error);
    CHECK_THROWS_AS(compute_ppr(g, "n3", 1.5, 1e-10, 1000), std::invalid_argument);
    CHECK_THROWS_WITH_AS(compute_ppr(g, "n3", 0.85, 1e-12, 1),
                         doctest::Contains("residual"), std::runtime_error);
}

TEST_CASE("rank_percentile: order statistics") {
    KnowledgeGraph g;
    for (const char* id : {"z", "a", "b", "c", "d"}) g.add_node(Node{id, "T", "", ""});
    // chain z -> a -> b -> c -> d gives strictly decreasing scores from z
    g.add_edge(Edge{"z", "r", "a"});
    g.add_edge(Edge{"a", "r", "b"});
    g.add_edge(Edge{"b", "r", "c"});
    g.add_edge(Edge{"c", "r", "d"});
    PprVector ppr = compute_ppr(g, "z", 0.85, 1e-14, 10000);

    CHECK(rank_percentile(ppr, "z") == doctest::Approx(1.0)); // unique max
    CHECK(rank_percentile(ppr, "d") == doctest::Approx(0.0)); // unique min
    CHECK(rank_percentile(ppr, "b") == doctest::Approx(0.5)); // 3rd largest of 5
    CHECK_THROWS_AS(rank_percentile(ppr, "ghost"), std::runtime_error);

    SUBCASE("monotone: higher score never yields a lower percentile") {
        Rng rng(99);
        KnowledgeGraph rg = oracles::random_digraph(rng, 40, 0.1, true);
        PprVector p = compute_ppr(rg, "n1", 0.85, 1e-12, 5000);
        for (std::size_t i = 0; i < rg.node_count(); ++i)
            for (std::size_t j = 0; j < rg.node_count(); ++j)
                if (p.score_at(i) > p.score_at(j))
                    CHECK(p.percentile_at(i) >= p.percentile_at(j));
    }

    SUBCASE("ties share a midrank percentile") {
        KnowledgeGraph tg;
        for (const char* id : {"z", "p", "q"}) tg.add_node(Node{id, "T", "", ""});
        tg.add_edge(Edge{"z", "r", "p"});
        tg.add_edge(Edge{"z", "r", "q"}); // p and q symmetric: tied scores
        tg.add_edge(Edge{"p", "r", "z"});
        tg.add_edge(Edge{"q", "r", "z"});
        PprVector p = compute_ppr(tg, "z", 0.85, 1e-14, 10000);
        CHECK(p.percentile("p") == doctest::Approx(p.percentile("q")));
        CHECK(p.percentile("p") == doctest::Approx(0.25)); // midrank of the bottom two of three
    }
}

TEST_CASE("ppr cache file round-trip") {
    Rng rng(111);
    KnowledgeGraph g = oracles::random_digraph(rng, 15, 0.2);
    PprVector ppr = compute_ppr(g, "n2", 0.85, 1e-10, 1000);
    auto file = std::filesystem::temp_directory_path() / "tessera_ppr_cache_test.json";
    ppr.save_json(file);
    PprVector back = PprVector::load_json(file);
    CHECK(back.target() == "n2");
    CHECK(back.damping() == 0.85);
    for (const Node& n : g.nodes()) {
        CHECK(back.score(n.id) == ppr.score(n.id));
        CHECK(back.percentile(n.id) == ppr.percentile(n.id));
    }
    std::filesystem::remove(file);
}
