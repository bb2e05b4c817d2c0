#include "tessera/graph.hpp"
#include "tessera/subgraph.hpp"
#include "tessera/util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <doctest.h>

using namespace tessera;

namespace {

std::filesystem::path make_temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("tessera_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_lines(const std::filesystem::path& file, const std::vector<std::string>& lines) {
    std::ofstream out(file);
    for (const auto& line : lines) out << line << "\n";
}

KnowledgeGraph random_graph(Rng& rng, int n_nodes, int n_edges) {
    KnowledgeGraph g;
    for (int i = 0; i < n_nodes; ++i)
        g.add_node(Node{"n" + std::to_string(i), "Thing", "node " + std::to_string(i), ""});
    const std::vector<std::string> relations = {"r1", "r2", "r3"};
    int added = 0, attempts = 0;
    while (added < n_edges && attempts < n_edges * 20) {
        ++attempts;
        std::size_t a = uniform_index(rng, n_nodes);
        std::size_t b = uniform_index(rng, n_nodes);
        if (a == b) continue;
        std::size_t before = g.edge_count();
        g.add_edge(Edge{"n" + std::to_string(a), relations[uniform_index(rng, relations.size())],
                        "n" + std::to_string(b)});
        if (g.edge_count() > before) ++added;
    }
    return g;
}

} // namespace

TEST_CASE("load_graph: minimal two-node file") {
    auto dir = make_temp_dir("graph_minimal");
    write_lines(dir / "nodes.jsonl",
                {R"({"id":"a","type":"Drug","label":"A","description":""})",
                 R"({"id":"b","type":"Disease","label":"B","description":"x"})"});
    write_lines(dir / "edges.jsonl", {R"({"source":"a","relation":"treats","target":"b"})"});
    KnowledgeGraph g = load_graph(dir);
    CHECK(g.node_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(g.node("b").description == "x");
}

TEST_CASE("load_graph: DMDB-scale synthetic export echoes counts") {
    auto dir = make_temp_dir("graph_dmdb_scale");
    std::vector<std::string> nodes, edges;
    const int n = 5128;
    for (int i = 0; i < n; ++i)
        nodes.push_back(R"({"id":"n)" + std::to_string(i) + R"(","type":"T","label":"","description":""})");
    // a long cycle plus chords: exactly 10064 distinct edges
    for (int i = 0; i < n; ++i)
        edges.push_back(R"({"source":"n)" + std::to_string(i) + R"(","relation":"next","target":"n)" +
                        std::to_string((i + 1) % n) + R"("})");
    for (int i = 0; i < 10064 - n; ++i)
        edges.push_back(R"({"source":"n)" + std::to_string(i) + R"(","relation":"chord","target":"n)" +
                        std::to_string((i + 2) % n) + R"("})");
    write_lines(dir / "nodes.jsonl", nodes);
    write_lines(dir / "edges.jsonl", edges);
    KnowledgeGraph g = load_graph(dir);
    CHECK(g.node_count() == 5128);
    CHECK(g.edge_count() == 10064);
}

TEST_CASE("load_graph: error paths") {
    auto dir = make_temp_dir("graph_errors");
    SUBCASE("dangling endpoint names the id") {
        write_lines(dir / "nodes.jsonl", {R"({"id":"a","type":"Drug"})"});
        write_lines(dir / "edges.jsonl", {R"({"source":"a","relation":"r","target":"ghost"})"});
        CHECK_THROWS_WITH_AS(load_graph(dir), doctest::Contains("ghost"), std::runtime_error);
    }
    SUBCASE("malformed line reports the line number") {
        write_lines(dir / "nodes.jsonl", {R"({"id":"a","type":"Drug"})", "{not json"});
        write_lines(dir / "edges.jsonl", {});
        CHECK_THROWS_WITH_AS(load_graph(dir), doctest::Contains(":2:"), std::runtime_error);
    }
    SUBCASE("duplicate node id") {
        write_lines(dir / "nodes.jsonl", {R"({"id":"a","type":"Drug"})", R"({"id":"a","type":"Drug"})"});
        write_lines(dir / "edges.jsonl", {});
        CHECK_THROWS_WITH_AS(load_graph(dir), doctest::Contains("duplicate node id"),
                             std::runtime_error);
    }
    SUBCASE("empty node type") {
        write_lines(dir / "nodes.jsonl", {R"({"id":"a","type":""})"});
        write_lines(dir / "edges.jsonl", {});
        CHECK_THROWS_AS(load_graph(dir), std::runtime_error);
    }
}

TEST_CASE("add_edge: self-loops rejected, exact duplicates dropped, relations kept") {
    KnowledgeGraph g;
    g.add_node(Node{"a", "T", "", ""});
    g.add_node(Node{"b", "T", "", ""});
    CHECK_THROWS_AS(g.add_edge(Edge{"a", "r", "a"}), std::runtime_error);
    g.add_edge(Edge{"a", "r", "b"});
    g.add_edge(Edge{"a", "r", "b"}); // duplicate triple dropped
    g.add_edge(Edge{"a", "r2", "b"}); // distinct relation kept
    CHECK(g.edge_count() == 2);
    CHECK(g.out_edges("a").size() == 2);
}

TEST_CASE("out_edges: sink node and load order") {
    KnowledgeGraph g;
    for (const char* id : {"a", "b", "c", "d"}) g.add_node(Node{id, "T", "", ""});
    g.add_edge(Edge{"a", "r3", "d"});
    g.add_edge(Edge{"a", "r1", "b"});
    g.add_edge(Edge{"a", "r2", "c"});
    CHECK(g.out_edges("d").empty());
    const auto& out = g.out_edges("a");
    REQUIRE(out.size() == 3);
    CHECK(out[0].target == "d");
    CHECK(out[1].target == "b");
    CHECK(out[2].target == "c");
    CHECK_THROWS_AS(g.out_edges("ghost"), std::runtime_error);
}

TEST_CASE("out_edges equals the brute-force scan of the edge multiset") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        KnowledgeGraph g = random_graph(rng, 30, 120);
        for (const Node& node : g.nodes()) {
            std::vector<std::pair<std::string, std::string>> expected;
            for (const Edge& e : g.edges())
                if (e.source == node.id) expected.push_back({e.relation, e.target});
            const auto& actual = g.out_edges(node.id);
            REQUIRE(actual.size() == expected.size());
            for (std::size_t i = 0; i < actual.size(); ++i) {
                CHECK(actual[i].relation == expected[i].first);
                CHECK(actual[i].target == expected[i].second);
            }
        }
    }
}

TEST_CASE("out_edges over all nodes partitions the edge multiset") {
    Rng rng(202);
    KnowledgeGraph g = random_graph(rng, 25, 100);
    std::multiset<std::string> from_edges, from_adjacency;
    for (const Edge& e : g.edges()) from_edges.insert(e.source + "|" + e.relation + "|" + e.target);
    for (const Node& node : g.nodes())
        for (const OutEdge& out : g.out_edges(node.id))
            from_adjacency.insert(node.id + "|" + out.relation + "|" + out.target);
    CHECK(from_edges == from_adjacency);
}

TEST_CASE("save/load round-trip preserves node and edge multisets") {
    Rng rng(303);
    KnowledgeGraph g = random_graph(rng, 20, 60);
    auto dir = make_temp_dir("graph_roundtrip");
    save_graph(g, dir);
    KnowledgeGraph reloaded = load_graph(dir);
    REQUIRE(reloaded.node_count() == g.node_count());
    REQUIRE(reloaded.edge_count() == g.edge_count());
    for (std::size_t i = 0; i < g.node_count(); ++i)
        CHECK(reloaded.nodes()[i].id == g.nodes()[i].id);
    for (std::size_t i = 0; i < g.edge_count(); ++i) CHECK(reloaded.edges()[i] == g.edges()[i]);
    CHECK(reloaded.content_hash() == g.content_hash());
}

TEST_CASE("serialize_subgraph: determinism and permutation invariance") {
    KnowledgeGraph g;
    g.add_node(Node{"a", "Drug", "first", "desc-a"});
    g.add_node(Node{"b", "Protein", "middle", ""});
    g.add_node(Node{"c", "Disease", "last", ""});
    g.add_edge(Edge{"a", "binds", "b"});
    g.add_edge(Edge{"b", "causes", "c"});
    Subgraph sg = build_subgraph(g, {{Edge{"a", "binds", "b"}, Edge{"b", "causes", "c"}}}, "a", "c");

    const std::string s0 = serialize_subgraph(sg, 0);
    CHECK(serialize_subgraph(sg, 0) == s0); // byte-identical under the same seed

    const std::string s1 = serialize_subgraph(sg, 1);
    auto sorted_lines = [](const std::string& text) {
        std::vector<std::string> lines;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        std::sort(lines.begin(), lines.end());
        return lines;
    };
    CHECK(sorted_lines(s0) == sorted_lines(s1)); // same content, possibly different order

    // 3-node chain: exactly 3 node records + 2 edge records
    int node_lines = 0, edge_lines = 0;
    for (const std::string& line : sorted_lines(s0)) {
        if (line.find(" -[") != std::string::npos)
            ++edge_lines;
        else
            ++node_lines;
    }
    CHECK(node_lines == 3);
    CHECK(edge_lines == 2);
}

TEST_CASE("build_subgraph: union semantics") {
    KnowledgeGraph g;
    for (const char* id : {"d", "a", "b", "z", "c"}) g.add_node(Node{id, "T", "", ""});
    g.add_edge(Edge{"d", "r", "a"});
    g.add_edge(Edge{"a", "r", "z"});
    g.add_edge(Edge{"d", "r", "b"});
    g.add_edge(Edge{"b", "r", "z"});

    SUBCASE("empty path list gives the empty subgraph") {
        Subgraph sg = build_subgraph(g, {}, "d", "z");
        CHECK(sg.nodes.empty());
        CHECK(sg.edges.empty());
    }
    SUBCASE("shared prefix edges appear once") {
        PathEdges p1{Edge{"d", "r", "a"}, Edge{"a", "r", "z"}};
        PathEdges p2{Edge{"d", "r", "a"}, Edge{"a", "r", "z"}};
        Subgraph sg = build_subgraph(g, {p1, p2}, "d", "z");
        CHECK(sg.edges.size() == 2);
        CHECK(sg.nodes.size() == 3);
        CHECK(sg.provenance.size() == 2);
    }
    SUBCASE("subgraph contains exactly the union of path edges") {
        Rng rng(404);
        KnowledgeGraph rg = random_graph(rng, 15, 60);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<PathEdges> paths;
            for (int p = 0; p < 3; ++p) {
                PathEdges path;
                std::string u = "n" + std::to_string(uniform_index(rng, 15));
                std::set<std::string> seen{u};
                for (int step = 0; step < 4; ++step) {
                    const auto& out = rg.out_edges(u);
                    if (out.empty()) break;
                    const OutEdge& e = out[uniform_index(rng, out.size())];
                    if (seen.count(e.target)) break;
                    path.push_back(Edge{u, e.relation, e.target});
                    seen.insert(e.target);
                    u = e.target;
                }
                if (!path.empty()) paths.push_back(path);
            }
            Subgraph sg = build_subgraph(rg, paths, "", "");
            std::set<std::string> expected_edges, actual_edges, expected_nodes, actual_nodes;
            for (const auto& path : paths)
                for (const Edge& e : path) {
                    expected_edges.insert(e.source + "|" + e.relation + "|" + e.target);
                    expected_nodes.insert(e.source);
                    expected_nodes.insert(e.target);
                }
            for (const Edge& e : sg.edges) actual_edges.insert(e.source + "|" + e.relation + "|" + e.target);
            for (const Node& n : sg.nodes) actual_nodes.insert(n.id);
            CHECK(expected_edges == actual_edges);
            CHECK(expected_nodes == actual_nodes);
        }
    }
}

TEST_CASE("subgraph json round-trip") {
    KnowledgeGraph g;
    g.add_node(Node{"a", "Drug", "A", "d"});
    g.add_node(Node{"b", "Disease", "B", ""});
    g.add_edge(Edge{"a", "treats", "b"});
    Subgraph sg = build_subgraph(g, {{Edge{"a", "treats", "b"}}}, "a", "b");
    Subgraph back = Subgraph::from_json(sg.to_json());
    CHECK(back.drug == "a");
    CHECK(back.disease == "b");
    REQUIRE(back.nodes.size() == 2);
    CHECK(back.nodes[0].label == "A");
    REQUIRE(back.edges.size() == 1);
    CHECK(back.edges[0] == sg.edges[0]);
    REQUIRE(back.provenance.size() == 1);
}
