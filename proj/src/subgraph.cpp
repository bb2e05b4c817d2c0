#include "tessera/subgraph.hpp"

#include "tessera/util.hpp"

#include <algorithm>
#include <unordered_set>

namespace tessera {

namespace {

std::string edge_key(const Edge& e) {
    return e.source + '\x1f' + e.relation + '\x1f' + e.target;
}

} // namespace

bool Subgraph::has_node(const std::string& id) const { return find_node(id) != nullptr; }

const Node* Subgraph::find_node(const std::string& id) const {
    for (const Node& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

bool Subgraph::has_edge(const Edge& e) const {
    return std::find(edges.begin(), edges.end(), e) != edges.end();
}

nlohmann::json Subgraph::to_json() const {
    nlohmann::json j;
    j["drug"] = drug;
    j["disease"] = disease;
    j["nodes"] = nlohmann::json::array();
    for (const Node& n : nodes)
        j["nodes"].push_back({{"id", n.id}, {"type", n.type}, {"label", n.label}, {"description", n.description}});
    j["edges"] = nlohmann::json::array();
    for (const Edge& e : edges)
        j["edges"].push_back({{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
    j["provenance"] = nlohmann::json::array();
    for (const PathEdges& path : provenance) {
        nlohmann::json jp = nlohmann::json::array();
        for (const Edge& e : path)
            jp.push_back({{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
        j["provenance"].push_back(std::move(jp));
    }
    return j;
}

Subgraph Subgraph::from_json(const nlohmann::json& j) {
    Subgraph sg;
    sg.drug = j.value("drug", std::string{});
    sg.disease = j.value("disease", std::string{});
    for (const auto& jn : j.at("nodes"))
        sg.nodes.push_back(Node{jn.at("id").get<std::string>(), jn.value("type", std::string{}),
                                jn.value("label", std::string{}), jn.value("description", std::string{})});
    for (const auto& je : j.at("edges"))
        sg.edges.push_back(Edge{je.at("source").get<std::string>(), je.at("relation").get<std::string>(),
                                je.at("target").get<std::string>()});
    if (j.contains("provenance")) {
        for (const auto& jp : j.at("provenance")) {
            PathEdges path;
            for (const auto& je : jp)
                path.push_back(Edge{je.at("source").get<std::string>(), je.at("relation").get<std::string>(),
                                    je.at("target").get<std::string>()});
            sg.provenance.push_back(std::move(path));
        }
    }
    return sg;
}

Subgraph Subgraph::load(const std::filesystem::path& file) {
    return from_json(nlohmann::json::parse(read_text_file(file)));
}

void Subgraph::save(const std::filesystem::path& file) const {
    write_text_file_atomic(file, to_json().dump(1) + "\n");
}

Subgraph build_subgraph(const KnowledgeGraph& graph, const std::vector<PathEdges>& paths,
                        const std::string& drug, const std::string& disease) {
    Subgraph sg;
    sg.drug = drug;
    sg.disease = disease;
    sg.provenance = paths;
    std::unordered_set<std::string> seen_nodes;
    std::unordered_set<std::string> seen_edges;
    auto add_node = [&](const std::string& id) {
        if (seen_nodes.insert(id).second) sg.nodes.push_back(graph.node(id));
    };
    for (const PathEdges& path : paths) {
        for (const Edge& e : path) {
            add_node(e.source);
            add_node(e.target);
            if (seen_edges.insert(edge_key(e)).second) sg.edges.push_back(e);
        }
    }
    return sg;
}

Subgraph whole_graph_subgraph(const KnowledgeGraph& graph, const std::string& drug,
                              const std::string& disease) {
    Subgraph sg;
    sg.drug = drug;
    sg.disease = disease;
    sg.nodes = graph.nodes();
    sg.edges = graph.edges();
    return sg;
}

std::string serialize_subgraph(const Subgraph& sg, std::uint64_t permutation_seed) {
    std::vector<std::string> node_lines;
    node_lines.reserve(sg.nodes.size());
    for (const Node& n : sg.nodes)
        node_lines.push_back(n.id + " | " + n.type + " | " + n.label + " | " + n.description);
    std::vector<std::string> edge_lines;
    edge_lines.reserve(sg.edges.size());
    for (const Edge& e : sg.edges)
        edge_lines.push_back(e.source + " -[" + e.relation + "]-> " + e.target);

    Rng rng(permutation_seed);
    seeded_shuffle(node_lines, rng);
    seeded_shuffle(edge_lines, rng);

    std::string out;
    for (const std::string& line : node_lines) {
        out += line;
        out += '\n';
    }
    for (const std::string& line : edge_lines) {
        out += line;
        out += '\n';
    }
    return out;
}

} // namespace tessera
