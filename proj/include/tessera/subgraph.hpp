#pragma once
// Explanation subgraphs: the edge union of admitted root->target paths,
// self-contained (node attributes copied out of the substrate) so evaluation
// and judging can run without the substrate loaded.

#include "tessera/graph.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tessera {

using PathEdges = std::vector<Edge>;

struct Subgraph {
    std::vector<Node> nodes;            // unique ids, first-seen order
    std::vector<Edge> edges;            // unique (source, relation, target), first-seen order
    std::vector<PathEdges> provenance;  // source paths; empty for file-loaded graphs
    std::string drug;                   // endpoint node ids (may be empty for
    std::string disease;                // generic graphs)

    bool has_node(const std::string& id) const;
    const Node* find_node(const std::string& id) const;
    bool has_edge(const Edge& e) const;

    nlohmann::json to_json() const;
    static Subgraph from_json(const nlohmann::json& j);
    static Subgraph load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;
};

// Edge union of the given paths; nodes are the incident nodes. Node
// attributes come from `graph`; every path edge must exist there.
Subgraph build_subgraph(const KnowledgeGraph& graph, const std::vector<PathEdges>& paths,
                        const std::string& drug, const std::string& disease);

// The full graph viewed as a subgraph (used for curated gold mechanisms
// stored as node/edge files).
Subgraph whole_graph_subgraph(const KnowledgeGraph& graph, const std::string& drug,
                              const std::string& disease);

// Renders node lines ("id | type | label | description") followed by edge
// lines ("source -[relation]-> target"). The seed permutes line order within
// each section only; content is seed-invariant.
std::string serialize_subgraph(const Subgraph& sg, std::uint64_t permutation_seed);

} // namespace tessera
