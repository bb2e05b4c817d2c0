#pragma once
// Knowledge-graph substrate: a directed, typed, multi-relational graph with
// node attributes. Immutable after load; all search/eval components read it
// concurrently without locking.

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tessera {

struct Node {
    std::string id;
    std::string type;
    std::string label;
    std::string description;
};

struct Edge {
    std::string source;
    std::string relation;
    std::string target;

    bool operator==(const Edge& other) const = default;
};

struct OutEdge {
    std::string relation;
    std::string target;
    std::size_t target_index; // dense index of `target` in the owning graph
};

enum class GraphFormat { node_edge_jsonl };

class KnowledgeGraph {
public:
    // Throws on duplicate id or empty type.
    void add_node(Node node);

    // Throws on dangling endpoints and self-loops. An exact duplicate
    // (source, relation, target) triple is dropped; distinct relations
    // between the same endpoints are kept.
    void add_edge(Edge edge);

    bool has_node(const std::string& id) const { return index_.count(id) > 0; }
    std::size_t index_of(const std::string& id) const;
    const Node& node(const std::string& id) const { return nodes_[index_of(id)]; }
    const Node& node_at(std::size_t index) const { return nodes_[index]; }

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    // Out-adjacency of u in load order.
    const std::vector<OutEdge>& out_edges(const std::string& u) const;
    const std::vector<OutEdge>& out_edges_at(std::size_t index) const { return out_[index]; }

    // Content hash over the node/edge records, stable across runs. Used as
    // the substrate component of prior-cache keys.
    std::uint64_t content_hash() const;
    std::string content_hash_hex() const;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<OutEdge>> out_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_set<std::string> edge_keys_;
};

// Loads `nodes.jsonl` + `edges.jsonl` from `dir`. Parse errors report the
// file and line number; graph invariants are enforced during insertion.
KnowledgeGraph load_graph(const std::filesystem::path& dir,
                          GraphFormat format = GraphFormat::node_edge_jsonl);

// Writes `nodes.jsonl` + `edges.jsonl` in insertion order.
void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& dir);

} // namespace tessera
