#include "tessera/graph.hpp"

#include "tessera/util.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tessera {

namespace {

std::string edge_key(const Edge& e) {
    std::string key;
    key.reserve(e.source.size() + e.relation.size() + e.target.size() + 2);
    key += e.source;
    key += '\x1f';
    key += e.relation;
    key += '\x1f';
    key += e.target;
    return key;
}

} // namespace

void KnowledgeGraph::add_node(Node node) {
    if (node.type.empty())
        throw std::runtime_error("node '" + node.id + "': empty node type");
    if (index_.count(node.id) > 0)
        throw std::runtime_error("duplicate node id: " + node.id);
    index_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
    out_.emplace_back();
}

void KnowledgeGraph::add_edge(Edge edge) {
    auto src = index_.find(edge.source);
    if (src == index_.end())
        throw std::runtime_error("edge references unknown node id: " + edge.source);
    auto dst = index_.find(edge.target);
    if (dst == index_.end())
        throw std::runtime_error("edge references unknown node id: " + edge.target);
    if (edge.source == edge.target)
        throw std::runtime_error("self-loop rejected: " + edge.source);
    std::string key = edge_key(edge);
    if (!edge_keys_.insert(std::move(key)).second) return; // exact duplicate
    out_[src->second].push_back(OutEdge{edge.relation, edge.target, dst->second});
    edges_.push_back(std::move(edge));
}

std::size_t KnowledgeGraph::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::runtime_error("unknown node id: " + id);
    return it->second;
}

const std::vector<OutEdge>& KnowledgeGraph::out_edges(const std::string& u) const {
    return out_[index_of(u)];
}

std::uint64_t KnowledgeGraph::content_hash() const {
    std::uint64_t h = fnv1a64("kg/v1");
    for (const Node& n : nodes_) {
        h = fnv1a64(n.id, h);
        h = fnv1a64(n.type, h);
        h = fnv1a64(n.label, h);
        h = fnv1a64(n.description, h);
    }
    for (const Edge& e : edges_) {
        h = fnv1a64(e.source, h);
        h = fnv1a64(e.relation, h);
        h = fnv1a64(e.target, h);
    }
    return h;
}

std::string KnowledgeGraph::content_hash_hex() const { return hex64(content_hash()); }

namespace {

using nlohmann::json;

std::string require_string(const json& record, const char* field,
                           const std::filesystem::path& file, std::size_t line_no) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) {
        std::ostringstream msg;
        msg << file.string() << ":" << line_no << ": missing or non-string field '" << field << "'";
        throw std::runtime_error(msg.str());
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_record(const std::filesystem::path& file, Fn&& fn) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open file: " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& err) {
            std::ostringstream msg;
            msg << file.string() << ":" << line_no << ": malformed JSON line (" << err.what() << ")";
            throw std::runtime_error(msg.str());
        }
        fn(record, line_no);
    }
}

} // namespace

KnowledgeGraph load_graph(const std::filesystem::path& dir, GraphFormat format) {
    if (format != GraphFormat::node_edge_jsonl)
        throw std::runtime_error("unsupported graph format");
    KnowledgeGraph graph;
    const auto nodes_file = dir / "nodes.jsonl";
    const auto edges_file = dir / "edges.jsonl";
    for_each_record(nodes_file, [&](const json& record, std::size_t line_no) {
        Node node;
        node.id = require_string(record, "id", nodes_file, line_no);
        node.type = require_string(record, "type", nodes_file, line_no);
        node.label = record.value("label", std::string{});
        node.description = record.value("description", std::string{});
        graph.add_node(std::move(node));
    });
    for_each_record(edges_file, [&](const json& record, std::size_t line_no) {
        Edge edge;
        edge.source = require_string(record, "source", edges_file, line_no);
        edge.relation = require_string(record, "relation", edges_file, line_no);
        edge.target = require_string(record, "target", edges_file, line_no);
        graph.add_edge(std::move(edge));
    });
    return graph;
}

void save_graph(const KnowledgeGraph& graph, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string nodes_text;
    for (const Node& n : graph.nodes()) {
        json record{{"id", n.id}, {"type", n.type}, {"label", n.label}, {"description", n.description}};
        nodes_text += record.dump();
        nodes_text += '\n';
    }
    std::string edges_text;
    for (const Edge& e : graph.edges()) {
        json record{{"source", e.source}, {"relation", e.relation}, {"target", e.target}};
        edges_text += record.dump();
        edges_text += '\n';
    }
    write_text_file_atomic(dir / "nodes.jsonl", nodes_text);
    write_text_file_atomic(dir / "edges.jsonl", edges_text);
}

} // namespace tessera
