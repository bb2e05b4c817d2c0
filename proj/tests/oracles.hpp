#pragma once
// Test-only oracles, independent of the library implementations they check:
// dense power iteration for PPR, Floyd-Warshall reachability, and random
// graph generators.

#include "tessera/graph.hpp"
#include "tessera/util.hpp"

#include <set>
#include <string>
#include <vector>

namespace tessera::oracles {

// Dense power iteration over the explicit column-stochastic transition
// matrix (multi-edges counted per adjacency entry; dangling mass to the
// target). Runs a fixed large iteration count.
inline std::vector<double> dense_ppr(const KnowledgeGraph& graph, const std::string& z,
                                     double damping, int iterations = 20000) {
    const std::size_t n = graph.node_count();
    const std::size_t zi = graph.index_of(z);
    // matrix[v][u]: probability of stepping u -> v
    std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 0.0));
    for (std::size_t u = 0; u < n; ++u) {
        const auto& out = graph.out_edges_at(u);
        if (out.empty()) {
            matrix[zi][u] += 1.0;
            continue;
        }
        const double share = 1.0 / static_cast<double>(out.size());
        for (const OutEdge& e : out) matrix[e.target_index][u] += share;
    }
    std::vector<double> x(n, 0.0);
    x[zi] = 1.0;
    std::vector<double> next(n, 0.0);
    for (int it = 0; it < iterations; ++it) {
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double acc = 0.0;
            for (std::size_t u = 0; u < n; ++u) acc += matrix[v][u] * x[u];
            next[v] = damping * acc + (v == zi ? 1.0 - damping : 0.0);
        }
        for (std::size_t v = 0; v < n; ++v) delta += std::abs(next[v] - x[v]);
        x.swap(next);
        if (delta < 1e-16) break;
    }
    return x;
}

inline KnowledgeGraph random_digraph(Rng& rng, int n_nodes, double edge_prob,
                                     bool force_dangling = false) {
    KnowledgeGraph g;
    for (int i = 0; i < n_nodes; ++i)
        g.add_node(Node{"n" + std::to_string(i), "Thing", "", ""});
    for (int a = 0; a < n_nodes; ++a) {
        if (force_dangling && a % 7 == 3) continue; // leave some nodes without out-edges
        for (int b = 0; b < n_nodes; ++b) {
            if (a == b) continue;
            if (uniform_real(rng) < edge_prob)
                g.add_edge(Edge{"n" + std::to_string(a), "r", "n" + std::to_string(b)});
        }
    }
    return g;
}

// reach[a][b] = true iff a directed path a -> b (length >= 1) exists
inline std::vector<std::vector<bool>> floyd_warshall_reach(int n,
                                                           const std::set<std::pair<int, int>>& edges) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (const auto& [a, b] : edges) reach[a][b] = true;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    return reach;
}

} // namespace tessera::oracles
