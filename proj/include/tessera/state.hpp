#pragma once
// Search states are path-dependent: (current node, ordered traversal
// history, fixed target). Reaching the same graph node via different
// histories yields distinct states.

#include "tessera/graph.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace tessera {

struct SearchState {
    std::string current;
    std::vector<Edge> history; // connected path root -> current
    std::string target;

    int depth() const { return static_cast<int>(history.size()); }

    // V(H): every node appearing along the history. Empty at the root.
    std::unordered_set<std::string> visited_nodes() const {
        std::unordered_set<std::string> nodes;
        for (const Edge& e : history) {
            nodes.insert(e.source);
            nodes.insert(e.target);
        }
        return nodes;
    }

    // Canonical text form: root, ordered history triples, target. Two states
    // fingerprint equal iff they are the same search state.
    std::string fingerprint() const {
        std::string fp = history.empty() ? current : history.front().source;
        for (const Edge& e : history) {
            fp += '\x1e';
            fp += e.source;
            fp += '\x1f';
            fp += e.relation;
            fp += '\x1f';
            fp += e.target;
        }
        fp += '\x1d';
        fp += target;
        return fp;
    }
};

} // namespace tessera
