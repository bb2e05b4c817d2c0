#pragma once
// Legal action generation: top-k PPR-ranked unvisited neighbours, augmented
// with type-quota injections from the ranked tail.

#include "tessera/graph.hpp"
#include "tessera/ppr.hpp"
#include "tessera/state.hpp"

#include <set>
#include <string>
#include <vector>

namespace tessera {

struct Action {
    std::string relation;
    std::string target;

    bool operator==(const Action& other) const = default;
};

struct ActionSpaceConfig {
    int k = 20;                       // top-k cap
    double lambda = 0.3;              // type quota, in (0,1]
    int tau = 5;                      // augmentation budget
    std::set<std::string> key_types;  // designated type set
};

struct ActionSet {
    std::vector<Action> base;     // the PPR top-k slice, rank order
    std::vector<Action> injected; // quota injections, tail-rank order

    std::vector<Action> all() const {
        std::vector<Action> out = base;
        out.insert(out.end(), injected.begin(), injected.end());
        return out;
    }
    std::size_t size() const { return base.size() + injected.size(); }
    bool empty() const { return base.empty() && injected.empty(); }
};

// Stage 1: out-edges of the current node with unvisited targets, sorted by
// PPR score descending (ties: target id, then relation, ascending); the
// first min(k, available) become the base. Stage 2: if fewer than
// ceil(lambda * |base|) base targets have a key type, inject key-typed tail
// candidates in rank order until the quota is met, tau injections are made,
// or the tail runs out. A dead end yields an empty set.
ActionSet legal_actions(const SearchState& state, const KnowledgeGraph& graph,
                        const PprVector& ppr, const ActionSpaceConfig& cfg);

} // namespace tessera
