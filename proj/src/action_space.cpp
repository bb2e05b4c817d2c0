#include "tessera/action_space.hpp"

#include <algorithm>
#include <cmath>

namespace tessera {

ActionSet legal_actions(const SearchState& state, const KnowledgeGraph& graph,
                        const PprVector& ppr, const ActionSpaceConfig& cfg) {
    const auto visited = state.visited_nodes();

    struct Candidate {
        Action action;
        double score;
    };
    std::vector<Candidate> candidates;
    for (const OutEdge& e : graph.out_edges(state.current)) {
        if (visited.count(e.target) > 0) continue; // revisit ban
        candidates.push_back({Action{e.relation, e.target}, ppr.score(e.target)});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.action.target != b.action.target) return a.action.target < b.action.target;
        return a.action.relation < b.action.relation;
    });

    ActionSet result;
    const std::size_t base_size = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(cfg.k));
    for (std::size_t i = 0; i < base_size; ++i) result.base.push_back(candidates[i].action);

    if (base_size == 0) return result;

    auto is_key_type = [&](const Action& a) {
        return cfg.key_types.count(graph.node(a.target).type) > 0;
    };
    const int quota = static_cast<int>(std::ceil(cfg.lambda * static_cast<double>(base_size)));
    int key_count = 0;
    for (const Action& a : result.base)
        if (is_key_type(a)) ++key_count;

    int injections = 0;
    for (std::size_t i = base_size; i < candidates.size(); ++i) {
        if (key_count >= quota || injections >= cfg.tau) break;
        if (!is_key_type(candidates[i].action)) continue;
        result.injected.push_back(candidates[i].action);
        ++key_count;
        ++injections;
    }
    return result;
}

} // namespace tessera
