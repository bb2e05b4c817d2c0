#pragma once
// MCTS core: depth/visit-adaptive PUCT selection, terminal handling with
// edge closure, unconditional expansion, and explanation-set accumulation.
// The tree is single-writer; simulations run sequentially.

#include "tessera/action_space.hpp"
#include "tessera/evaluator.hpp"
#include "tessera/prior_policy.hpp"
#include "tessera/state.hpp"
#include "tessera/subgraph.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tessera {

struct EdgeStats {
    int visits = 0;          // N
    double total_value = 0;  // W
    double mean_value = 0;   // Q = W/N (0 while N = 0)
    double prior = 0;        // P
    bool closed = false;
};

struct SearchConfig {
    int budget = 200; // simulations T
    double c0 = 2.0;  // exploration coefficient delta(d) * phi(N) parameters
    double alpha = 0.5;
    double beta = 1.0;
    double K = 10.0;
    int depth_cap = 10;            // cap hit is treated as a dead end
    double value_floor = 0.0;      // value backpropagated on closure events
    std::uint64_t max_evaluator_calls = 0; // optional guard; 0 = unlimited
    std::uint64_t seed = 0;
};

enum class Disposition { interior, target, dead_end };

struct ExplanationSet {
    std::vector<PathEdges> paths; // admission order

    bool contains(const PathEdges& path) const;
};

class SearchTree {
public:
    struct NodeRecord {
        std::string current;
        int depth = 0;
        int parent = -1;
        std::string relation_in; // relation on the incoming edge
        EdgeStats stats;         // incoming-edge statistics (meaningless for the root)
        bool expanded = false;
        bool terminal = false;
        Disposition disposition = Disposition::interior;
        std::vector<int> children;
    };

    SearchTree(std::string root_node, std::string target);

    int root() const { return 0; }
    std::size_t size() const { return nodes_.size(); }
    const NodeRecord& at(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
    NodeRecord& mutable_at(int index) { return nodes_[static_cast<std::size_t>(index)]; }
    const std::string& target() const { return target_; }

    // Reconstructs (u, H, z) by walking the parent chain.
    SearchState state_of(int index) const;

    int add_child(int parent, const Action& action, double prior);

    nlohmann::json stats_json() const;

private:
    std::vector<NodeRecord> nodes_;
    std::string target_;
};

// delta(d) * phi(N) = c0 / (1 + alpha * d) * (1 + beta * exp(-N / K)).
double exploration_coefficient(int depth, long parent_visits, const SearchConfig& cfg);

// Argmax of Q + U over non-closed children, U = coeff * P * sqrt(sum_b N) /
// (1 + N). Ties break toward the higher prior, then earlier action order.
// Returns nothing when every child edge is closed.
std::optional<int> select_action(const SearchTree& tree, int node_index, const SearchConfig& cfg);

// Increments N, adds v to W, refreshes Q along the trajectory (child node
// indices from the root's child down to the leaf).
void backpropagate(SearchTree& tree, const std::vector<int>& path, double value);

// Materialises every successor with N = W = Q = 0 and the given priors.
// Validates first and only then mutates, so a failure leaves the leaf
// unexpanded. Re-expansion is a precondition violation.
void expand(SearchTree& tree, int leaf, const ActionSet& actions, const PriorDistribution& priors);

class LeafEvaluator {
public:
    virtual ~LeafEvaluator() = default;
    virtual double evaluate(const SearchTree& tree, int leaf, const ExplanationSet& explanations) = 0;
    virtual std::string name() const = 0;
};

struct LeafOutcome {
    double value = 0.0;
    Disposition disposition = Disposition::interior;
};

// Terminal handling per the evaluation phase: target leaves admit their
// history and close the incoming edge; dead ends (no legal actions, or the
// depth cap) close it too; interior leaves are scored by the evaluator.
LeafOutcome evaluate_leaf(SearchTree& tree, int leaf, const ActionSet& actions,
                          LeafEvaluator& evaluator, ExplanationSet& explanations,
                          const SearchConfig& cfg);

struct SearchComponents {
    const KnowledgeGraph* graph = nullptr;
    const PprVector* ppr = nullptr;
    ActionSpaceConfig action_cfg;
    PriorProvider* prior = nullptr;
    LeafEvaluator* evaluator = nullptr;
    // Optional ledgers for the call guard and per-simulation accounting.
    const CallLedger* prior_ledger = nullptr;
    const CallLedger* eval_ledger = nullptr;
};

struct SimulationRecord {
    int sim = 0;
    std::string disposition; // root_expand | target | dead_end | interior |
                             // closed_subtree | root_exhausted | call_guard
    int leaf_depth = 0;
    double value = 0.0;
    int n_actions = -1; // legal actions at the expanded leaf (-1: none computed)
    bool admitted = false;

    nlohmann::json to_json() const;
};

struct SearchResult {
    ExplanationSet explanations;
    SearchTree tree;
    std::vector<SimulationRecord> log;
    bool root_dead_end = false;
    bool call_guard_tripped = false;
    int expansions = 0;
    std::vector<int> expansion_action_counts;

    nlohmann::json explanations_json() const;
};

// Runs exactly cfg.budget simulations (early stop only on a root dead end or
// the evaluator-call guard). Deterministic given deterministic components.
SearchResult run_search(const KnowledgeGraph& graph, const std::string& drug,
                        const std::string& disease, const SearchConfig& cfg,
                        const SearchComponents& components);

// Edge union of the admitted paths.
Subgraph build_explanation_subgraph(const KnowledgeGraph& graph, const ExplanationSet& explanations,
                                    const std::string& drug, const std::string& disease);

} // namespace tessera
