#include "tessera/search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace tessera {

using nlohmann::json;

bool ExplanationSet::contains(const PathEdges& path) const {
    return std::find(paths.begin(), paths.end(), path) != paths.end();
}

SearchTree::SearchTree(std::string root_node, std::string target) : target_(std::move(target)) {
    NodeRecord root;
    root.current = std::move(root_node);
    nodes_.push_back(std::move(root));
}

SearchState SearchTree::state_of(int index) const {
    SearchState state;
    state.target = target_;
    state.current = nodes_[index].current;
    std::vector<Edge> reversed;
    for (int i = index; nodes_[i].parent >= 0; i = nodes_[i].parent) {
        const NodeRecord& n = nodes_[i];
        reversed.push_back(Edge{nodes_[n.parent].current, n.relation_in, n.current});
    }
    state.history.assign(reversed.rbegin(), reversed.rend());
    return state;
}

int SearchTree::add_child(int parent, const Action& action, double prior) {
    NodeRecord child;
    child.current = action.target;
    child.depth = nodes_[parent].depth + 1;
    child.parent = parent;
    child.relation_in = action.relation;
    child.stats.prior = prior;
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(child));
    nodes_[parent].children.push_back(index);
    return index;
}

json SearchTree::stats_json() const {
    json edges = json::array();
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const NodeRecord& n = nodes_[i];
        edges.push_back(json{{"node", i},
                             {"parent", n.parent},
                             {"source", nodes_[n.parent].current},
                             {"relation", n.relation_in},
                             {"target", n.current},
                             {"depth", n.depth},
                             {"N", n.stats.visits},
                             {"W", n.stats.total_value},
                             {"Q", n.stats.mean_value},
                             {"P", n.stats.prior},
                             {"closed", n.stats.closed},
                             {"expanded", n.expanded}});
    }
    return json{{"root", nodes_[0].current}, {"target", target_}, {"edges", std::move(edges)}};
}

double exploration_coefficient(int depth, long parent_visits, const SearchConfig& cfg) {
    const double delta = cfg.c0 / (1.0 + cfg.alpha * static_cast<double>(depth));
    const double phi = 1.0 + cfg.beta * std::exp(-static_cast<double>(parent_visits) / cfg.K);
    return delta * phi;
}

std::optional<int> select_action(const SearchTree& tree, int node_index, const SearchConfig& cfg) {
    const auto& node = tree.at(node_index);
    long total_visits = 0;
    for (int child : node.children) total_visits += tree.at(child).stats.visits;
    const double coeff = exploration_coefficient(node.depth, total_visits, cfg);
    const double sqrt_total = std::sqrt(static_cast<double>(total_visits));

    std::optional<int> best;
    double best_score = 0.0, best_prior = 0.0;
    for (int child : node.children) {
        const EdgeStats& stats = tree.at(child).stats;
        if (stats.closed) continue;
        const double u = coeff * stats.prior * sqrt_total / (1.0 + stats.visits);
        const double score = stats.mean_value + u;
        if (!best || score > best_score ||
            (score == best_score && stats.prior > best_prior)) {
            best = child;
            best_score = score;
            best_prior = stats.prior;
        }
    }
    return best;
}

void backpropagate(SearchTree& tree, const std::vector<int>& path, double value) {
    for (int child : path) {
        EdgeStats& stats = tree.mutable_at(child).stats;
        stats.visits += 1;
        stats.total_value += value;
        stats.mean_value = stats.total_value / stats.visits;
    }
}

void expand(SearchTree& tree, int leaf, const ActionSet& actions, const PriorDistribution& priors) {
    const auto& node = tree.at(leaf);
    if (node.expanded) throw std::logic_error("expand: node already expanded");
    if (node.terminal) throw std::logic_error("expand: node is terminal");
    const std::vector<Action> all = actions.all();
    if (priors.entries.size() != all.size())
        throw std::invalid_argument("expand: prior distribution does not cover the action set");
    double sum = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!(priors.entries[i].action == all[i]))
            throw std::invalid_argument("expand: prior entries misaligned with the action set");
        sum += priors.entries[i].probability;
    }
    if (!all.empty() && std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("expand: sibling priors must sum to 1");

    for (std::size_t i = 0; i < all.size(); ++i)
        tree.add_child(leaf, all[i], priors.entries[i].probability);
    tree.mutable_at(leaf).expanded = true;
}

namespace {

void close_incoming(SearchTree& tree, int node, Disposition disposition, bool terminal) {
    auto& record = tree.mutable_at(node);
    record.disposition = disposition;
    if (terminal) record.terminal = true;
    if (record.parent >= 0) record.stats.closed = true;
}

void admit_path(ExplanationSet& explanations, const SearchTree& tree, int leaf) {
    SearchState state = tree.state_of(leaf);
    if (state.current != tree.target())
        throw std::logic_error("admit: path does not end at the target");
    std::unordered_set<std::string> nodes;
    for (const Edge& e : state.history) {
        nodes.insert(e.source);
        nodes.insert(e.target);
    }
    if (nodes.size() != state.history.size() + 1)
        throw std::logic_error("admit: path is not simple");
    if (explanations.contains(state.history))
        throw std::logic_error("admit: duplicate explanation path");
    explanations.paths.push_back(std::move(state.history));
}

} // namespace

LeafOutcome evaluate_leaf(SearchTree& tree, int leaf, const ActionSet& actions,
                          LeafEvaluator& evaluator, ExplanationSet& explanations,
                          const SearchConfig& cfg) {
    const auto& node = tree.at(leaf);
    if (node.current == tree.target()) {
        admit_path(explanations, tree, leaf);
        close_incoming(tree, leaf, Disposition::target, true);
        return {cfg.value_floor, Disposition::target};
    }
    if (actions.empty() || node.depth >= cfg.depth_cap) {
        close_incoming(tree, leaf, Disposition::dead_end, true);
        return {cfg.value_floor, Disposition::dead_end};
    }
    return {evaluator.evaluate(tree, leaf, explanations), Disposition::interior};
}

json SimulationRecord::to_json() const {
    json j{{"sim", sim},
           {"disposition", disposition},
           {"leaf_depth", leaf_depth},
           {"value", value},
           {"admitted", admitted}};
    if (n_actions >= 0) j["n_actions"] = n_actions;
    return j;
}

json SearchResult::explanations_json() const {
    json paths = json::array();
    for (const PathEdges& path : explanations.paths) {
        json jp = json::array();
        for (const Edge& e : path)
            jp.push_back(json{{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
        paths.push_back(std::move(jp));
    }
    return json{{"paths", std::move(paths)}};
}

namespace {

std::uint64_t guarded_call_total(const SearchComponents& components) {
    std::uint64_t total = 0;
    if (components.prior_ledger) total += components.prior_ledger->total();
    if (components.eval_ledger && components.eval_ledger != components.prior_ledger)
        total += components.eval_ledger->total();
    return total;
}

} // namespace

SearchResult run_search(const KnowledgeGraph& graph, const std::string& drug,
                        const std::string& disease, const SearchConfig& cfg,
                        const SearchComponents& components) {
    if (!graph.has_node(drug)) throw std::runtime_error("run_search: unknown drug node " + drug);
    if (!graph.has_node(disease))
        throw std::runtime_error("run_search: unknown disease node " + disease);
    if (drug == disease) throw std::runtime_error("run_search: drug and disease coincide");
    if (!components.graph || !components.ppr || !components.prior || !components.evaluator)
        throw std::invalid_argument("run_search: incomplete components");

    SearchResult result{ExplanationSet{}, SearchTree(drug, disease), {}, false, false, 0, {}};
    SearchTree& tree = result.tree;

    auto legal = [&](const SearchState& state) {
        return legal_actions(state, graph, *components.ppr, components.action_cfg);
    };

    for (int sim = 1; sim <= cfg.budget; ++sim) {
        SimulationRecord record;
        record.sim = sim;

        if (cfg.max_evaluator_calls > 0 && guarded_call_total(components) >= cfg.max_evaluator_calls) {
            result.call_guard_tripped = true;
            record.disposition = "call_guard";
            result.log.push_back(record);
            break;
        }

        // --- selection ---
        int node = tree.root();
        std::vector<int> path;
        bool stuck = false;
        while (tree.at(node).expanded) {
            std::optional<int> child = select_action(tree, node, cfg);
            if (!child) { // every child edge closed
                stuck = true;
                break;
            }
            path.push_back(*child);
            node = *child;
        }

        if (stuck) {
            if (node == tree.root()) {
                record.disposition = "root_exhausted";
                result.log.push_back(record);
                continue;
            }
            // mirror terminal closure: close the incoming edge, charge the
            // simulation, and back up the floor value along the trajectory
            close_incoming(tree, node, Disposition::dead_end, false);
            backpropagate(tree, path, cfg.value_floor);
            record.disposition = "closed_subtree";
            record.leaf_depth = tree.at(node).depth;
            record.value = cfg.value_floor;
            result.log.push_back(record);
            continue;
        }

        const int leaf = node;
        record.leaf_depth = tree.at(leaf).depth;

        // --- root expansion (simulation 1): the root is never evaluated ---
        if (leaf == tree.root()) {
            SearchState state = tree.state_of(leaf);
            ActionSet actions = legal(state);
            record.n_actions = static_cast<int>(actions.size());
            if (actions.empty()) {
                result.root_dead_end = true;
                record.disposition = "root_dead_end";
                result.log.push_back(record);
                break;
            }
            PriorDistribution priors;
            try {
                priors = components.prior->compute(state, actions.all());
            } catch (const std::exception& err) {
                throw std::runtime_error("simulation " + std::to_string(sim) +
                                         ": prior computation failed: " + err.what());
            }
            expand(tree, leaf, actions, priors);
            ++result.expansions;
            result.expansion_action_counts.push_back(static_cast<int>(actions.size()));
            record.disposition = "root_expand";
            result.log.push_back(record);
            continue;
        }

        // --- evaluation ---
        SearchState state = tree.state_of(leaf);
        if (state.current == disease) {
            admit_path(result.explanations, tree, leaf);
            close_incoming(tree, leaf, Disposition::target, true);
            backpropagate(tree, path, cfg.value_floor);
            record.disposition = "target";
            record.value = cfg.value_floor;
            record.admitted = true;
            result.log.push_back(record);
            continue;
        }

        ActionSet actions;
        bool dead_end = state.depth() >= cfg.depth_cap;
        if (!dead_end) {
            actions = legal(state);
            dead_end = actions.empty();
        }
        record.n_actions = dead_end ? 0 : static_cast<int>(actions.size());
        if (dead_end) {
            close_incoming(tree, leaf, Disposition::dead_end, true);
            backpropagate(tree, path, cfg.value_floor);
            record.disposition = "dead_end";
            record.value = cfg.value_floor;
            result.log.push_back(record);
            continue;
        }

        double value = 0.0;
        try {
            value = components.evaluator->evaluate(tree, leaf, result.explanations);
        } catch (const std::exception& err) {
            throw std::runtime_error("simulation " + std::to_string(sim) +
                                     ": state evaluation failed: " + err.what());
        }

        // --- backpropagation ---
        backpropagate(tree, path, value);

        // --- expansion (unconditional for interior leaves) ---
        PriorDistribution priors;
        try {
            priors = components.prior->compute(state, actions.all());
        } catch (const std::exception& err) {
            throw std::runtime_error("simulation " + std::to_string(sim) +
                                     ": prior computation failed: " + err.what());
        }
        expand(tree, leaf, actions, priors);
        ++result.expansions;
        result.expansion_action_counts.push_back(static_cast<int>(actions.size()));

        record.disposition = "interior";
        record.value = value;
        result.log.push_back(record);
    }

    return result;
}

Subgraph build_explanation_subgraph(const KnowledgeGraph& graph, const ExplanationSet& explanations,
                                    const std::string& drug, const std::string& disease) {
    return build_subgraph(graph, explanations.paths, drug, disease);
}

} // namespace tessera
