#include "tessera/state_eval.hpp"

#include "tessera/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tessera {

using nlohmann::json;

PathStatistics path_statistics(const SearchTree& tree, int node, double epsilon) {
    PathStatistics stats;
    for (int i = node; tree.at(i).parent >= 0; i = tree.at(i).parent) {
        const EdgeStats& edge = tree.at(i).stats;
        stats.log_path_prior += std::log(std::max(edge.prior, epsilon));
        stats.cumulative_visits += edge.visits;
    }
    return stats;
}

CompetitorSet select_competitors(const SearchTree& tree, int leaf, const EvalConfig& cfg) {
    CompetitorSet result;
    result.candidate = leaf;
    const int leaf_depth = tree.at(leaf).depth;

    struct PoolEntry {
        int node;
        PathStatistics stats;
    };
    std::vector<PoolEntry> pool;
    for (int i = 1; i < static_cast<int>(tree.size()); ++i) { // 0 is the root
        if (i == leaf) continue;
        const auto& record = tree.at(i);
        if (record.terminal || record.stats.closed) continue; // not active
        if (std::abs(record.depth - leaf_depth) > cfg.depth_window) continue;
        pool.push_back({i, path_statistics(tree, i, cfg.epsilon)});
    }
    std::sort(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
        if (a.stats.log_path_prior != b.stats.log_path_prior)
            return a.stats.log_path_prior > b.stats.log_path_prior;
        if (a.stats.cumulative_visits != b.stats.cumulative_visits)
            return a.stats.cumulative_visits > b.stats.cumulative_visits;
        return a.node < b.node; // creation order
    });
    const std::size_t take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg.competitor_count));
    for (std::size_t i = 0; i < take; ++i) result.competitors.push_back(pool[i].node);
    return result;
}

StateValue rubric_value(const std::map<int, double>& label_logprobs, const std::vector<int>& rubric) {
    if (rubric.size() < 2) throw std::invalid_argument("rubric_value: rubric needs >= 2 labels");
    for (std::size_t i = 1; i < rubric.size(); ++i)
        if (rubric[i] <= rubric[i - 1])
            throw std::invalid_argument("rubric_value: rubric labels must be strictly increasing");
    StateValue out;
    double max_lp = -std::numeric_limits<double>::infinity();
    for (int label : rubric) {
        auto it = label_logprobs.find(label);
        if (it != label_logprobs.end()) {
            out.raw_logprobs[label] = it->second;
            max_lp = std::max(max_lp, it->second);
        }
    }
    if (out.raw_logprobs.empty())
        throw std::runtime_error("rubric_value: response contains no rubric label");

    double total = 0.0;
    for (const auto& [label, lp] : out.raw_logprobs) total += std::exp(lp - max_lp);
    double expected = 0.0;
    for (int label : rubric) {
        auto it = out.raw_logprobs.find(label);
        const double p = it == out.raw_logprobs.end() ? 0.0 : std::exp(it->second - max_lp) / total;
        out.label_distribution[label] = p;
        expected += p * label;
    }
    const int lo = rubric.front();
    const int hi = rubric.back();
    out.value = (2.0 * expected - (hi + lo)) / (hi - lo);
    return out;
}

namespace {

json state_payload_entry(const SearchTree& tree, int node, int index, bool is_candidate) {
    SearchState state = tree.state_of(node);
    json path = json::array();
    for (const Edge& e : state.history)
        path.push_back(json{{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
    return json{{"index", index},
                {"current", state.current},
                {"depth", state.depth()},
                {"candidate", is_candidate},
                {"path", std::move(path)}};
}

} // namespace

StateValue evaluate_state(const SearchTree& tree, const CompetitorSet& competitors,
                          const ExplanationSet& explanations, EvaluatorGateway& gateway,
                          const EvalConfig& cfg, const KnowledgeGraph& graph,
                          std::ostream* transcript) {
    const std::string template_text =
        cfg.template_text.empty() ? prompts::kStateEvalTemplate : cfg.template_text;

    json states = json::array();
    states.push_back(state_payload_entry(tree, competitors.candidate, 0, true));
    for (std::size_t i = 0; i < competitors.competitors.size(); ++i)
        states.push_back(
            state_payload_entry(tree, competitors.competitors[i], static_cast<int>(i) + 1, false));

    json accepted = json::array();
    for (const PathEdges& path : explanations.paths) {
        json jp = json::array();
        for (const Edge& e : path)
            jp.push_back(json{{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
        accepted.push_back(std::move(jp));
    }

    std::ostringstream states_text;
    {
        SearchState cand = tree.state_of(competitors.candidate);
        states_text << "0. CANDIDATE: "
                    << render_path(graph, cand.history, cand.current) << "\n";
        for (std::size_t i = 0; i < competitors.competitors.size(); ++i) {
            SearchState s = tree.state_of(competitors.competitors[i]);
            states_text << (i + 1) << ". " << render_path(graph, s.history, s.current) << "\n";
        }
    }
    std::ostringstream explanations_text;
    if (explanations.paths.empty()) {
        explanations_text << "(no accepted paths yet)";
    } else {
        for (const PathEdges& path : explanations.paths)
            explanations_text << render_path(path, path.front().source) << "\n";
    }
    std::ostringstream rubric_text;
    for (std::size_t i = 0; i < cfg.rubric.size(); ++i)
        rubric_text << (i ? ", " : "") << cfg.rubric[i];

    EvaluatorRequest request;
    request.kind = RequestKind::score_states;
    request.payload = json{{"target", tree.target()},
                           {"rubric", cfg.rubric},
                           {"candidate_index", 0},
                           {"states", std::move(states)},
                           {"accepted_paths", std::move(accepted)}};
    request.prompt = render_template(
        template_text, {{"target", render_node_summary(graph.node(tree.target()))},
                        {"explanations", explanations_text.str()},
                        {"states", states_text.str()},
                        {"rubric", rubric_text.str()}});

    auto extract_candidate = [&](const json& body) -> const json* {
        for (const auto& entry : body.at("scores"))
            if (entry.at("index").get<int>() == 0) return &entry;
        return nullptr;
    };

    json body = gateway.call(request);
    const json* candidate_entry = extract_candidate(body);
    if (!candidate_entry) { // one retry, then error
        body = gateway.call(request);
        candidate_entry = extract_candidate(body);
        if (!candidate_entry)
            throw std::runtime_error("evaluate_state: candidate missing from evaluator response");
    }

    std::map<int, double> logprobs;
    for (const auto& [label, lp] : candidate_entry->at("label_logprobs").items())
        logprobs[std::stoi(label)] = lp.get<double>();
    StateValue value = rubric_value(logprobs, cfg.rubric);

    if (transcript) {
        json record{{"candidate", request.payload.at("states").at(0)},
                    {"competitors", json::array()},
                    {"value", value.value},
                    {"label_distribution", json::object()},
                    {"response", body}};
        for (std::size_t i = 0; i < competitors.competitors.size(); ++i)
            record["competitors"].push_back(request.payload.at("states").at(i + 1));
        for (const auto& [label, p] : value.label_distribution)
            record["label_distribution"][std::to_string(label)] = p;
        (*transcript) << record.dump() << "\n";
    }
    return value;
}

double ppr_eval(const std::string& current, const PprVector& ppr) {
    return 2.0 * ppr.percentile(current) - 1.0;
}

LlmStateEval::LlmStateEval(EvaluatorGateway& gateway, EvalConfig cfg, const KnowledgeGraph& graph)
    : gateway_(gateway), cfg_(std::move(cfg)), graph_(graph) {
    if (cfg_.template_text.empty()) cfg_.template_text = prompts::kStateEvalTemplate;
}

double LlmStateEval::evaluate(const SearchTree& tree, int leaf, const ExplanationSet& explanations) {
    CompetitorSet competitors = select_competitors(tree, leaf, cfg_);
    StateValue value =
        evaluate_state(tree, competitors, explanations, gateway_, cfg_, graph_, transcript_);
    return value.value;
}

} // namespace tessera
