#include "tessera/prompts.hpp"

#include <sstream>

namespace tessera {

namespace prompts {

const char* const kPriorRankTemplate = R"(You are ranking candidate next steps in a mechanistic reasoning chain over a biomedical knowledge graph.

Current path so far:
{{path}}

Target disease:
{{target}}

Candidate actions (relation, then the node it leads to):
{{actions}}

Rank ALL candidates from most to least promising as the next mechanistic step toward the target. Judge each step on mechanistic plausibility, specificity to the target, and whether it advances the chain rather than drifting. Return strict JSON:
{"rankings": [{"index": <candidate index>, "rank": <1 = best>, "score": <higher = better>{{justification_field}}}]}
Every candidate index must appear exactly once.)";

const char* const kStateEvalTemplate = R"(You are comparatively scoring partial mechanistic paths from a drug toward a target disease.

Target disease:
{{target}}

Already accepted explanation paths:
{{explanations}}

Candidate paths to score (the state under evaluation is marked CANDIDATE):
{{states}}

Score every listed path on the ordinal rubric {{rubric}} (higher = more promising marginal contribution toward explaining the drug-disease mechanism, given what is already accepted). Return strict JSON:
{"scores": [{"index": <state index>, "label_logprobs": {"<label>": <log-probability>, ...}}]}
Include a log-probability for each rubric label you consider plausible.)";

const char* const kJudgeTemplate = R"(You are judging a predicted mechanism-of-action subgraph for {{drug}} -> {{disease}}.

Reference knowledge:
{{reference}}

Predicted subgraph:
{{subgraph}}

Rate the subgraph on each dimension below using the 1-5 ordinal scale (5 = best):
{{dimensions}}

Return strict JSON:
{"ratings": [{"dimension": "<name>", "label_logprobs": {"1": <lp>, "2": <lp>, "3": <lp>, "4": <lp>, "5": <lp>}}]}
Report log-probabilities for every scale value per dimension.)";

} // namespace prompts

std::string render_template(std::string text,
                            const std::vector<std::pair<std::string, std::string>>& values) {
    for (const auto& [name, value] : values) {
        const std::string placeholder = "{{" + name + "}}";
        std::size_t pos = 0;
        while ((pos = text.find(placeholder, pos)) != std::string::npos) {
            text.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    }
    return text;
}

std::string render_node_summary(const Node& node) {
    std::string out = node.id + " [" + node.type + "] " + node.label;
    if (!node.description.empty()) out += " — " + node.description;
    return out;
}

std::string render_path(const KnowledgeGraph& graph, const std::vector<Edge>& history,
                        const std::string& root) {
    if (history.empty()) return root + " (search root, no steps taken yet)";
    std::ostringstream out;
    out << history.front().source;
    for (const Edge& e : history) {
        const Node& n = graph.node(e.target);
        out << " -(" << e.relation << ")-> " << e.target << "[" << n.type << "]";
    }
    return out.str();
}

std::string render_path(const std::vector<Edge>& history, const std::string& root) {
    if (history.empty()) return root + " (search root, no steps taken yet)";
    std::ostringstream out;
    out << history.front().source;
    for (const Edge& e : history) out << " -(" << e.relation << ")-> " << e.target;
    return out.str();
}

std::string render_action_table(const KnowledgeGraph& graph, const std::vector<Action>& actions) {
    std::ostringstream out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const Node& n = graph.node(actions[i].target);
        out << i << ". -(" << actions[i].relation << ")-> " << render_node_summary(n) << "\n";
    }
    return out.str();
}

} // namespace tessera
