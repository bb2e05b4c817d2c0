#pragma once
// Default prompt templates and their renderers. Templates are overridable
// via config; placeholders use {{name}} syntax. The template text feeds the
// cache key ("template version"), so any edit invalidates cached priors.

#include "tessera/action_space.hpp"
#include "tessera/state.hpp"
#include "tessera/subgraph.hpp"

#include <string>
#include <vector>

namespace tessera {

namespace prompts {

extern const char* const kPriorRankTemplate;
extern const char* const kStateEvalTemplate;
extern const char* const kJudgeTemplate;

} // namespace prompts

std::string render_template(std::string text,
                            const std::vector<std::pair<std::string, std::string>>& values);

// "Drug[Drug] -(treats)-> ProteinX[Protein] ..." — human-readable path line.
std::string render_path(const KnowledgeGraph& graph, const std::vector<Edge>& history,
                        const std::string& root);
std::string render_path(const std::vector<Edge>& history, const std::string& root);

// One numbered row per action: index, relation, target attributes.
std::string render_action_table(const KnowledgeGraph& graph, const std::vector<Action>& actions);

std::string render_node_summary(const Node& node);

} // namespace tessera
