#pragma once
// Comparative state evaluation: candidate leaves are scored jointly with a
// depth-bound competitor set, conditioned on the accepted explanations, and
// mapped from rubric-label log-probabilities to a value in [-1, 1]. Includes
// the deterministic PPR-eval baseline.

#include "tessera/evaluator.hpp"
#include "tessera/ppr.hpp"
#include "tessera/search.hpp"

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace tessera {

struct EvalConfig {
    int depth_window = 1;     // Delta
    int competitor_count = 4; // k
    double epsilon = 1e-9;    // prior clamp inside log
    std::vector<int> rubric = {1, 2, 3, 4, 5};
    std::string template_text; // empty -> built-in default
};

struct PathStatistics {
    double log_path_prior = 0.0; // sum of log(max(P, eps)) along the root path
    long cumulative_visits = 0;  // sum of N along the root path
};

PathStatistics path_statistics(const SearchTree& tree, int node, double epsilon);

struct CompetitorSet {
    int candidate = -1;
    std::vector<int> competitors; // tree node indices, selection order
};

// Pool: materialised non-root states whose incoming edge is open and that
// are not terminal, within the depth window of the leaf. Top-k under
// descending (log path prior, cumulative visits), ties to earlier-created
// states. An empty pool leaves the candidate alone.
CompetitorSet select_competitors(const SearchTree& tree, int leaf, const EvalConfig& cfg);

struct StateValue {
    double value = 0.0;
    std::map<int, double> label_distribution; // every rubric label, absent -> 0
    std::map<int, double> raw_logprobs;       // labels present in the response
};

// Renormalises exp(logprob) over the rubric labels and maps the expected
// label affinely onto [-1, 1]. Throws if no rubric label is present.
StateValue rubric_value(const std::map<int, double>& label_logprobs, const std::vector<int>& rubric);

// Joint scoring call: all competitor-set histories plus the accepted
// explanations go to the evaluator; the candidate's label distribution is
// extracted (one retry on a missing candidate, then an error).
StateValue evaluate_state(const SearchTree& tree, const CompetitorSet& competitors,
                          const ExplanationSet& explanations, EvaluatorGateway& gateway,
                          const EvalConfig& cfg, const KnowledgeGraph& graph,
                          std::ostream* transcript = nullptr);

// v_ppr = 2 * rank_pct(ppr_z(u)) - 1.
double ppr_eval(const std::string& current, const PprVector& ppr);

class LlmStateEval : public LeafEvaluator {
public:
    LlmStateEval(EvaluatorGateway& gateway, EvalConfig cfg, const KnowledgeGraph& graph);

    double evaluate(const SearchTree& tree, int leaf, const ExplanationSet& explanations) override;
    std::string name() const override { return "llm"; }

    void set_transcript(std::ostream* out) { transcript_ = out; }
    const std::string& template_text() const { return cfg_.template_text; }

private:
    EvaluatorGateway& gateway_;
    EvalConfig cfg_;
    const KnowledgeGraph& graph_;
    std::ostream* transcript_ = nullptr;
};

class PprEval : public LeafEvaluator {
public:
    explicit PprEval(const PprVector& ppr) : ppr_(ppr) {}
    double evaluate(const SearchTree& tree, int leaf, const ExplanationSet&) override {
        return ppr_eval(tree.at(leaf).current, ppr_);
    }
    std::string name() const override { return "ppr"; }

private:
    const PprVector& ppr_;
};

} // namespace tessera
