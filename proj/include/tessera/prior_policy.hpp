#pragma once
// Prior policy over legal actions: multi-pass batched listwise ranking with
// shared quantile-spaced pivots, cross-batch anchor aggregation, and a
// temperature-controlled softmax over rank/score-blended utilities.

#include "tessera/action_space.hpp"
#include "tessera/evaluator.hpp"
#include "tessera/ppr.hpp"
#include "tessera/state.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace tessera {

struct PriorConfig {
    int batch_size = 10;          // W; must be >= 4 so k = W/2 >= 2 pivots exist
    int passes = 2;               // m
    double temperature = 0.5;
    double blend_weight = 0.5;    // rank weight in the utility blend
    double min_probability = 1e-4;
    std::string template_text;    // empty -> built-in default
};

struct RankedAction {
    Action action;
    int rank = 0;           // 1-based position in the final global order
    double utility = 0.0;
    double probability = 0.0;
    std::string justification;
};

struct PriorDistribution {
    std::vector<RankedAction> entries; // aligned with the input action order

    nlohmann::json to_json() const;
    static PriorDistribution from_json(const nlohmann::json& j);
};

// Pass sizes [T_1..T_m]: linear from n down to the batch size, rounded to
// nearest integer, consecutive duplicates collapsed. n <= W (or m = 1)
// yields the single pass [n].
std::vector<int> truncation_schedule(int n_actions, const PriorConfig& cfg);

struct BatchPlan {
    bool batched = false;                  // false: one batch, no pivots
    std::vector<int> pivots;               // action indices (into the full action vector)
    std::vector<std::vector<int>> batches; // presentation order; pivots adjoined first
};

// Splits a working set larger than the batch size into batches sharing
// k = floor(W/2) pivots taken at quantile positions ceil((i+0.5)*T/k) of the
// bootstrap-sorted order (descending; ties by target id then relation).
// Non-pivots are chunked consecutively in that order, <= W-k per chunk.
BatchPlan build_batches(const std::vector<int>& working, const std::vector<double>& bootstrap,
                        const std::vector<Action>& actions, int batch_size);

struct BatchJudgement {
    int rank = 0;      // 1-based within the batch
    double score = 0.0;
    double zscore = 0.0;
    std::string justification;
};

struct JudgedBatch {
    std::vector<int> actions;              // presentation order (action indices)
    std::vector<BatchJudgement> judgements; // aligned with `actions`
};

// One evaluator call per batch (fanned out concurrently). Validates that the
// returned ranks form a permutation of 1..|B|; a violation is retried once,
// then reported with the batch id. Scores are z-standardised within batch
// (all-zero under degenerate variance).
std::vector<JudgedBatch> rank_pass(const SearchState& state, const KnowledgeGraph& graph,
                                   const std::vector<Action>& actions, const BatchPlan& plan,
                                   EvaluatorGateway& gateway, int pass_index, bool final_pass,
                                   const std::string& template_text);

// Cross-batch aggregation: pivots get anchors (-mean rank + eta * mean
// score); non-pivots are anchored between their nearest within-batch pivot
// neighbours, positioned by score so that consistently-scoring evaluators
// yield a globally consistent order. Final order sorts descending on
// (anchor, batch score, bootstrap score), with action identity as the last
// tie-break.
std::vector<int> aggregate_global_order(const std::vector<JudgedBatch>& judged,
                                        const BatchPlan& plan,
                                        const std::vector<double>& bootstrap,
                                        const std::vector<Action>& actions);

// utility(a) = blend * (1 - (rank-1)/(n-1)) + (1-blend) * logistic(z(a));
// probabilities are softmax(utility / temperature) mixed with the floor so
// every action retains at least min_probability mass.
PriorDistribution prior_distribution(const std::vector<int>& final_order,
                                     const std::vector<double>& zscores,
                                     const std::vector<std::string>& justifications,
                                     const std::vector<Action>& actions, const PriorConfig& cfg);

PriorDistribution uniform_prior(const std::vector<Action>& actions);

class PriorProvider {
public:
    virtual ~PriorProvider() = default;
    virtual PriorDistribution compute(const SearchState& state,
                                      const std::vector<Action>& actions) = 0;
    virtual std::string name() const = 0;
};

// Ablation arm: 1/n on every legal action, no evaluator involvement.
class UniformPriorPolicy : public PriorProvider {
public:
    PriorDistribution compute(const SearchState&, const std::vector<Action>& actions) override {
        return uniform_prior(actions);
    }
    std::string name() const override { return "uniform"; }
};

class LlmPriorPolicy : public PriorProvider {
public:
    // `cache` may be null (no persistence). `extra_version` folds any
    // upstream configuration that changes legal-action generation (e.g. the
    // action-space config) into the cache key.
    LlmPriorPolicy(EvaluatorGateway& gateway, PriorConfig cfg, const KnowledgeGraph& graph,
                   const PprVector& ppr, JsonCacheStore* cache = nullptr,
                   std::string extra_version = "");

    PriorDistribution compute(const SearchState& state, const std::vector<Action>& actions) override;
    std::string name() const override { return "llm"; }

    std::string policy_version() const { return policy_version_; }
    const std::string& template_text() const { return template_text_; }

    // Optional JSONL sink receiving one record (state + ranked entries with
    // justifications) per computed or cache-served distribution.
    void set_sink(std::ostream* out) { sink_ = out; }

private:
    PriorDistribution run_passes(const SearchState& state, const std::vector<Action>& actions);

    EvaluatorGateway& gateway_;
    PriorConfig cfg_;
    const KnowledgeGraph& graph_;
    const PprVector& ppr_;
    JsonCacheStore* cache_;
    std::string template_text_;
    std::string policy_version_;
    std::ostream* sink_ = nullptr;
};

// Spec-level cache wrapper: first call computes and persists, later calls
// with an equal key return the stored distribution without invoking compute.
PriorDistribution cached_prior(JsonCacheStore& cache, const CacheKey& key,
                               const std::function<PriorDistribution()>& compute);

} // namespace tessera
