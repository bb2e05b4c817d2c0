#include "tessera/prior_policy.hpp"

#include "tessera/prompts.hpp"
#include "tessera/util.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iostream>
#include <numeric>
#include <sstream>

namespace tessera {

using nlohmann::json;

namespace {

// Rank dominates anchors; scores refine at this scale.
constexpr double kScoreEta = 1e-3;

bool action_identity_less(const Action& a, const Action& b) {
    if (a.target != b.target) return a.target < b.target;
    return a.relation < b.relation;
}

} // namespace

// ---------------------------------------------------------------------------
// PriorDistribution serialization
// ---------------------------------------------------------------------------

json PriorDistribution::to_json() const {
    json entries_json = json::array();
    for (const RankedAction& e : entries) {
        entries_json.push_back(json{{"relation", e.action.relation},
                                    {"target", e.action.target},
                                    {"rank", e.rank},
                                    {"utility", e.utility},
                                    {"probability", e.probability},
                                    {"justification", e.justification}});
    }
    return json{{"entries", std::move(entries_json)}};
}

PriorDistribution PriorDistribution::from_json(const json& j) {
    PriorDistribution dist;
    for (const auto& e : j.at("entries")) {
        RankedAction ra;
        ra.action = Action{e.at("relation").get<std::string>(), e.at("target").get<std::string>()};
        ra.rank = e.at("rank").get<int>();
        ra.utility = e.at("utility").get<double>();
        ra.probability = e.at("probability").get<double>();
        ra.justification = e.value("justification", std::string{});
        dist.entries.push_back(std::move(ra));
    }
    return dist;
}

// ---------------------------------------------------------------------------
// Truncation schedule
// ---------------------------------------------------------------------------

std::vector<int> truncation_schedule(int n_actions, const PriorConfig& cfg) {
    if (n_actions < 1) throw std::invalid_argument("truncation_schedule: need >= 1 action");
    const int W = cfg.batch_size;
    const int m = cfg.passes;
    if (n_actions <= W || m <= 1) return {n_actions};
    std::vector<int> schedule;
    schedule.reserve(m);
    for (int i = 0; i < m; ++i) {
        double t = static_cast<double>(n_actions) +
                   (static_cast<double>(W) - n_actions) * static_cast<double>(i) / (m - 1);
        int size = static_cast<int>(std::lround(t));
        if (i == 0) size = n_actions;
        if (i == m - 1) size = W;
        if (!schedule.empty()) size = std::min(size, schedule.back());
        if (schedule.empty() || size != schedule.back()) schedule.push_back(size);
    }
    return schedule;
}

// ---------------------------------------------------------------------------
// Batch construction
// ---------------------------------------------------------------------------

BatchPlan build_batches(const std::vector<int>& working, const std::vector<double>& bootstrap,
                        const std::vector<Action>& actions, int batch_size) {
    BatchPlan plan;
    const int W = batch_size;
    if (static_cast<int>(working.size()) <= W) {
        plan.batched = false;
        plan.batches.push_back(working);
        return plan;
    }
    if (W < 4) throw std::invalid_argument("build_batches: batch size must be >= 4");

    std::vector<int> sorted = working;
    std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        if (bootstrap[a] != bootstrap[b]) return bootstrap[a] > bootstrap[b];
        return action_identity_less(actions[a], actions[b]);
    });

    const int T = static_cast<int>(sorted.size());
    const int k = W / 2;
    std::vector<bool> is_pivot(sorted.size(), false);
    for (int i = 0; i < k; ++i) {
        // 1-based quantile position ceil((i + 0.5) * T / k)
        int pos = static_cast<int>(std::ceil((static_cast<double>(i) + 0.5) * T / k));
        pos = std::clamp(pos, 1, T);
        is_pivot[pos - 1] = true;
    }
    std::vector<int> non_pivots;
    for (int i = 0; i < T; ++i) {
        if (is_pivot[i])
            plan.pivots.push_back(sorted[i]);
        else
            non_pivots.push_back(sorted[i]);
    }

    const int chunk_cap = W - k;
    for (std::size_t start = 0; start < non_pivots.size(); start += chunk_cap) {
        std::size_t end = std::min(non_pivots.size(), start + chunk_cap);
        std::vector<int> batch = plan.pivots;
        batch.insert(batch.end(), non_pivots.begin() + start, non_pivots.begin() + end);
        plan.batches.push_back(std::move(batch));
    }
    plan.batched = true;
    return plan;
}

// ---------------------------------------------------------------------------
// Rank pass
// ---------------------------------------------------------------------------

namespace {

EvaluatorRequest make_rank_request(const SearchState& state, const KnowledgeGraph& graph,
                                   const std::vector<Action>& actions,
                                   const std::vector<int>& batch, int pass_index, bool final_pass,
                                   const std::string& template_text) {
    json actions_json = json::array();
    std::vector<Action> batch_actions;
    for (int id : batch) {
        const Action& a = actions[id];
        const Node& n = graph.node(a.target);
        actions_json.push_back(json{{"index", id},
                                    {"relation", a.relation},
                                    {"target", a.target},
                                    {"type", n.type},
                                    {"label", n.label},
                                    {"description", n.description}});
        batch_actions.push_back(a);
    }
    json history = json::array();
    for (const Edge& e : state.history)
        history.push_back(json{{"source", e.source}, {"relation", e.relation}, {"target", e.target}});

    EvaluatorRequest request;
    request.kind = RequestKind::rank_batch;
    request.payload = json{{"state", json{{"current", state.current},
                                          {"target", state.target},
                                          {"path", std::move(history)}}},
                           {"actions", std::move(actions_json)},
                           {"pass", pass_index},
                           {"final_pass", final_pass}};
    request.prompt = render_template(
        template_text,
        {{"path", render_path(graph, state.history, state.current)},
         {"target", render_node_summary(graph.node(state.target))},
         {"actions", render_action_table(graph, batch_actions)},
         {"justification_field",
          final_pass ? std::string(", \"justification\": \"<short reason>\"") : std::string()}});
    return request;
}

JudgedBatch parse_judged_batch(const std::vector<int>& batch, const json& body) {
    JudgedBatch out;
    out.actions = batch;
    out.judgements.resize(batch.size());
    std::vector<int> ranks;
    ranks.reserve(batch.size());
    for (const auto& entry : body.at("rankings")) {
        const int id = entry.at("index").get<int>();
        auto pos = std::find(batch.begin(), batch.end(), id);
        if (pos == batch.end())
            throw SchemaError("ranking references an action outside the batch: " +
                              std::to_string(id));
        BatchJudgement& j = out.judgements[pos - batch.begin()];
        j.rank = entry.at("rank").get<int>();
        j.score = entry.at("score").get<double>();
        j.justification = entry.value("justification", std::string{});
        ranks.push_back(j.rank);
    }
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i)
        if (ranks[i] != static_cast<int>(i) + 1)
            throw SchemaError("ranks do not form a permutation of 1.." +
                              std::to_string(ranks.size()));

    // within-batch z-score standardisation
    double mean = 0.0;
    for (const auto& j : out.judgements) mean += j.score;
    mean /= static_cast<double>(out.judgements.size());
    double var = 0.0;
    for (const auto& j : out.judgements) var += (j.score - mean) * (j.score - mean);
    var /= static_cast<double>(out.judgements.size());
    const double sd = std::sqrt(var);
    for (auto& j : out.judgements) j.zscore = sd > 1e-12 ? (j.score - mean) / sd : 0.0;
    return out;
}

} // namespace

std::vector<JudgedBatch> rank_pass(const SearchState& state, const KnowledgeGraph& graph,
                                   const std::vector<Action>& actions, const BatchPlan& plan,
                                   EvaluatorGateway& gateway, int pass_index, bool final_pass,
                                   const std::string& template_text) {
    auto judge_batch = [&](std::size_t batch_index) {
        const std::vector<int>& batch = plan.batches[batch_index];
        EvaluatorRequest request = make_rank_request(state, graph, actions, batch, pass_index,
                                                     final_pass, template_text);
        try {
            try {
                return parse_judged_batch(batch, gateway.call(request));
            } catch (const SchemaError&) {
                return parse_judged_batch(batch, gateway.call(request)); // one retry
            }
        } catch (const SchemaError& err) {
            throw std::runtime_error("rank pass " + std::to_string(pass_index) + ", batch " +
                                     std::to_string(batch_index) + ": " + err.what());
        }
    };

    std::vector<JudgedBatch> judged;
    judged.reserve(plan.batches.size());
    if (plan.batches.size() <= 1) {
        for (std::size_t b = 0; b < plan.batches.size(); ++b) judged.push_back(judge_batch(b));
        return judged;
    }
    std::vector<std::future<JudgedBatch>> futures;
    futures.reserve(plan.batches.size());
    for (std::size_t b = 0; b < plan.batches.size(); ++b)
        futures.push_back(std::async(std::launch::async, judge_batch, b));
    for (auto& f : futures) judged.push_back(f.get());
    return judged;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

std::vector<int> aggregate_global_order(const std::vector<JudgedBatch>& judged,
                                        const BatchPlan& plan,
                                        const std::vector<double>& bootstrap,
                                        const std::vector<Action>& actions) {
    if (!plan.batched) {
        const JudgedBatch& only = judged.at(0);
        std::vector<std::size_t> perm(only.actions.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
            return only.judgements[a].rank < only.judgements[b].rank;
        });
        std::vector<int> order;
        order.reserve(perm.size());
        for (std::size_t p : perm) order.push_back(only.actions[p]);
        return order;
    }

    struct Entry {
        double anchor = 0.0;
        double score = 0.0; // batch score (pivots: mean across batches)
        bool present = false;
    };
    std::unordered_map<int, Entry> entries;

    // pivot anchors: mean rank and mean score across every batch
    std::unordered_map<int, std::pair<double, double>> pivot_sums; // id -> (rank sum, score sum)
    for (int p : plan.pivots) pivot_sums[p] = {0.0, 0.0};
    for (const JudgedBatch& jb : judged) {
        for (std::size_t i = 0; i < jb.actions.size(); ++i) {
            auto it = pivot_sums.find(jb.actions[i]);
            if (it == pivot_sums.end()) continue;
            it->second.first += jb.judgements[i].rank;
            it->second.second += jb.judgements[i].score;
        }
    }
    const double n_batches = static_cast<double>(judged.size());
    std::unordered_map<int, double> pivot_mean_score;
    for (int p : plan.pivots) {
        const auto& sums = pivot_sums.at(p);
        const double mean_rank = sums.first / n_batches;
        const double mean_score = sums.second / n_batches;
        pivot_mean_score[p] = mean_score;
        entries[p] = Entry{-mean_rank + kScoreEta * mean_score, mean_score, true};
    }

    // non-pivots: anchored between the nearest pivots above/below in their
    // batch's rank order, positioned by score (rank-offset fallback when the
    // scores are uninformative)
    for (const JudgedBatch& jb : judged) {
        std::vector<std::size_t> by_rank(jb.actions.size());
        std::iota(by_rank.begin(), by_rank.end(), 0);
        std::sort(by_rank.begin(), by_rank.end(), [&](std::size_t a, std::size_t b) {
            return jb.judgements[a].rank < jb.judgements[b].rank;
        });
        std::vector<bool> pivot_here(jb.actions.size(), false);
        for (std::size_t i = 0; i < jb.actions.size(); ++i)
            pivot_here[i] = pivot_sums.count(jb.actions[i]) > 0;

        for (std::size_t pos = 0; pos < by_rank.size(); ++pos) {
            const std::size_t slot = by_rank[pos];
            const int id = jb.actions[slot];
            if (pivot_here[slot]) continue;
            if (entries.count(id) > 0) continue; // non-pivots are judged in exactly one batch

            // nearest pivot above / below in the judged order
            int above = -1, below = -1;
            std::size_t above_pos = 0, below_pos = 0;
            for (std::size_t q = pos; q-- > 0;) {
                if (pivot_here[by_rank[q]]) {
                    above = jb.actions[by_rank[q]];
                    above_pos = q;
                    break;
                }
            }
            for (std::size_t q = pos + 1; q < by_rank.size(); ++q) {
                if (pivot_here[by_rank[q]]) {
                    below = jb.actions[by_rank[q]];
                    below_pos = q;
                    break;
                }
            }
            if (above < 0 && below < 0)
                throw std::logic_error("aggregate_global_order: batch without pivot neighbours");

            const double score = jb.judgements[slot].score;
            double anchor = 0.0;
            if (above >= 0 && below >= 0) {
                const double anchor_above = entries.at(above).anchor;
                const double anchor_below = entries.at(below).anchor;
                const double score_above = pivot_mean_score.at(above);
                const double score_below = pivot_mean_score.at(below);
                double t;
                if (score_above - score_below > 1e-12) {
                    t = (score_above - score) / (score_above - score_below);
                } else {
                    t = (static_cast<double>(pos) - above_pos) /
                        (static_cast<double>(below_pos) - above_pos);
                }
                t = std::clamp(t, 0.0, 1.0);
                anchor = anchor_above + t * (anchor_below - anchor_above);
            } else if (above < 0) {
                // ranked above every pivot: offset upward from the best pivot
                double raw = score - pivot_mean_score.at(below);
                if (raw <= 0.0) raw = (static_cast<double>(below_pos) - pos) * 1e-6;
                anchor = entries.at(below).anchor + kScoreEta * raw;
            } else {
                // ranked below every pivot: offset downward from the worst pivot
                double raw = pivot_mean_score.at(above) - score;
                if (raw <= 0.0) raw = (static_cast<double>(pos) - above_pos) * 1e-6;
                anchor = entries.at(above).anchor - kScoreEta * raw;
            }
            entries[id] = Entry{anchor, score, true};
        }
    }

    std::vector<int> order;
    order.reserve(entries.size());
    for (const auto& [id, entry] : entries) {
        (void)entry;
        order.push_back(id);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Entry& ea = entries.at(a);
        const Entry& eb = entries.at(b);
        if (ea.anchor != eb.anchor) return ea.anchor > eb.anchor;
        if (ea.score != eb.score) return ea.score > eb.score;
        if (bootstrap[a] != bootstrap[b]) return bootstrap[a] > bootstrap[b];
        return action_identity_less(actions[a], actions[b]);
    });
    return order;
}

// ---------------------------------------------------------------------------
// Prior distribution
// ---------------------------------------------------------------------------

PriorDistribution prior_distribution(const std::vector<int>& final_order,
                                     const std::vector<double>& zscores,
                                     const std::vector<std::string>& justifications,
                                     const std::vector<Action>& actions, const PriorConfig& cfg) {
    const std::size_t n = actions.size();
    if (final_order.size() != n)
        throw std::invalid_argument("prior_distribution: order must cover all actions");
    PriorDistribution dist;
    dist.entries.resize(n);

    std::vector<int> rank_of(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) rank_of[final_order[pos]] = static_cast<int>(pos) + 1;

    std::vector<double> utility(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double rank_term =
            n == 1 ? 1.0 : 1.0 - (static_cast<double>(rank_of[i]) - 1.0) / (static_cast<double>(n) - 1.0);
        const double squashed = 1.0 / (1.0 + std::exp(-zscores[i]));
        utility[i] = cfg.blend_weight * rank_term + (1.0 - cfg.blend_weight) * squashed;
    }

    const double max_utility = *std::max_element(utility.begin(), utility.end());
    std::vector<double> weight(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = std::exp((utility[i] - max_utility) / cfg.temperature);
        total += weight[i];
    }

    const double floor = n == 1 ? 0.0 : cfg.min_probability;
    if (floor * static_cast<double>(n) >= 1.0)
        throw std::invalid_argument("prior_distribution: min_probability floor exceeds 1/n");
    for (std::size_t i = 0; i < n; ++i) {
        RankedAction& e = dist.entries[i];
        e.action = actions[i];
        e.rank = rank_of[i];
        e.utility = utility[i];
        e.probability = floor + (1.0 - floor * static_cast<double>(n)) * (weight[i] / total);
        e.justification = justifications[i];
    }
    return dist;
}

PriorDistribution uniform_prior(const std::vector<Action>& actions) {
    PriorDistribution dist;
    const std::size_t n = actions.size();
    dist.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist.entries[i].action = actions[i];
        dist.entries[i].rank = static_cast<int>(i) + 1;
        dist.entries[i].utility = 1.0;
        dist.entries[i].probability = 1.0 / static_cast<double>(n);
    }
    return dist;
}

// ---------------------------------------------------------------------------
// LLM-backed policy
// ---------------------------------------------------------------------------

LlmPriorPolicy::LlmPriorPolicy(EvaluatorGateway& gateway, PriorConfig cfg,
                               const KnowledgeGraph& graph, const PprVector& ppr,
                               JsonCacheStore* cache, std::string extra_version)
    : gateway_(gateway), cfg_(std::move(cfg)), graph_(graph), ppr_(ppr), cache_(cache) {
    if (cfg_.batch_size < 4)
        throw std::invalid_argument("prior policy: batch size must be >= 4");
    if (cfg_.passes < 1) throw std::invalid_argument("prior policy: passes must be >= 1");
    template_text_ = cfg_.template_text.empty() ? prompts::kPriorRankTemplate : cfg_.template_text;

    std::ostringstream version;
    version << "prior/v1|W=" << cfg_.batch_size << "|m=" << cfg_.passes << "|tau="
            << cfg_.temperature << "|bw=" << cfg_.blend_weight << "|floor=" << cfg_.min_probability
            << "|tpl=" << hex64(fnv1a64(template_text_)) << "|" << extra_version;
    policy_version_ = version.str();
}

PriorDistribution LlmPriorPolicy::run_passes(const SearchState& state,
                                             const std::vector<Action>& actions) {
    const std::size_t n = actions.size();
    std::vector<int> full_order(n);
    std::iota(full_order.begin(), full_order.end(), 0);
    std::vector<double> zscores(n, 0.0);
    std::vector<std::string> justifications(n);

    std::vector<double> bootstrap(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) bootstrap[i] = ppr_.score(actions[i].target);

    const std::vector<int> schedule = truncation_schedule(static_cast<int>(n), cfg_);
    for (std::size_t p = 0; p < schedule.size(); ++p) {
        const int T = schedule[p];
        std::vector<int> working(full_order.begin(), full_order.begin() + T);
        const bool final_pass = (p + 1 == schedule.size());
        BatchPlan plan = build_batches(working, bootstrap, actions, cfg_.batch_size);
        std::vector<JudgedBatch> judged = rank_pass(state, graph_, actions, plan, gateway_,
                                                    static_cast<int>(p) + 1, final_pass,
                                                    template_text_);
        for (const JudgedBatch& jb : judged) {
            for (std::size_t i = 0; i < jb.actions.size(); ++i) {
                zscores[jb.actions[i]] = jb.judgements[i].zscore;
                if (final_pass && !jb.judgements[i].justification.empty())
                    justifications[jb.actions[i]] = jb.judgements[i].justification;
            }
        }
        std::vector<int> refined = aggregate_global_order(judged, plan, bootstrap, actions);
        std::copy(refined.begin(), refined.end(), full_order.begin());
        bootstrap = zscores; // later passes bootstrap from the standardised scores
    }
    return prior_distribution(full_order, zscores, justifications, actions, cfg_);
}

namespace {

void write_sink_record(std::ostream* sink, const SearchState& state,
                       const PriorDistribution& dist) {
    if (!sink) return;
    json path = json::array();
    for (const Edge& e : state.history)
        path.push_back(json{{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
    json record{{"current", state.current},
                {"target", state.target},
                {"path", std::move(path)},
                {"entries", dist.to_json().at("entries")}};
    (*sink) << record.dump() << "\n";
}

} // namespace

PriorDistribution LlmPriorPolicy::compute(const SearchState& state,
                                          const std::vector<Action>& actions) {
    if (actions.empty()) return PriorDistribution{};
    if (!cache_) {
        PriorDistribution dist = run_passes(state, actions);
        write_sink_record(sink_, state, dist);
        return dist;
    }

    CacheKey key{graph_.content_hash_hex(), state.fingerprint(), policy_version_};
    PriorDistribution dist = cached_prior(*cache_, key, [&] { return run_passes(state, actions); });
    bool matches = dist.entries.size() == actions.size();
    for (std::size_t i = 0; matches && i < actions.size(); ++i)
        matches = dist.entries[i].action == actions[i];
    if (!matches) {
        std::cerr << "warning: cached prior does not match the current action set, recomputing\n";
        dist = run_passes(state, actions);
    }
    write_sink_record(sink_, state, dist);
    return dist;
}

PriorDistribution cached_prior(JsonCacheStore& cache, const CacheKey& key,
                               const std::function<PriorDistribution()>& compute) {
    json value = cache.get_or_compute(key, [&] { return compute().to_json(); });
    return PriorDistribution::from_json(value);
}

} // namespace tessera
