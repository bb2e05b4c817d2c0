#include "tessera/metrics.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tessera {

using nlohmann::json;

// ---------------------------------------------------------------------------
// PRF
// ---------------------------------------------------------------------------

PRF PRF::from_counts(long p_num, long p_den, long r_num, long r_den) {
    PRF prf;
    prf.p_num = p_num;
    prf.p_den = p_den;
    prf.r_num = r_num;
    prf.r_den = r_den;
    prf.p_defined = p_den > 0;
    prf.r_defined = r_den > 0;
    prf.precision = prf.p_defined ? static_cast<double>(p_num) / p_den : 0.0;
    prf.recall = prf.r_defined ? static_cast<double>(r_num) / r_den : 0.0;
    prf.f1 = (prf.precision + prf.recall) > 0.0
                 ? 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall)
                 : 0.0;
    return prf;
}

json PRF::to_json() const {
    return json{{"precision", precision},  {"recall", recall},       {"f1", f1},
                {"p_num", p_num},          {"p_den", p_den},         {"r_num", r_num},
                {"r_den", r_den},          {"p_defined", p_defined}, {"r_defined", r_defined}};
}

// ---------------------------------------------------------------------------
// Graph views
// ---------------------------------------------------------------------------

namespace {

// Dense adjacency over a subgraph's own node universe; edges collapsed to
// distinct (source, target) pairs.
struct GraphView {
    std::vector<std::string> ids;
    std::unordered_map<std::string, int> index;
    std::vector<std::vector<int>> adjacency;
    std::vector<std::vector<int>> reverse;
    std::set<std::pair<int, int>> pairs; // distinct directed edges

    explicit GraphView(const Subgraph& sg, const std::set<std::string>* node_filter = nullptr) {
        for (const Node& n : sg.nodes) {
            index.emplace(n.id, static_cast<int>(ids.size()));
            ids.push_back(n.id);
        }
        adjacency.resize(ids.size());
        reverse.resize(ids.size());
        for (const Edge& e : sg.edges) {
            if (node_filter &&
                (node_filter->count(e.source) == 0 || node_filter->count(e.target) == 0))
                continue;
            auto si = index.find(e.source);
            auto ti = index.find(e.target);
            if (si == index.end() || ti == index.end()) continue;
            if (pairs.insert({si->second, ti->second}).second) {
                adjacency[si->second].push_back(ti->second);
                reverse[ti->second].push_back(si->second);
            }
        }
    }

    bool has(const std::string& id) const { return index.count(id) > 0; }

    // hop distances from `start` (index), optionally capped
    std::vector<int> bfs(int start, int max_depth = -1) const {
        std::vector<int> dist(ids.size(), -1);
        std::deque<int> queue;
        dist[start] = 0;
        queue.push_back(start);
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            if (max_depth >= 0 && dist[u] >= max_depth) continue;
            for (int v : adjacency[u]) {
                if (dist[v] >= 0) continue;
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
        return dist;
    }

    std::vector<int> bfs_reverse(int start) const {
        std::vector<int> dist(ids.size(), -1);
        std::deque<int> queue;
        dist[start] = 0;
        queue.push_back(start);
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v : reverse[u]) {
                if (dist[v] >= 0) continue;
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
        return dist;
    }
};

std::set<std::string> node_id_set(const Subgraph& sg) {
    std::set<std::string> ids;
    for (const Node& n : sg.nodes) ids.insert(n.id);
    return ids;
}

} // namespace

// ---------------------------------------------------------------------------
// NSA
// ---------------------------------------------------------------------------

PRF node_set_agreement(const GraphPair& pair) {
    const auto predicted = node_id_set(pair.predicted);
    const auto curated = node_id_set(pair.curated);
    long overlap = 0;
    for (const std::string& id : predicted) overlap += curated.count(id) > 0 ? 1 : 0;
    return PRF::from_counts(overlap, static_cast<long>(predicted.size()), overlap,
                            static_cast<long>(curated.size()));
}

// ---------------------------------------------------------------------------
// ESA@h
// ---------------------------------------------------------------------------

PRF edge_set_agreement(const GraphPair& pair, int h, bool restrict_to_curated) {
    if (h < 1) throw std::invalid_argument("edge_set_agreement: h must be >= 1");
    const auto curated_nodes = node_id_set(pair.curated);
    GraphView predicted(pair.predicted, restrict_to_curated ? &curated_nodes : nullptr);
    GraphView curated(pair.curated);

    // precision: predicted (u, v) connected u ~> v in curated within <= h hops
    long p_num = 0;
    std::unordered_map<int, std::vector<int>> curated_bfs_cache;
    for (const auto& [ui, vi] : predicted.pairs) {
        const std::string& u = predicted.ids[ui];
        const std::string& v = predicted.ids[vi];
        if (!curated.has(u) || !curated.has(v)) continue;
        const int cu = curated.index.at(u);
        auto [it, fresh] = curated_bfs_cache.try_emplace(cu);
        if (fresh) it->second = curated.bfs(cu, h);
        const int d = it->second[curated.index.at(v)];
        if (d >= 1 && d <= h) ++p_num;
    }

    // recall: curated (u, v) connected in the predicted graph within <= h hops
    long r_num = 0;
    std::unordered_map<int, std::vector<int>> predicted_bfs_cache;
    for (const auto& [ui, vi] : curated.pairs) {
        const std::string& u = curated.ids[ui];
        const std::string& v = curated.ids[vi];
        if (!predicted.has(u) || !predicted.has(v)) continue;
        const int pu = predicted.index.at(u);
        auto [it, fresh] = predicted_bfs_cache.try_emplace(pu);
        if (fresh) it->second = predicted.bfs(pu, h);
        const int d = it->second[predicted.index.at(v)];
        if (d >= 1 && d <= h) ++r_num;
    }

    return PRF::from_counts(p_num, static_cast<long>(predicted.pairs.size()), r_num,
                            static_cast<long>(curated.pairs.size()));
}

// ---------------------------------------------------------------------------
// TCA
// ---------------------------------------------------------------------------

PRF transitive_closure_agreement(const GraphPair& pair) {
    const auto curated_nodes = node_id_set(pair.curated);
    GraphView predicted(pair.predicted);
    GraphView curated(pair.curated);

    std::set<std::pair<std::string, std::string>> closure_curated;
    for (const std::string& a : curated_nodes) {
        const auto dist = curated.bfs(curated.index.at(a));
        for (const std::string& b : curated_nodes) {
            if (a == b) continue;
            const int d = dist[curated.index.at(b)];
            if (d >= 1) closure_curated.insert({a, b});
        }
    }
    std::set<std::pair<std::string, std::string>> closure_predicted;
    for (const std::string& a : curated_nodes) {
        if (!predicted.has(a)) continue;
        const auto dist = predicted.bfs(predicted.index.at(a));
        for (const std::string& b : curated_nodes) {
            if (a == b || !predicted.has(b)) continue;
            const int d = dist[predicted.index.at(b)];
            if (d >= 1) closure_predicted.insert({a, b});
        }
    }

    long overlap = 0;
    for (const auto& p : closure_predicted) overlap += closure_curated.count(p) > 0 ? 1 : 0;
    return PRF::from_counts(overlap, static_cast<long>(closure_predicted.size()), overlap,
                            static_cast<long>(closure_curated.size()));
}

// ---------------------------------------------------------------------------
// EPA
// ---------------------------------------------------------------------------

PathEnumeration enumerate_simple_paths(const Subgraph& sg, const std::string& from,
                                       const std::string& to, int max_len, long max_paths) {
    PathEnumeration out;
    GraphView view(sg);
    if (!view.has(from) || !view.has(to)) return out;
    const int start = view.index.at(from);
    const int goal = view.index.at(to);

    std::vector<int> stack{start};
    std::vector<bool> on_path(view.ids.size(), false);
    on_path[start] = true;

    struct Frame {
        int node;
        std::size_t next = 0;
    };
    std::vector<Frame> frames{{start, 0}};
    while (!frames.empty()) {
        Frame& frame = frames.back();
        if (frame.node == goal && frames.size() > 1) {
            // record and backtrack; paths stop at the target
            if (static_cast<long>(out.paths.size()) >= max_paths) {
                out.overflow = true;
                break;
            }
            std::vector<std::string> path;
            path.reserve(stack.size());
            for (int idx : stack) path.push_back(view.ids[idx]);
            out.paths.push_back(std::move(path));
            on_path[frame.node] = false;
            stack.pop_back();
            frames.pop_back();
            continue;
        }
        if (frame.next >= view.adjacency[frame.node].size() ||
            static_cast<int>(frames.size()) - 1 >= max_len) {
            on_path[frame.node] = false;
            stack.pop_back();
            frames.pop_back();
            continue;
        }
        const int next = view.adjacency[frame.node][frame.next++];
        if (on_path[next]) continue;
        on_path[next] = true;
        stack.push_back(next);
        frames.push_back({next, 0});
    }
    return out;
}

PRF exact_path_agreement(const GraphPair& pair, EpaMode mode, const EpaLimits& limits) {
    const auto curated_nodes = node_id_set(pair.curated);
    const PathEnumeration gold =
        enumerate_simple_paths(pair.curated, pair.drug, pair.disease, limits.max_len, limits.max_paths);
    const PathEnumeration pred =
        enumerate_simple_paths(pair.predicted, pair.drug, pair.disease, limits.max_len, limits.max_paths);

    std::set<int> curated_lengths; // edge counts present in the curated subgraph
    std::set<std::vector<std::string>> gold_set;
    for (const auto& path : gold.paths) {
        curated_lengths.insert(static_cast<int>(path.size()) - 1);
        gold_set.insert(path);
    }

    long p_den = 0, p_num = 0;
    for (const auto& path : pred.paths) {
        const int length = static_cast<int>(path.size()) - 1;
        if (curated_lengths.count(length) == 0) continue;
        if (mode == EpaMode::in_vocabulary) {
            bool in_vocab = true;
            for (const std::string& id : path)
                if (curated_nodes.count(id) == 0) {
                    in_vocab = false;
                    break;
                }
            if (!in_vocab) continue;
        }
        ++p_den;
        if (gold_set.count(path) > 0) ++p_num;
    }

    std::set<std::vector<std::string>> pred_set(pred.paths.begin(), pred.paths.end());
    long r_num = 0;
    for (const auto& path : gold.paths) r_num += pred_set.count(path) > 0 ? 1 : 0;

    return PRF::from_counts(p_num, p_den, r_num, static_cast<long>(gold.paths.size()));
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

struct AxisPool {
    long p_num = 0, p_den = 0, r_num = 0, r_den = 0;
    std::vector<double> macro_f1s;
};

AxisPool pool_axis(const std::vector<RunMetrics>& runs, const std::vector<std::size_t>& selection,
                   std::size_t axis_index) {
    AxisPool pool;
    for (std::size_t run_index : selection) {
        const AxisResult& axis = runs[run_index].axes[axis_index];
        pool.p_num += axis.prf.p_num;
        pool.p_den += axis.prf.p_den;
        pool.r_num += axis.prf.r_num;
        pool.r_den += axis.prf.r_den;
        const bool undefined = !axis.prf.p_defined || !axis.prf.r_defined;
        if (!(axis.exclude_undefined_from_macro && undefined))
            pool.macro_f1s.push_back(axis.prf.f1);
    }
    return pool;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ConfidenceInterval ci95(const std::vector<double>& samples, double point) {
    if (samples.empty()) return {point, point};
    return {percentile(samples, 0.025), percentile(samples, 0.975)};
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

} // namespace

MetricReport aggregate(const std::vector<RunMetrics>& runs, int bootstrap_samples,
                       std::uint64_t seed) {
    if (runs.empty()) throw std::invalid_argument("aggregate: need at least one run");
    const std::size_t n_axes = runs.front().axes.size();
    for (const RunMetrics& run : runs)
        if (run.axes.size() != n_axes)
            throw std::invalid_argument("aggregate: runs disagree on the axis list");

    MetricReport report;
    report.runs = static_cast<int>(runs.size());
    report.bootstrap_samples = bootstrap_samples;
    report.seed = seed;
    report.per_run = runs;

    std::vector<std::size_t> all(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) all[i] = i;

    for (std::size_t axis_index = 0; axis_index < n_axes; ++axis_index) {
        AxisAggregate agg;
        agg.axis = runs.front().axes[axis_index].axis;

        const AxisPool pool = pool_axis(runs, all, axis_index);
        agg.micro = PRF::from_counts(pool.p_num, pool.p_den, pool.r_num, pool.r_den);
        agg.macro_f1 = mean_of(pool.macro_f1s);
        agg.macro_support = static_cast<int>(pool.macro_f1s.size());

        Rng rng(seed + axis_index); // per-axis stream keeps axes independent
        std::vector<double> micro_p, micro_r, micro_f1, macro_f1;
        micro_p.reserve(bootstrap_samples);
        for (int b = 0; b < bootstrap_samples; ++b) {
            std::vector<std::size_t> selection(runs.size());
            for (std::size_t i = 0; i < runs.size(); ++i)
                selection[i] = uniform_index(rng, runs.size());
            const AxisPool sample = pool_axis(runs, selection, axis_index);
            const PRF prf = PRF::from_counts(sample.p_num, sample.p_den, sample.r_num, sample.r_den);
            micro_p.push_back(prf.precision);
            micro_r.push_back(prf.recall);
            micro_f1.push_back(prf.f1);
            if (!sample.macro_f1s.empty()) macro_f1.push_back(mean_of(sample.macro_f1s));
        }
        agg.micro_p_ci = ci95(micro_p, agg.micro.precision);
        agg.micro_r_ci = ci95(micro_r, agg.micro.recall);
        agg.micro_f1_ci = ci95(micro_f1, agg.micro.f1);
        agg.macro_f1_ci = ci95(macro_f1, agg.macro_f1);
        report.axes.push_back(std::move(agg));
    }
    return report;
}

json MetricReport::to_json() const {
    json axes_json = json::array();
    for (const AxisAggregate& axis : axes) {
        axes_json.push_back(json{
            {"axis", axis.axis},
            {"micro", axis.micro.to_json()},
            {"macro_f1", axis.macro_f1},
            {"macro_support", axis.macro_support},
            {"ci95",
             {{"micro_p", {axis.micro_p_ci.lo, axis.micro_p_ci.hi}},
              {"micro_r", {axis.micro_r_ci.lo, axis.micro_r_ci.hi}},
              {"micro_f1", {axis.micro_f1_ci.lo, axis.micro_f1_ci.hi}},
              {"macro_f1", {axis.macro_f1_ci.lo, axis.macro_f1_ci.hi}}}}});
    }
    json per_run_json = json::array();
    for (const RunMetrics& run : per_run) {
        json axes_row = json::object();
        for (const AxisResult& axis : run.axes) axes_row[axis.axis] = axis.prf.to_json();
        per_run_json.push_back(json{{"run", run.run_id}, {"axes", std::move(axes_row)}});
    }
    return json{{"runs", runs},
                {"bootstrap_samples", bootstrap_samples},
                {"seed", seed},
                {"axes", std::move(axes_json)},
                {"per_run", std::move(per_run_json)}};
}

// ---------------------------------------------------------------------------
// Mediator analysis
// ---------------------------------------------------------------------------

namespace {

// union of interior nodes over all tied shortest a->b paths
std::set<std::string> shortest_path_mediators(const GraphView& view, int a, int b,
                                              const std::vector<int>& dist_from_a,
                                              const std::vector<int>& dist_to_b) {
    std::set<std::string> mediators;
    const int d = dist_from_a[b];
    for (std::size_t v = 0; v < view.ids.size(); ++v) {
        if (static_cast<int>(v) == a || static_cast<int>(v) == b) continue;
        if (dist_from_a[v] < 0 || dist_to_b[v] < 0) continue;
        if (dist_from_a[v] + dist_to_b[v] == d) mediators.insert(view.ids[v]);
    }
    return mediators;
}

} // namespace

std::vector<MediatorRecord> mediator_records(const GraphPair& pair) {
    GraphView predicted(pair.predicted);
    GraphView curated(pair.curated);
    const auto curated_nodes = node_id_set(pair.curated);

    std::vector<std::string> shared;
    for (const Node& n : pair.predicted.nodes)
        if (curated.has(n.id)) shared.push_back(n.id);

    // forward distances from and reverse distances to every shared node
    std::unordered_map<std::string, std::vector<int>> fwd_p, rev_p, fwd_g, rev_g;
    for (const std::string& id : shared) {
        fwd_p[id] = predicted.bfs(predicted.index.at(id));
        rev_p[id] = predicted.bfs_reverse(predicted.index.at(id));
        fwd_g[id] = curated.bfs(curated.index.at(id));
        rev_g[id] = curated.bfs_reverse(curated.index.at(id));
    }

    std::vector<MediatorRecord> records;
    for (const std::string& a : shared) {
        for (const std::string& b : shared) {
            if (a == b) continue;
            const int hp = fwd_p.at(a)[predicted.index.at(b)];
            const int hg = fwd_g.at(a)[curated.index.at(b)];
            if (hp < 1 || hg < 1) continue; // reachable in both graphs only

            MediatorRecord record;
            record.h_p = hp;
            record.h_g = hg;
            std::set<std::string> mediators_p, mediators_g;
            if (hp >= 2)
                mediators_p = shortest_path_mediators(predicted, predicted.index.at(a),
                                                      predicted.index.at(b), fwd_p.at(a), rev_p.at(b));
            if (hg >= 2)
                mediators_g = shortest_path_mediators(curated, curated.index.at(a),
                                                      curated.index.at(b), fwd_g.at(a), rev_g.at(b));
            record.m_p = static_cast<int>(mediators_p.size());
            record.m_g = static_cast<int>(mediators_g.size());
            if (record.m_p > 0 && record.m_g > 0) {
                long intersection = 0;
                for (const std::string& m : mediators_p)
                    intersection += mediators_g.count(m) > 0 ? 1 : 0;
                const long union_size =
                    static_cast<long>(mediators_p.size() + mediators_g.size()) - intersection;
                record.jaccard = static_cast<double>(intersection) / static_cast<double>(union_size);
            }
            if (record.m_p > 0) {
                long in_gold = 0;
                for (const std::string& m : mediators_p)
                    in_gold += curated_nodes.count(m) > 0 ? 1 : 0;
                record.gold_fraction =
                    static_cast<double>(in_gold) / static_cast<double>(record.m_p);
            }
            records.push_back(std::move(record));
        }
    }
    return records;
}

MediatorStats mediator_stats(const std::vector<MediatorRecord>& records) {
    MediatorStats stats;
    stats.pair_count = static_cast<long>(records.size());
    if (records.empty()) return stats;

    std::map<std::pair<int, int>, long> hop_counts;
    struct BinAccumulator {
        long count = 0;
        double jaccard_sum = 0.0;
        long jaccard_count = 0;
        double fraction_sum = 0.0;
        long fraction_count = 0;
    };
    std::map<std::pair<int, int>, BinAccumulator> bins;
    for (const MediatorRecord& r : records) {
        hop_counts[{r.h_p, r.h_g}] += 1;
        BinAccumulator& bin = bins[{r.m_p, r.m_g}];
        bin.count += 1;
        if (r.jaccard) {
            bin.jaccard_sum += *r.jaccard;
            bin.jaccard_count += 1;
        }
        if (r.gold_fraction) {
            bin.fraction_sum += *r.gold_fraction;
            bin.fraction_count += 1;
        }
    }
    for (const auto& [key, count] : hop_counts)
        stats.hop_mass[key] = static_cast<double>(count) / static_cast<double>(records.size());
    for (const auto& [key, acc] : bins) {
        MediatorBin bin;
        bin.m_p = key.first;
        bin.m_g = key.second;
        bin.count = acc.count;
        if (acc.jaccard_count > 0)
            bin.mean_jaccard = acc.jaccard_sum / static_cast<double>(acc.jaccard_count);
        if (acc.fraction_count > 0)
            bin.mean_gold_fraction = acc.fraction_sum / static_cast<double>(acc.fraction_count);
        stats.bins.push_back(std::move(bin));
    }
    return stats;
}

MediatorStats mediator_analysis(const GraphPair& pair) {
    return mediator_stats(mediator_records(pair));
}

json MediatorStats::to_json() const {
    json hops = json::array();
    for (const auto& [key, mass] : hop_mass)
        hops.push_back(json{{"h_p", key.first}, {"h_g", key.second}, {"mass", mass}});
    json bins_json = json::array();
    for (const MediatorBin& bin : bins) {
        json jb{{"m_p", bin.m_p}, {"m_g", bin.m_g}, {"count", bin.count}};
        jb["mean_jaccard"] = bin.mean_jaccard ? json(*bin.mean_jaccard) : json(nullptr);
        jb["mean_gold_fraction"] =
            bin.mean_gold_fraction ? json(*bin.mean_gold_fraction) : json(nullptr);
        bins_json.push_back(std::move(jb));
    }
    return json{{"pair_count", pair_count}, {"hop_mass", std::move(hops)}, {"bins", std::move(bins_json)}};
}

std::string mediator_csv_hops(const MediatorStats& stats) {
    std::ostringstream out;
    out << "h_p,h_g,mass\n";
    for (const auto& [key, mass] : stats.hop_mass)
        out << key.first << "," << key.second << "," << mass << "\n";
    return out.str();
}

std::string mediator_csv_jaccard(const MediatorStats& stats) {
    std::ostringstream out;
    out << "m_p,m_g,count,mean_jaccard,defined\n";
    for (const MediatorBin& bin : stats.bins) {
        out << bin.m_p << "," << bin.m_g << "," << bin.count << ",";
        if (bin.mean_jaccard)
            out << *bin.mean_jaccard << ",1\n";
        else
            out << ",0\n";
    }
    return out.str();
}

std::string mediator_csv_gold_fraction(const MediatorStats& stats) {
    std::ostringstream out;
    out << "m_p,m_g,count,mean_gold_fraction,defined\n";
    for (const MediatorBin& bin : stats.bins) {
        out << bin.m_p << "," << bin.m_g << "," << bin.count << ",";
        if (bin.mean_gold_fraction)
            out << *bin.mean_gold_fraction << ",1\n";
        else
            out << ",0\n";
    }
    return out.str();
}

} // namespace tessera
