#pragma once
// Deterministic agreement metrics between predicted and curated explanation
// subgraphs: node-set, hop-tolerant edge-set, transitive-closure, and
// exact-path agreement, plus micro/macro aggregation with run-level
// bootstrap confidence intervals and the hop/mediator decomposition.

#include "tessera/subgraph.hpp"
#include "tessera/util.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tessera {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long p_num = 0, p_den = 0;
    long r_num = 0, r_den = 0;
    bool p_defined = true; // false when the precision denominator is 0
    bool r_defined = true;

    static PRF from_counts(long p_num, long p_den, long r_num, long r_den);
    nlohmann::json to_json() const;
};

struct GraphPair {
    Subgraph predicted;
    Subgraph curated;
    std::string drug;
    std::string disease;
};

// Set overlap of node ids (endpoints included).
PRF node_set_agreement(const GraphPair& pair);

// Edge agreement with h-hop tolerance over distinct (source, target) pairs:
// a predicted edge counts for precision when the curated graph connects its
// endpoints within <= h hops (shortcuts), a curated edge counts for recall
// when the predicted graph does (detours). h = 1 is strict edge overlap.
// `restrict_to_curated` drops predicted edges with an endpoint outside the
// curated node set first (the false-positive probe).
PRF edge_set_agreement(const GraphPair& pair, int h, bool restrict_to_curated = false);

// Reachability among curated node pairs; predicted paths may traverse any
// nodes, curated reachability is computed within the curated graph.
PRF transitive_closure_agreement(const GraphPair& pair);

enum class EpaMode { in_vocabulary, open_world };

struct PathEnumeration {
    std::vector<std::vector<std::string>> paths; // node sequences drug..disease
    bool overflow = false;                       // a cap was hit
};

// Simple drug->disease paths (DFS), capped by edge length and path count.
PathEnumeration enumerate_simple_paths(const Subgraph& sg, const std::string& from,
                                       const std::string& to, int max_len = 10,
                                       long max_paths = 10000);

struct EpaLimits {
    int max_len = 10;
    long max_paths = 10000;
};

// Exact path overlap at curated path lengths. in_vocabulary restricts the
// precision denominator to predicted paths staying within curated nodes;
// open_world counts every predicted path at those lengths. Matching is on
// node sequences.
PRF exact_path_agreement(const GraphPair& pair, EpaMode mode, const EpaLimits& limits = {});

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AxisResult {
    std::string axis;
    PRF prf;
    bool exclude_undefined_from_macro = false; // EPA-style undefined handling
};

struct RunMetrics {
    std::string run_id;
    std::vector<AxisResult> axes;
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

struct AxisAggregate {
    std::string axis;
    PRF micro;            // pooled counts across runs
    double macro_f1 = 0.0;
    int macro_support = 0; // runs contributing to the macro mean
    ConfidenceInterval micro_p_ci, micro_r_ci, micro_f1_ci, macro_f1_ci;
};

struct MetricReport {
    int runs = 0;
    int bootstrap_samples = 0;
    std::uint64_t seed = 0;
    std::vector<AxisAggregate> axes;
    std::vector<RunMetrics> per_run;

    nlohmann::json to_json() const;
};

// Micro = pooled numerators/denominators; macro = mean per-run F1 (runs with
// an undefined ratio are excluded where the axis says so). 95% percentile
// CIs from seeded run-level bootstrap resampling.
MetricReport aggregate(const std::vector<RunMetrics>& runs, int bootstrap_samples = 10000,
                       std::uint64_t seed = 7);

// ---------------------------------------------------------------------------
// Hop / mediator analysis
// ---------------------------------------------------------------------------

struct MediatorRecord {
    int h_p = 0, h_g = 0; // shortest-path hops in predicted / curated
    int m_p = 0, m_g = 0; // mediator-set sizes
    std::optional<double> jaccard;       // undefined when m_p = 0 or m_g = 0
    std::optional<double> gold_fraction; // undefined when m_p = 0
};

struct MediatorBin {
    int m_p = 0, m_g = 0;
    long count = 0;
    std::optional<double> mean_jaccard;
    std::optional<double> mean_gold_fraction;
};

struct MediatorStats {
    long pair_count = 0;
    std::map<std::pair<int, int>, double> hop_mass; // (h_p, h_g) -> probability mass
    std::vector<MediatorBin> bins;                  // keyed (m_p, m_g), sorted

    nlohmann::json to_json() const;
};

// One record per node pair reachable in both graphs (over their shared
// nodes); mediators are the union of interior nodes over all tied shortest
// paths; the gold fraction is the share of predicted mediators lying in the
// curated node set.
std::vector<MediatorRecord> mediator_records(const GraphPair& pair);
MediatorStats mediator_stats(const std::vector<MediatorRecord>& records);
MediatorStats mediator_analysis(const GraphPair& pair);

// CSV payloads for the three analysis panels (hop joint distribution,
// mediator Jaccard bins, gold-mediator fraction bins).
std::string mediator_csv_hops(const MediatorStats& stats);
std::string mediator_csv_jaccard(const MediatorStats& stats);
std::string mediator_csv_gold_fraction(const MediatorStats& stats);

} // namespace tessera
