#pragma once
// LLM-as-judge protocol: 3 serializations x 3 judges rubric scoring with
// probability-weighted expected ratings, plus the agreement statistics
// (absolute-agreement ICC, Kendall tau-b), cross-model deltas, structural
// subgraph metrics and the divergence quadrant analysis.

#include "tessera/evaluator.hpp"
#include "tessera/metrics.hpp"
#include "tessera/subgraph.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace tessera {

struct JudgeRubric {
    std::vector<std::string> dimensions = {"Biological Plausibility", "Mechanistic Coherence",
                                           "Contextual Specificity", "Completeness", "Conciseness"};
    int scale_min = 1;
    int scale_max = 5;
    std::string reference_text; // per-pair grounding (mechanism-of-action notes)
    std::string template_text;  // empty -> built-in default
};

// Renormalises the label log-probabilities over the scale and returns
// sum_k k * p(k). Throws when no scale label is present.
double expected_rating(const std::map<int, double>& label_logprobs, int scale_min = 1,
                       int scale_max = 5);

struct ScoreCell {
    double expected = 0.0;
    std::map<int, double> distribution; // renormalised over the scale
};

struct ScoreMatrix {
    std::vector<std::uint64_t> seeds;    // serialization seeds
    std::vector<std::string> judges;     // judge backend names
    std::vector<std::string> dimensions;
    // cells[serialization][judge][dimension]
    std::vector<std::vector<std::vector<ScoreCell>>> cells;

    double dimension_mean(std::size_t dimension) const; // over all seed x judge combinations
    nlohmann::json to_json() const;
};

// Serializes the subgraph once per seed, sends every (serialization, judge)
// combination, and extracts the expected rating per dimension. A judge
// response missing a dimension is retried once, then reported with the cell.
ScoreMatrix run_protocol(const Subgraph& subgraph, const JudgeRubric& rubric,
                         std::vector<EvaluatorGateway*> judges,
                         const std::vector<std::uint64_t>& seeds);

// Two-way absolute-agreement intraclass correlation for the average of k
// raters, from the standard mean-squares decomposition. `matrix` is raters x
// subjects (>= 2 each, no missing cells). A matrix with no variance at all
// is perfect agreement: 1.0 with the flag set.
double icc_3k(const std::vector<std::vector<double>>& matrix, bool* zero_variance = nullptr);

// Tie-corrected rank concordance. All-ties in either vector leaves the
// coefficient undefined (flag cleared, 0 returned).
double kendall_tau_b(std::span<const double> x, std::span<const double> y, bool* defined = nullptr);

// ---------------------------------------------------------------------------
// Cross-model comparison
// ---------------------------------------------------------------------------

using DimensionScores = std::vector<double>; // one score per rubric dimension

struct CrossModelDelta {
    std::vector<std::string> pairs;
    std::vector<double> deltas;  // per-pair mean over dimensions, signed
    double median_signed = 0.0;
    double median_abs = 0.0;
    double within_quarter = 0.0; // Pr(|delta| <= 0.25)
    double within_half = 0.0;    // Pr(|delta| <= 0.50)

    nlohmann::json to_json() const;
};

// Per-pair dimension-averaged signed difference between two models' scores.
// Both maps must cover the same pair set.
CrossModelDelta cross_model_delta(const std::map<std::string, DimensionScores>& scores_m1,
                                  const std::map<std::string, DimensionScores>& scores_m2);

struct StructuralMetrics {
    long n_path = 0;
    double mean_path_length = 0.0;
    bool length_defined = false;
    double f_ppi_only = 0.0; // fraction of paths whose interior is all protein
    double r_bp_prot = 0.0;  // process-to-protein node-count ratio
    bool ratio_defined = false;
    bool overflow = false;

    nlohmann::json to_json() const;
};

struct StructuralConfig {
    std::string protein_type = "Protein";
    std::string process_type = "BiologicalProcess";
    int max_len = 10;
    long max_paths = 10000;
};

// Path metrics over the subgraph's drug->disease simple paths. A path counts
// as PPI-only when it has length >= 2 and every interior node is a protein.
StructuralMetrics structural_metrics(const Subgraph& sg, const StructuralConfig& cfg = {});

// 1 - |E1 ∩ E2| / |E1 ∪ E2| over (source, relation, target) triples; two
// empty edge sets have distance 0.
double edge_jaccard_distance(const Subgraph& g1, const Subgraph& g2);

struct QuadrantTable {
    long q11 = 0; // low distance, low score divergence (convergent)
    long q12 = 0; // high distance, low divergence (plural mechanisms)
    long q21 = 0; // low distance, high divergence
    long q22 = 0; // high distance, high divergence
    double delta_threshold = 0.5;
    double distance_threshold = 0.5;

    long total() const { return q11 + q12 + q21 + q22; }
    nlohmann::json to_json() const;
};

QuadrantTable quadrant_analysis(const std::vector<double>& abs_deltas,
                                const std::vector<double>& distances,
                                double delta_threshold = 0.5, double distance_threshold = 0.5);

} // namespace tessera
