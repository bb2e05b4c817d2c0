#include "tessera/judge.hpp"

#include "tessera/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace tessera {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Expected rating
// ---------------------------------------------------------------------------

double expected_rating(const std::map<int, double>& label_logprobs, int scale_min, int scale_max) {
    double max_lp = -std::numeric_limits<double>::infinity();
    for (int k = scale_min; k <= scale_max; ++k) {
        auto it = label_logprobs.find(k);
        if (it != label_logprobs.end()) max_lp = std::max(max_lp, it->second);
    }
    if (!std::isfinite(max_lp))
        throw std::runtime_error("expected_rating: no scale label present in the response");
    double total = 0.0, weighted = 0.0;
    for (int k = scale_min; k <= scale_max; ++k) {
        auto it = label_logprobs.find(k);
        if (it == label_logprobs.end()) continue;
        const double p = std::exp(it->second - max_lp);
        total += p;
        weighted += p * k;
    }
    return weighted / total;
}

// ---------------------------------------------------------------------------
// Score matrix / protocol
// ---------------------------------------------------------------------------

double ScoreMatrix::dimension_mean(std::size_t dimension) const {
    double total = 0.0;
    long count = 0;
    for (const auto& per_judge : cells)
        for (const auto& per_dim : per_judge) {
            total += per_dim[dimension].expected;
            ++count;
        }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
}

json ScoreMatrix::to_json() const {
    json out;
    out["seeds"] = seeds;
    out["judges"] = judges;
    out["dimensions"] = dimensions;
    json cells_json = json::array();
    for (std::size_t s = 0; s < cells.size(); ++s) {
        for (std::size_t j = 0; j < cells[s].size(); ++j) {
            for (std::size_t d = 0; d < cells[s][j].size(); ++d) {
                json dist = json::object();
                for (const auto& [label, p] : cells[s][j][d].distribution)
                    dist[std::to_string(label)] = p;
                cells_json.push_back(json{{"serialization", s},
                                          {"judge", j},
                                          {"dimension", dimensions[d]},
                                          {"expected", cells[s][j][d].expected},
                                          {"distribution", std::move(dist)}});
            }
        }
    }
    out["cells"] = std::move(cells_json);
    json means = json::object();
    for (std::size_t d = 0; d < dimensions.size(); ++d) means[dimensions[d]] = dimension_mean(d);
    out["dimension_means"] = std::move(means);
    return out;
}

namespace {

std::map<int, double> renormalise(const std::map<int, double>& logprobs, int lo, int hi) {
    double max_lp = -std::numeric_limits<double>::infinity();
    for (int k = lo; k <= hi; ++k) {
        auto it = logprobs.find(k);
        if (it != logprobs.end()) max_lp = std::max(max_lp, it->second);
    }
    double total = 0.0;
    for (int k = lo; k <= hi; ++k) {
        auto it = logprobs.find(k);
        if (it != logprobs.end()) total += std::exp(it->second - max_lp);
    }
    std::map<int, double> dist;
    for (int k = lo; k <= hi; ++k) {
        auto it = logprobs.find(k);
        dist[k] = it == logprobs.end() ? 0.0 : std::exp(it->second - max_lp) / total;
    }
    return dist;
}

} // namespace

ScoreMatrix run_protocol(const Subgraph& subgraph, const JudgeRubric& rubric,
                         std::vector<EvaluatorGateway*> judges,
                         const std::vector<std::uint64_t>& seeds) {
    if (subgraph.nodes.empty()) throw std::runtime_error("run_protocol: empty subgraph");
    const std::string template_text =
        rubric.template_text.empty() ? prompts::kJudgeTemplate : rubric.template_text;

    ScoreMatrix matrix;
    matrix.seeds = seeds;
    matrix.dimensions = rubric.dimensions;
    for (EvaluatorGateway* judge : judges) matrix.judges.push_back(judge->backend_name());
    matrix.cells.resize(seeds.size());

    std::ostringstream dims_text;
    for (const std::string& d : rubric.dimensions) dims_text << "- " << d << "\n";

    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const std::string serialization = serialize_subgraph(subgraph, seeds[s]);
        matrix.cells[s].resize(judges.size());

        EvaluatorRequest request;
        request.kind = RequestKind::judge_graph;
        request.payload = json{{"serialization", serialization},
                               {"reference", rubric.reference_text},
                               {"dimensions", rubric.dimensions},
                               {"scale", {rubric.scale_min, rubric.scale_max}},
                               {"drug", subgraph.drug},
                               {"disease", subgraph.disease}};
        request.prompt =
            render_template(template_text, {{"drug", subgraph.drug},
                                            {"disease", subgraph.disease},
                                            {"reference", rubric.reference_text},
                                            {"subgraph", serialization},
                                            {"dimensions", dims_text.str()}});

        for (std::size_t j = 0; j < judges.size(); ++j) {
            auto score_once = [&]() {
                json body = judges[j]->call(request);
                std::map<std::string, std::map<int, double>> by_dimension;
                for (const auto& entry : body.at("ratings")) {
                    std::map<int, double> logprobs;
                    for (const auto& [label, lp] : entry.at("label_logprobs").items())
                        logprobs[std::stoi(label)] = lp.get<double>();
                    by_dimension[entry.at("dimension").get<std::string>()] = std::move(logprobs);
                }
                return by_dimension;
            };
            auto by_dimension = score_once();
            bool complete = true;
            for (const std::string& d : rubric.dimensions)
                if (by_dimension.count(d) == 0) complete = false;
            if (!complete) by_dimension = score_once(); // one retry

            matrix.cells[s][j].resize(rubric.dimensions.size());
            for (std::size_t d = 0; d < rubric.dimensions.size(); ++d) {
                auto it = by_dimension.find(rubric.dimensions[d]);
                if (it == by_dimension.end()) {
                    std::ostringstream msg;
                    msg << "run_protocol: judge '" << matrix.judges[j] << "' left dimension '"
                        << rubric.dimensions[d] << "' unscored for serialization seed " << seeds[s];
                    throw std::runtime_error(msg.str());
                }
                ScoreCell cell;
                cell.expected = expected_rating(it->second, rubric.scale_min, rubric.scale_max);
                cell.distribution = renormalise(it->second, rubric.scale_min, rubric.scale_max);
                matrix.cells[s][j][d] = std::move(cell);
            }
        }
    }
    return matrix;
}

// ---------------------------------------------------------------------------
// ICC
// ---------------------------------------------------------------------------

double icc_3k(const std::vector<std::vector<double>>& matrix, bool* zero_variance) {
    if (zero_variance) *zero_variance = false;
    const std::size_t k = matrix.size(); // raters
    if (k < 2) throw std::invalid_argument("icc_3k: need >= 2 raters");
    const std::size_t n = matrix.front().size(); // subjects
    if (n < 2) throw std::invalid_argument("icc_3k: need >= 2 subjects");
    for (const auto& row : matrix)
        if (row.size() != n) throw std::invalid_argument("icc_3k: ragged matrix");

    double grand = 0.0;
    for (const auto& row : matrix)
        for (double v : row) grand += v;
    grand /= static_cast<double>(n * k);

    std::vector<double> subject_mean(n, 0.0), rater_mean(k, 0.0);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t s = 0; s < n; ++s) {
            subject_mean[s] += matrix[r][s];
            rater_mean[r] += matrix[r][s];
        }
    for (double& v : subject_mean) v /= static_cast<double>(k);
    for (double& v : rater_mean) v /= static_cast<double>(n);

    double ss_total = 0.0, ss_subject = 0.0, ss_rater = 0.0;
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t s = 0; s < n; ++s) {
            const double v = matrix[r][s];
            ss_total += (v - grand) * (v - grand);
        }
    for (std::size_t s = 0; s < n; ++s)
        ss_subject += (subject_mean[s] - grand) * (subject_mean[s] - grand);
    ss_subject *= static_cast<double>(k);
    for (std::size_t r = 0; r < k; ++r)
        ss_rater += (rater_mean[r] - grand) * (rater_mean[r] - grand);
    ss_rater *= static_cast<double>(n);
    const double ss_error = ss_total - ss_subject - ss_rater;

    if (ss_total < 1e-15) { // no variance anywhere: perfect agreement by fiat
        if (zero_variance) *zero_variance = true;
        return 1.0;
    }

    const double ms_subject = ss_subject / static_cast<double>(n - 1);
    const double ms_rater = ss_rater / static_cast<double>(k - 1);
    const double ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
    return (ms_subject - ms_error) /
           (ms_subject + (ms_rater - ms_error) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Kendall tau-b
// ---------------------------------------------------------------------------

double kendall_tau_b(std::span<const double> x, std::span<const double> y, bool* defined) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("kendall_tau_b: need two equal-length vectors of size >= 2");
    const std::size_t n = x.size();
    long concordant = 0, discordant = 0;
    long ties_x = 0, ties_y = 0; // pair counts tied in x only / y only (plus both, below)
    long ties_both = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0)
                ++ties_both;
            else if (dx == 0.0)
                ++ties_x;
            else if (dy == 0.0)
                ++ties_y;
            else if ((dx > 0.0) == (dy > 0.0))
                ++concordant;
            else
                ++discordant;
        }
    }
    const long n0 = static_cast<long>(n) * (static_cast<long>(n) - 1) / 2;
    const long n1 = ties_x + ties_both;
    const long n2 = ties_y + ties_both;
    const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                         std::sqrt(static_cast<double>(n0 - n2));
    if (denom == 0.0) {
        if (defined) *defined = false;
        return 0.0;
    }
    if (defined) *defined = true;
    return static_cast<double>(concordant - discordant) / denom;
}

// ---------------------------------------------------------------------------
// Cross-model deltas
// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

} // namespace

CrossModelDelta cross_model_delta(const std::map<std::string, DimensionScores>& scores_m1,
                                  const std::map<std::string, DimensionScores>& scores_m2) {
    if (scores_m1.size() != scores_m2.size())
        throw std::invalid_argument("cross_model_delta: pair sets differ in size");
    CrossModelDelta out;
    for (const auto& [pair_id, dims1] : scores_m1) {
        auto it = scores_m2.find(pair_id);
        if (it == scores_m2.end())
            throw std::invalid_argument("cross_model_delta: pair missing from second model: " +
                                        pair_id);
        const DimensionScores& dims2 = it->second;
        if (dims1.size() != dims2.size() || dims1.empty())
            throw std::invalid_argument("cross_model_delta: dimension mismatch for " + pair_id);
        double delta = 0.0;
        for (std::size_t d = 0; d < dims1.size(); ++d) delta += dims1[d] - dims2[d];
        delta /= static_cast<double>(dims1.size());
        out.pairs.push_back(pair_id);
        out.deltas.push_back(delta);
    }
    std::vector<double> abs_deltas;
    for (double d : out.deltas) abs_deltas.push_back(std::abs(d));
    out.median_signed = median_of(out.deltas);
    out.median_abs = median_of(abs_deltas);
    long q = 0, h = 0;
    for (double d : abs_deltas) {
        if (d <= 0.25) ++q;
        if (d <= 0.50) ++h;
    }
    out.within_quarter = abs_deltas.empty() ? 0.0 : static_cast<double>(q) / abs_deltas.size();
    out.within_half = abs_deltas.empty() ? 0.0 : static_cast<double>(h) / abs_deltas.size();
    return out;
}

json CrossModelDelta::to_json() const {
    json per_pair = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i)
        per_pair.push_back(json{{"pair", pairs[i]}, {"delta", deltas[i]}});
    return json{{"per_pair", std::move(per_pair)},
                {"median_signed", median_signed},
                {"median_abs", median_abs},
                {"within_0.25", within_quarter},
                {"within_0.50", within_half}};
}

// ---------------------------------------------------------------------------
// Structural metrics
// ---------------------------------------------------------------------------

StructuralMetrics structural_metrics(const Subgraph& sg, const StructuralConfig& cfg) {
    StructuralMetrics out;
    const PathEnumeration enumeration =
        enumerate_simple_paths(sg, sg.drug, sg.disease, cfg.max_len, cfg.max_paths);
    out.overflow = enumeration.overflow;
    out.n_path = static_cast<long>(enumeration.paths.size());

    std::map<std::string, std::string> type_of;
    for (const Node& n : sg.nodes) type_of[n.id] = n.type;

    if (out.n_path > 0) {
        double total_length = 0.0;
        long ppi_only = 0;
        for (const auto& path : enumeration.paths) {
            total_length += static_cast<double>(path.size() - 1);
            if (path.size() >= 3) { // length >= 2, so there is an interior
                bool all_protein = true;
                for (std::size_t i = 1; i + 1 < path.size(); ++i)
                    if (type_of[path[i]] != cfg.protein_type) {
                        all_protein = false;
                        break;
                    }
                if (all_protein) ++ppi_only;
            }
        }
        out.mean_path_length = total_length / static_cast<double>(out.n_path);
        out.length_defined = true;
        out.f_ppi_only = static_cast<double>(ppi_only) / static_cast<double>(out.n_path);
    }

    long proteins = 0, processes = 0;
    for (const Node& n : sg.nodes) {
        if (n.type == cfg.protein_type) ++proteins;
        if (n.type == cfg.process_type) ++processes;
    }
    if (proteins > 0) {
        out.r_bp_prot = static_cast<double>(processes) / static_cast<double>(proteins);
        out.ratio_defined = true;
    }
    return out;
}

json StructuralMetrics::to_json() const {
    return json{{"n_path", n_path},
                {"mean_path_length", length_defined ? json(mean_path_length) : json(nullptr)},
                {"f_ppi_only", f_ppi_only},
                {"r_bp_prot", ratio_defined ? json(r_bp_prot) : json(nullptr)},
                {"overflow", overflow}};
}

// ---------------------------------------------------------------------------
// Edge Jaccard distance / quadrants
// ---------------------------------------------------------------------------

double edge_jaccard_distance(const Subgraph& g1, const Subgraph& g2) {
    std::set<std::string> e1, e2;
    for (const Edge& e : g1.edges) e1.insert(e.source + '\x1f' + e.relation + '\x1f' + e.target);
    for (const Edge& e : g2.edges) e2.insert(e.source + '\x1f' + e.relation + '\x1f' + e.target);
    if (e1.empty() && e2.empty()) return 0.0;
    long intersection = 0;
    for (const std::string& key : e1) intersection += e2.count(key) > 0 ? 1 : 0;
    const long union_size = static_cast<long>(e1.size() + e2.size()) - intersection;
    return 1.0 - static_cast<double>(intersection) / static_cast<double>(union_size);
}

QuadrantTable quadrant_analysis(const std::vector<double>& abs_deltas,
                                const std::vector<double>& distances, double delta_threshold,
                                double distance_threshold) {
    if (abs_deltas.size() != distances.size())
        throw std::invalid_argument("quadrant_analysis: input length mismatch");
    QuadrantTable table;
    table.delta_threshold = delta_threshold;
    table.distance_threshold = distance_threshold;
    for (std::size_t i = 0; i < abs_deltas.size(); ++i) {
        const bool diverged_score = abs_deltas[i] > delta_threshold;
        const bool diverged_structure = distances[i] > distance_threshold;
        if (!diverged_score && !diverged_structure)
            ++table.q11;
        else if (!diverged_score && diverged_structure)
            ++table.q12;
        else if (diverged_score && !diverged_structure)
            ++table.q21;
        else
            ++table.q22;
    }
    return table;
}

json QuadrantTable::to_json() const {
    const double t = total() > 0 ? static_cast<double>(total()) : 1.0;
    return json{{"q11", q11},
                {"q12", q12},
                {"q21", q21},
                {"q22", q22},
                {"q11_pct", 100.0 * q11 / t},
                {"q12_pct", 100.0 * q12 / t},
                {"q21_pct", 100.0 * q21 / t},
                {"q22_pct", 100.0 * q22 / t},
                {"delta_threshold", delta_threshold},
                {"distance_threshold", distance_threshold}};
}

} // namespace tessera
