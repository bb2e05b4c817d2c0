#include "tessera/ppr.hpp"

#include "tessera/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace tessera {

PprVector::PprVector(std::string target, double damping, int iterations_used,
                     std::vector<std::string> ids, std::vector<double> scores)
    : target_(std::move(target)),
      damping_(damping),
      iterations_used_(iterations_used),
      ids_(std::move(ids)),
      scores_(std::move(scores)) {
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
    compute_percentiles();
}

std::size_t PprVector::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::runtime_error("ppr: unknown node id: " + id);
    return it->second;
}

bool PprVector::has(const std::string& id) const { return index_.count(id) > 0; }

double PprVector::score(const std::string& id) const { return scores_[index_of(id)]; }

double PprVector::percentile(const std::string& id) const { return percentiles_[index_of(id)]; }

void PprVector::compute_percentiles() {
    const std::size_t n = scores_.size();
    percentiles_.assign(n, 0.5);
    if (n <= 1) return; // defined as 0.5 for a single node
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores_[a] < scores_[b]; });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores_[order[j + 1]] == scores_[order[i]]) ++j;
        // i..j is a tie group: `i` nodes strictly below, (j - i) ties excluding self
        double pct = (static_cast<double>(i) + 0.5 * static_cast<double>(j - i)) /
                     static_cast<double>(n - 1);
        pct = std::clamp(pct, 0.0, 1.0);
        for (std::size_t t = i; t <= j; ++t) percentiles_[order[t]] = pct;
        i = j + 1;
    }
}

PprVector compute_ppr(const KnowledgeGraph& graph, const std::string& z, double damping,
                      double tol, int max_iter) {
    if (!(damping > 0.0 && damping < 1.0))
        throw std::invalid_argument("ppr: damping must lie in (0,1)");
    if (!(tol > 0.0)) throw std::invalid_argument("ppr: tol must be positive");
    const std::size_t n = graph.node_count();
    const std::size_t zi = graph.index_of(z);

    std::vector<double> x(n, 0.0);
    x[zi] = 1.0;
    std::vector<double> next(n, 0.0);

    int iterations = 0;
    double residual = 0.0;
    for (iterations = 1; iterations <= max_iter; ++iterations) {
        std::fill(next.begin(), next.end(), 0.0);
        double dangling = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            const auto& out = graph.out_edges_at(u);
            if (out.empty()) {
                dangling += x[u];
                continue;
            }
            const double share = damping * x[u] / static_cast<double>(out.size());
            for (const OutEdge& e : out) next[e.target_index] += share;
        }
        next[zi] += damping * dangling + (1.0 - damping);

        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - x[i]);
        x.swap(next);
        if (residual < tol) break;
    }
    if (residual >= tol && n > 1) {
        std::ostringstream msg;
        msg << "ppr: no convergence for target '" << z << "' after " << max_iter
            << " iterations (L1 residual " << residual << ", tol " << tol << ")";
        throw std::runtime_error(msg.str());
    }

    double total = std::accumulate(x.begin(), x.end(), 0.0);
    for (double& v : x) v /= total;

    std::vector<std::string> ids;
    ids.reserve(n);
    for (const Node& node : graph.nodes()) ids.push_back(node.id);
    return PprVector(z, damping, std::min(iterations, max_iter), std::move(ids), std::move(x));
}

double rank_percentile(const PprVector& ppr, const std::string& u) { return ppr.percentile(u); }

void PprVector::save_json(const std::filesystem::path& file) const {
    nlohmann::json j;
    j["target"] = target_;
    j["damping"] = damping_;
    j["iterations_used"] = iterations_used_;
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t i = 0; i < ids_.size(); ++i) scores[ids_[i]] = scores_[i];
    j["scores"] = std::move(scores);
    write_text_file_atomic(file, j.dump() + "\n");
}

PprVector PprVector::load_json(const std::filesystem::path& file) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(file));
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (const auto& [id, score] : j.at("scores").items()) {
        ids.push_back(id);
        scores.push_back(score.get<double>());
    }
    return PprVector(j.at("target").get<std::string>(), j.at("damping").get<double>(),
                     j.at("iterations_used").get<int>(), std::move(ids), std::move(scores));
}

} // namespace tessera
