#pragma once
// Target-conditioned personalized PageRank. The teleport vector is one-hot
// on the target node; dangling-node mass is redirected to the target as
// well, keeping all leaked mass target-focused.

#include "tessera/graph.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace tessera {

class PprVector {
public:
    PprVector() = default;
    PprVector(std::string target, double damping, int iterations_used,
              std::vector<std::string> ids, std::vector<double> scores);

    const std::string& target() const { return target_; }
    double damping() const { return damping_; }
    int iterations_used() const { return iterations_used_; }
    std::size_t size() const { return scores_.size(); }

    double score_at(std::size_t index) const { return scores_[index]; }
    double score(const std::string& id) const;
    const std::vector<double>& scores() const { return scores_; }
    const std::vector<std::string>& ids() const { return ids_; }
    bool has(const std::string& id) const;

    // Midrank percentile of the node's score over all nodes:
    // (strictly smaller + 0.5 * ties excluding u) / (|V| - 1), clamped to
    // [0,1]. A single-node graph yields 0.5.
    double percentile_at(std::size_t index) const { return percentiles_[index]; }
    double percentile(const std::string& id) const;

    void save_json(const std::filesystem::path& file) const;
    static PprVector load_json(const std::filesystem::path& file);

private:
    void compute_percentiles();
    std::size_t index_of(const std::string& id) const;

    std::string target_;
    double damping_ = 0.0;
    int iterations_used_ = 0;
    std::vector<std::string> ids_;
    std::vector<double> scores_;
    std::vector<double> percentiles_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Power iteration to an L1 fixed-point residual below `tol`. The walk picks
// uniformly among out-adjacency entries, so parallel edges (same endpoints,
// distinct relations) carry proportionally more mass. Throws if `max_iter`
// iterations do not converge (the message reports the final residual).
PprVector compute_ppr(const KnowledgeGraph& graph, const std::string& z, double damping = 0.85,
                      double tol = 1e-10, int max_iter = 1000);

double rank_percentile(const PprVector& ppr, const std::string& u);

} // namespace tessera
