#pragma once

#include <cstdint>
#include <optional>

#include "cne/sknn_graph.hpp"

namespace cne {

struct MetricsReport {
    double knn_recall = 0.0;              // in [0, 1]
    double spearman = 0.0;                // in [-1, 1]
    double partition_function = 0.0;
    std::optional<double> kl_divergence;  // >= 0
    std::size_t k = 15;
    std::size_t sample_size = 5000;
    std::uint64_t seed = 0;
};

// Mean over points of |kNN_ref(i) ∩ kNN_emb(i)| / k. Exact neighbors,
// ties broken by smaller index, Euclidean metric on both sides.
double knn_recall(const std::vector<double>& reference, std::size_t ref_dim,
                  const std::vector<double>& emb, std::size_t emb_dim, std::size_t n,
                  std::size_t k);

// Spearman rank correlation (average-rank ties) over all pairwise distances
// of a seeded subsample without replacement (capped at n).
double spearman_distance_corr(const std::vector<double>& reference, std::size_t ref_dim,
                              const std::vector<double>& emb, std::size_t emb_dim, std::size_t n,
                              std::size_t sample_size, std::uint64_t seed);

// KL(p || normalized kernel), p uniform over directed skNN edges.
double kl_divergence(const SkNNGraph& graph, const std::vector<double>& coords, std::size_t d);

}  // namespace cne
