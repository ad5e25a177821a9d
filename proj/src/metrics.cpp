#include "cne/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cne/model.hpp"
#include "cne/parallel.hpp"
#include "cne/rng.hpp"

namespace cne {
namespace {

// Exact k nearest neighbor indices per point, ties by smaller index.
std::vector<std::uint32_t> knn_sets(const std::vector<double>& coords, std::size_t dim,
                                    std::size_t n, std::size_t k) {
    std::vector<std::uint32_t> nn(n * k);
    parallel_blocks(n, 64, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double d2 = 0.0;
                for (std::size_t t = 0; t < dim; ++t) {
                    const double diff = coords[i * dim + t] - coords[j * dim + t];
                    d2 += diff * diff;
                }
                cand[c++] = {d2, static_cast<std::uint32_t>(j)};
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                              cand.end());
            for (std::size_t t = 0; t < k; ++t) nn[i * k + t] = cand[t].second;
        }
    });
    return nn;
}

// Average ranks (1-based) with tie groups sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> pair_distances(const std::vector<double>& coords, std::size_t dim,
                                   const std::vector<std::uint32_t>& idx) {
    const std::size_t s = idx.size();
    std::vector<double> out;
    out.reserve(s * (s - 1) / 2);
    for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a + 1; b < s; ++b) {
            double d2 = 0.0;
            for (std::size_t t = 0; t < dim; ++t) {
                const double diff = coords[idx[a] * dim + t] - coords[idx[b] * dim + t];
                d2 += diff * diff;
            }
            out.push_back(d2);  // monotone in distance, ranks unchanged
        }
    }
    return out;
}

}  // namespace

double knn_recall(const std::vector<double>& reference, std::size_t ref_dim,
                  const std::vector<double>& emb, std::size_t emb_dim, std::size_t n,
                  std::size_t k) {
    if (reference.size() != n * ref_dim || emb.size() != n * emb_dim)
        throw std::invalid_argument("knn_recall: size mismatch");
    if (k >= n) throw std::invalid_argument("knn_recall: k must be < n");
    const auto ref_nn = knn_sets(reference, ref_dim, n, k);
    const auto emb_nn = knn_sets(emb, emb_dim, n, k);
    double total = 0.0;
    std::vector<std::uint32_t> a(k), b(k);
    for (std::size_t i = 0; i < n; ++i) {
        a.assign(ref_nn.begin() + static_cast<std::ptrdiff_t>(i * k),
                 ref_nn.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        b.assign(emb_nn.begin() + static_cast<std::ptrdiff_t>(i * k),
                 emb_nn.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<std::uint32_t> inter;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
        total += static_cast<double>(inter.size()) / static_cast<double>(k);
    }
    return total / static_cast<double>(n);
}

double spearman_distance_corr(const std::vector<double>& reference, std::size_t ref_dim,
                              const std::vector<double>& emb, std::size_t emb_dim, std::size_t n,
                              std::size_t sample_size, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("spearman_distance_corr: n must be >= 2");
    const std::size_t s = std::min(sample_size, n);

    // seeded subsample without replacement (partial Fisher-Yates)
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(s);
    if (s == n) std::sort(idx.begin(), idx.end());  // full sample: seed-independent

    const auto dr = pair_distances(reference, ref_dim, idx);
    const auto de = pair_distances(emb, emb_dim, idx);
    return pearson(average_ranks(dr), average_ranks(de));
}

double kl_divergence(const SkNNGraph& graph, const std::vector<double>& coords, std::size_t d) {
    const double p = edge_probability(graph);
    const double Z = partition_function(coords, graph.n, d);
    double kl = 0.0;
    for (const auto& [i, j] : graph.edges) {
        double d2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff = coords[i * d + t] - coords[j * d + t];
            d2 += diff * diff;
        }
        const double q = (1.0 / (1.0 + d2)) / Z;
        kl += p * std::log(p / q);
    }
    return kl;
}

}  // namespace cne
