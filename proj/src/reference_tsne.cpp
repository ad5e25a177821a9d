#include "cne/reference_tsne.hpp"

#include <cmath>

#include "cne/model.hpp"
#include "cne/optimizer.hpp"
#include "cne/parallel.hpp"

namespace cne {

std::vector<double> tsne_gradient(const SkNNGraph& graph, const std::vector<double>& coords,
                                  std::size_t d, double exag) {
    const std::size_t n = graph.n;
    if (n < 2) throw std::invalid_argument("tsne_gradient: n must be >= 2");
    const double Z = partition_function(coords, n, d);
    const double p = edge_probability(graph);

    std::vector<double> grad(n * d, 0.0);

    // repulsion over all ordered pairs: +(4/Z) sum_j phi^2 (e_i - e_j)
    parallel_blocks(n, 64, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* ei = coords.data() + i * d;
            double* gi = grad.data() + i * d;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* ej = coords.data() + j * d;
                double d2 = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff = ei[t] - ej[t];
                    d2 += diff * diff;
                }
                const double phi = 1.0 / (1.0 + d2);
                const double w = -4.0 / Z * phi * phi;
                for (std::size_t t = 0; t < d; ++t) gi[t] += w * (ei[t] - ej[t]);
            }
        }
    });

    // attraction along skNN edges; each unordered pair appears as two
    // directed edges, handled edge by edge (2 p phi per directed edge)
    for (const auto& [i, j] : graph.edges) {
        const double* ei = coords.data() + i * d;
        const double* ej = coords.data() + j * d;
        double d2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff = ei[t] - ej[t];
            d2 += diff * diff;
        }
        const double phi = 1.0 / (1.0 + d2);
        const double w = 2.0 * exag * p * phi;
        for (std::size_t t = 0; t < d; ++t) {
            grad[i * d + t] += w * (ei[t] - ej[t]);
            grad[j * d + t] -= w * (ei[t] - ej[t]);
        }
    }
    return grad;
}

double tsne_loss(const SkNNGraph& graph, const std::vector<double>& coords, std::size_t d) {
    const double p = edge_probability(graph);
    double attr = 0.0;
    for (const auto& [i, j] : graph.edges) {
        double d2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff = coords[i * d + t] - coords[j * d + t];
            d2 += diff * diff;
        }
        attr -= p * std::log(1.0 / (1.0 + d2));
    }
    return attr + std::log(partition_function(coords, graph.n, d));
}

TsneResult run_reference_tsne(const SkNNGraph& graph, const std::vector<double>& init,
                              std::size_t d, const TsneConfig& cfg) {
    cfg.validate();
    if (graph.n > 20000)
        throw std::invalid_argument("run_reference_tsne: n exceeds the 20000-point guard");
    if (init.size() != graph.n * d)
        throw std::invalid_argument("run_reference_tsne: init size mismatch");

    const double lr = cfg.lr > 0.0 ? cfg.lr : static_cast<double>(graph.n) / 12.0;
    TsneResult result;
    result.coords = init;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const double exag = it < cfg.exag_iterations ? cfg.exaggeration : 1.0;
        const std::vector<double> grad = tsne_gradient(graph, result.coords, d, exag);
        for (std::size_t u = 0; u < result.coords.size(); ++u) {
            result.coords[u] -= lr * grad[u];
            if (!std::isfinite(result.coords[u]))
                throw DivergenceError("reference t-SNE diverged at iteration " +
                                      std::to_string(it));
        }
    }
    result.Z_tsne = partition_function(result.coords, graph.n, d);
    return result;
}

}  // namespace cne
