#pragma once

#include "cne/sknn_graph.hpp"

namespace cne {

struct TsneConfig {
    std::size_t iterations = 750;
    double lr = 0.0;                 // 0: use n/12
    double exaggeration = 12.0;      // attraction prefactor rho
    std::size_t exag_iterations = 250;

    void validate() const {
        if (exaggeration < 1.0) throw std::invalid_argument("TsneConfig: exaggeration must be >= 1");
        if (exag_iterations > iterations)
            throw std::invalid_argument("TsneConfig: exag_iterations must be <= iterations");
    }
};

// Exact full gradient of the MLE loss with p uniform over directed skNN
// edges and repulsion over all ordered pairs. `exag` multiplies the p term.
std::vector<double> tsne_gradient(const SkNNGraph& graph, const std::vector<double>& coords,
                                  std::size_t d, double exag = 1.0);

// Exact MLE loss: -sum p log(phi) + log(sum phi).
double tsne_loss(const SkNNGraph& graph, const std::vector<double>& coords, std::size_t d);

struct TsneResult {
    std::vector<double> coords;
    double Z_tsne = 0.0;  // partition function of the final coordinates
};

// Plain gradient descent (no momentum/gains) with early exaggeration.
// Guarded at n <= 20000 because every iteration is O(n^2).
TsneResult run_reference_tsne(const SkNNGraph& graph, const std::vector<double>& init,
                              std::size_t d, const TsneConfig& cfg);

}  // namespace cne
