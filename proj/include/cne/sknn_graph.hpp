#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cne/data_matrix.hpp"

namespace cne {

// Binary symmetric kNN graph as a directed edge list.
// Invariants: (i,j) present iff (j,i) present; no self loops or duplicate
// directed edges; every out-degree >= k; n*k <= E <= 2*n*k.
struct SkNNGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // directed
    std::vector<std::uint32_t> degrees;                          // out-degrees

    std::size_t edge_count() const { return edges.size(); }
};

// Exact brute-force k nearest neighbors (Euclidean, self excluded, distance
// ties broken by smaller index), symmetrized by union with the transpose.
SkNNGraph build_sknn(const DataMatrix& X, std::size_t k);

// Same, for a bare row-major coordinate buffer.
SkNNGraph build_sknn(const std::vector<double>& coords, std::size_t n, std::size_t dim,
                     std::size_t k);

// Uniform probability per directed edge, p(ij) = 1/E.
double edge_probability(const SkNNGraph& g);

// Cache file: "CNEG" + n,k,E (LE u32) + E x (u32,u32) edge pairs.
void save_graph(const SkNNGraph& g, const std::string& path);
SkNNGraph load_graph(const std::string& path);

}  // namespace cne
