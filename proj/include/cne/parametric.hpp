#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cne/data_matrix.hpp"
#include "cne/optimizer.hpp"
#include "cne/sknn_graph.hpp"

namespace cne {

// Fully connected network mapping data rows to embedding coordinates.
// Hidden layers use the rectifier, the output layer is linear.
struct Network {
    std::vector<std::size_t> dims;       // [D, hidden..., d]
    std::vector<Eigen::MatrixXd> W;      // per layer, out x in
    std::vector<Eigen::VectorXd> bias;   // per layer, out

    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }
    std::size_t layers() const { return W.size(); }
    bool finite() const;

    // Seeded init: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
    static Network init(const std::vector<std::size_t>& dims, std::uint64_t seed);
};

// rows: batch x D -> batch x d.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& rows);

struct NetworkGrad {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> bias;
};

// Exact gradient of sum_r <output_grads[r], forward(net, rows[r])> with
// respect to every weight and bias.
NetworkGrad backward(const Network& net, const Eigen::MatrixXd& rows,
                     const Eigen::MatrixXd& output_grads);

struct AdamState {
    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double stab = 1e-8;

    static AdamState init(const Network& net);
};

// Bias-corrected Adam update; increments state.step.
void adam_step(Network& net, const NetworkGrad& grad, AdamState& state, double lr);

// Embeds every data row; returns n x output_dim row-major coordinates.
std::vector<double> embed_all(const Network& net, const DataMatrix& data);

struct ParametricResult {
    Network net;
    double Z = 1.0;  // final learnable normalization (NCE mode)
};

// Batched Adam training over shuffled directed edges with in-batch negative
// sampling; shares the per-pair gradient path with the coordinate optimizer.
// hidden_width sizes the three hidden layers.
ParametricResult train_parametric(const SkNNGraph& graph, const DataMatrix& data,
                                  const LossSpec& spec, const OptimizerConfig& cfg,
                                  std::size_t hidden_width = 100, std::size_t out_dim = 2,
                                  const EpochHook& hook = nullptr,
                                  bool track_partition = false);

// Checkpoint: "CNEN" magic, u32 layer count, u32 dims, then per layer the
// row-major weights and biases as little-endian f64.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace cne
