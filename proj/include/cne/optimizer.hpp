#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "cne/model.hpp"
#include "cne/rng.hpp"
#include "cne/sknn_graph.hpp"

namespace cne {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Anneal { linear_to_zero, none };

struct OptimizerConfig {
    std::size_t epochs = 750;
    std::size_t batch_size = 1024;
    double lr = 1.0;
    Anneal anneal = Anneal::linear_to_zero;
    std::size_t early_exag_epochs = 250;   // 0 disables early exaggeration
    std::uint64_t seed = 0;
    std::optional<double> z_lr;            // NCE only; defaults to shared lr
    // Anneal over the full run instead of per phase (the literal single-phase
    // schedule); default is per-phase annealing with a reset after the
    // exaggeration phase.
    bool single_phase_anneal = false;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("OptimizerConfig: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("OptimizerConfig: batch_size must be >= 1");
        if (lr < 0.0) throw std::invalid_argument("OptimizerConfig: lr must be >= 0");
        if (early_exag_epochs > 0 && early_exag_epochs >= epochs)
            throw std::invalid_argument(
                "OptimizerConfig: early_exag_epochs must be < epochs when enabled");
    }
};

// Learnable state: embedding coordinates plus, in NCE mode, the scalar Z.
struct EmbeddingState {
    std::vector<double> coords;  // n * d, row-major
    std::size_t n = 0;
    std::size_t d = 2;
    double Z = 1.0;              // NCE mode only
    std::size_t epoch = 0;
};

// Linear-to-zero learning rate within one phase: lr * (1 - epoch/phase_len).
double lr_schedule(const OptimizerConfig& cfg, std::size_t epoch, std::size_t phase_len);

// Geometric interpolation between the t-SNE partition-function proxy (100n)
// at s=0 and UMAP's default n(n-1)/(2m) at s=1; s may extrapolate outside
// [0,1]. Returned in unordered-pair units.
double zbar_from_slider(std::size_t n, std::size_t m, double s);

// Draws m tails uniformly with replacement from the batch's heads and tails,
// excluding every occurrence of `head`. Draws may repeat and may equal the
// positive tail; pairs (head, head) never occur.
void sample_negatives(std::span<const std::uint32_t> heads, std::span<const std::uint32_t> tails,
                      std::uint32_t head, std::size_t m, Rng& rng,
                      std::vector<std::uint32_t>& out);

// Adds one batch's loss gradient into a full n*d buffer (caller zeroes).
// coords is the n*d embedding lookup; negatives are drawn in-batch via
// sample_negatives. Shared by the coordinate and network training loops.
struct BatchGrad {
    double loss = 0.0;
    double dZ = 0.0;  // NCE mode only
};
BatchGrad accumulate_batch_gradient(const LossSpec& eff, std::span<const std::uint32_t> heads,
                                    std::span<const std::uint32_t> tails, const double* coords,
                                    std::size_t d, double Z, Rng& rng, double* grad);

// Phase-aware learning rate for epoch `epoch` under cfg's annealing policy.
double epoch_lr(const OptimizerConfig& cfg, std::size_t epoch);

// Loss parameters in force at `epoch`: during early exaggeration NEG runs
// with Z̄ = n(n-1)/m and NCE/InfoNCE with m = 5.
LossSpec spec_at_epoch(const LossSpec& spec, const OptimizerConfig& cfg, std::size_t epoch);

// Per-epoch observer: (epoch, effective zbar (NEG/UMAP) or current Z (NCE),
// summed epoch loss, partition function or NaN when not requested).
struct EpochStats {
    std::size_t epoch;
    double zbar_or_Z;
    double loss;
    double partition;
};
using EpochHook = std::function<void(const EpochStats&)>;

// Batched SGD over shuffled directed edges with in-batch negative sampling.
// Early exaggeration (first cfg.early_exag_epochs epochs): NEG runs with
// Z̄ = n(n-1)/m, NCE/InfoNCE with m=5; in NCE mode Z is reinitialized to 1
// when the main phase begins.
EmbeddingState run_training(const SkNNGraph& graph, const EmbeddingState& init,
                            const LossSpec& spec, const OptimizerConfig& cfg,
                            const EpochHook& hook = nullptr, bool track_partition = false);

// Pairwise distance that makes the 3-point toy partition function equal
// zbar: sqrt(6/zbar - 1). Defined for 0 < zbar <= 6.
double equilibrium_distance_toy(double zbar);

}  // namespace cne
