#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cne {

enum class LossMode { NEG, NCE, INFONCE, UMAP };
enum class Kernel { cauchy, inverse_square };

// Per-pair loss configuration. zbar is in directed-pair units: the noise
// constant entering the NEG denominators is zbar * m / (n * (n - 1)).
struct LossSpec {
    LossMode mode = LossMode::NEG;
    double zbar = 1.0;      // fixed normalization, NEG mode
    std::size_t m = 5;      // noise samples per positive pair
    double eps = 1e-10;     // log-argument clip lower bound
    std::size_t n = 0;      // point count
    Kernel kernel = Kernel::cauchy;

    void validate() const {
        if (zbar <= 0.0) throw std::invalid_argument("LossSpec: zbar must be positive");
        if (m < 1) throw std::invalid_argument("LossSpec: m must be >= 1");
        if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("LossSpec: eps must lie in (0,1)");
        if (n < 2) throw std::invalid_argument("LossSpec: n must be >= 2");
    }

    // Z̄ m / (n(n-1)), the uniform-noise denominator constant of NEG mode.
    double noise_const() const {
        return zbar * static_cast<double>(m) /
               (static_cast<double>(n) * static_cast<double>(n - 1));
    }
};

enum class LossTerm { attr, rep };

// Gradient of a per-pair loss term: d/de_i = coeff * (e_i - e_j),
// d/de_j = -coeff * (e_i - e_j). dZ is nonzero in NCE mode only.
struct PairGradient {
    double coeff = 0.0;
    double dZ = 0.0;
};

double cauchy(double d2);          // 1 / (1 + d2)
double inverse_square(double d2);  // 1 / d2, d2 > 0
double kernel_value(Kernel k, double d2);

// Attractive / repulsive per-pair losses (NEG, NCE, UMAP modes).
// Log arguments are clipped to [eps, 1]. NCE mode reads the current
// learnable normalization Z.
double attr_loss(const LossSpec& spec, double d2, double Z = 1.0);
double rep_loss(const LossSpec& spec, double d2, double Z = 1.0);

// InfoNCE tuple loss: -log(q+ / (q+ + sum of negative kernels)).
double infonce_loss(const LossSpec& spec, double d2_pos, std::span<const double> d2_negs);

// Analytic gradient coefficient of the clipped per-pair loss (zero wherever
// the clip is active).
PairGradient pair_grad(const LossSpec& spec, LossTerm term, double d2, double Z = 1.0);

// InfoNCE tuple gradient: coefficient for the positive pair and one per
// negative pair, all sharing the clipped-softmax denominator.
struct InfonceGradient {
    double coeff_pos = 0.0;
    std::vector<double> coeff_negs;
};
InfonceGradient infonce_grad(const LossSpec& spec, double d2_pos,
                             std::span<const double> d2_negs);

// Z(θ) = sum over ordered pairs k != l of cauchy(|e_k - e_l|^2).
// Deterministic blockwise reduction; parallel-safe.
double partition_function(const std::vector<double>& coords, std::size_t n, std::size_t d);

}  // namespace cne
