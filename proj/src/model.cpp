#include "cne/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cne/parallel.hpp"

namespace cne {
namespace {

double clip(double x, double eps) { return std::clamp(x, eps, 1.0); }

bool clip_active(double x, double eps) { return x < eps || x > 1.0; }

// Denominator constant of the binary-classification modes:
// NEG uses Z̄m/(n(n-1)) (uniform-noise approximation), NCE uses mZ after
// multiplying the posterior q/Z / (q/Z + m) through by Z.
double denom_const(const LossSpec& spec, double Z) {
    if (spec.mode == LossMode::NCE) {
        if (Z <= 0.0) throw std::invalid_argument("NCE mode requires Z > 0");
        return static_cast<double>(spec.m) * Z;
    }
    return spec.noise_const();
}

void check_d2(double d2) {
    if (!(d2 >= 0.0) || !std::isfinite(d2))
        throw std::invalid_argument("squared distance must be finite and >= 0");
}

// q/(q+c) without forming q, so inverse_square stays finite at d2 = 0:
// cauchy:         q/(q+c) = 1 / (1 + c(1 + d2))
// inverse_square: q/(q+c) = 1 / (1 + c d2)
double posterior_ratio(Kernel k, double d2, double c) {
    return k == Kernel::cauchy ? 1.0 / (1.0 + c * (1.0 + d2)) : 1.0 / (1.0 + c * d2);
}

double complement_ratio(Kernel k, double d2, double c) {  // c/(q+c)
    return k == Kernel::cauchy ? c * (1.0 + d2) / (1.0 + c * (1.0 + d2))
                               : c * d2 / (1.0 + c * d2);
}

}  // namespace

double cauchy(double d2) {
    check_d2(d2);
    return 1.0 / (1.0 + d2);
}

double inverse_square(double d2) {
    check_d2(d2);
    if (d2 == 0.0) throw std::domain_error("inverse_square diverges at d2 = 0");
    return 1.0 / d2;
}

double kernel_value(Kernel k, double d2) {
    return k == Kernel::cauchy ? cauchy(d2) : inverse_square(d2);
}

double attr_loss(const LossSpec& spec, double d2, double Z) {
    check_d2(d2);
    if (spec.mode == LossMode::INFONCE)
        throw std::logic_error("InfoNCE is a tuple loss; use infonce_loss");
    if (spec.mode == LossMode::UMAP) {
        // pair at distance zero under inverse_square: q -> inf, clip at 1
        const double q = (spec.kernel == Kernel::inverse_square && d2 == 0.0)
                             ? std::numeric_limits<double>::infinity()
                             : kernel_value(spec.kernel, d2);
        return -std::log(clip(q, spec.eps));
    }
    return -std::log(clip(posterior_ratio(spec.kernel, d2, denom_const(spec, Z)), spec.eps));
}

double rep_loss(const LossSpec& spec, double d2, double Z) {
    check_d2(d2);
    if (spec.mode == LossMode::INFONCE)
        throw std::logic_error("InfoNCE is a tuple loss; use infonce_loss");
    if (spec.mode == LossMode::UMAP) {
        // cancellation-free 1 - q: d2/(1+d2) for the Cauchy kernel,
        // (d2-1)/d2 for inverse_square (non-positive at d2 <= 1, so clipped)
        const double one_minus_q = spec.kernel == Kernel::cauchy
                                       ? d2 / (1.0 + d2)
                                       : (d2 == 0.0 ? 0.0 : (d2 - 1.0) / d2);
        return -std::log(clip(one_minus_q, spec.eps));
    }
    return -std::log(clip(complement_ratio(spec.kernel, d2, denom_const(spec, Z)), spec.eps));
}

double infonce_loss(const LossSpec& spec, double d2_pos, std::span<const double> d2_negs) {
    if (d2_negs.empty()) throw std::invalid_argument("infonce_loss: empty negative list");
    const double qp = kernel_value(spec.kernel, d2_pos);
    double sum = 0.0;
    for (double d2 : d2_negs) sum += kernel_value(spec.kernel, d2);
    return -std::log(clip(qp / (qp + sum), spec.eps));
}

// Both kernels satisfy dq/d(d2) = -q^2, so the chain rule gives the same
// closed forms in terms of q. coeff = 2 * dL/d(d2); gradients are zero
// wherever the clip is active (subgradient of the clipped loss).
PairGradient pair_grad(const LossSpec& spec, LossTerm term, double d2, double Z) {
    check_d2(d2);
    PairGradient g;

    if (spec.mode == LossMode::UMAP) {
        if (spec.kernel == Kernel::inverse_square && d2 == 0.0) return g;  // clipped
        const double q = kernel_value(spec.kernel, d2);
        if (term == LossTerm::attr) {
            if (!clip_active(q, spec.eps)) g.coeff = 2.0 * q;
        } else {
            if (!clip_active(1.0 - q, spec.eps)) g.coeff = -2.0 * q * q / (1.0 - q);
        }
        return g;
    }
    if (spec.mode == LossMode::INFONCE)
        throw std::logic_error("InfoNCE is a tuple loss; use infonce_grad");

    const double c = denom_const(spec, Z);
    const double ratio = posterior_ratio(spec.kernel, d2, c);
    if (term == LossTerm::attr) {
        if (clip_active(ratio, spec.eps)) return g;
        g.coeff = 2.0 * c * ratio;  // 2cq/(q+c), finite even as q -> inf
        if (spec.mode == LossMode::NCE) {
            const double q = (spec.kernel == Kernel::inverse_square && d2 == 0.0)
                                 ? std::numeric_limits<double>::infinity()
                                 : kernel_value(spec.kernel, d2);
            g.dZ = static_cast<double>(spec.m) / (q + c);  // -> 0 as q -> inf
        }
    } else {
        if (clip_active(complement_ratio(spec.kernel, d2, c), spec.eps)) return g;  // covers d2=0
        const double q = kernel_value(spec.kernel, d2);
        g.coeff = -2.0 * q * q / (q + c);
        if (spec.mode == LossMode::NCE) g.dZ = -q / (Z * (q + c));
    }
    return g;
}

InfonceGradient infonce_grad(const LossSpec& spec, double d2_pos,
                             std::span<const double> d2_negs) {
    if (d2_negs.empty()) throw std::invalid_argument("infonce_grad: empty negative list");
    const double qp = kernel_value(spec.kernel, d2_pos);
    InfonceGradient g;
    g.coeff_negs.resize(d2_negs.size(), 0.0);
    std::vector<double> qn(d2_negs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < d2_negs.size(); ++i) {
        qn[i] = kernel_value(spec.kernel, d2_negs[i]);
        sum += qn[i];
    }
    const double denom = qp + sum;
    if (clip_active(qp / denom, spec.eps)) return g;  // subgradient zero
    g.coeff_pos = 2.0 * sum * qp / denom;
    for (std::size_t i = 0; i < qn.size(); ++i) g.coeff_negs[i] = -2.0 * qn[i] * qn[i] / denom;
    return g;
}

double partition_function(const std::vector<double>& coords, std::size_t n, std::size_t d) {
    if (n < 2) throw std::invalid_argument("partition_function: n must be >= 2");
    constexpr std::size_t kBlock = 64;
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> block_sums(nblocks, 0.0);
    parallel_blocks(n, kBlock, [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double* ei = coords.data() + i * d;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double* ej = coords.data() + j * d;
                double d2 = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff = ei[t] - ej[t];
                    d2 += diff * diff;
                }
                acc += 1.0 / (1.0 + d2);
            }
        }
        block_sums[lo / kBlock] = acc;
    });
    double total = 0.0;
    for (double s : block_sums) total += s;
    return 2.0 * total;  // ordered pairs
}

}  // namespace cne
