#include "cne/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cne {

double lr_schedule(const OptimizerConfig& cfg, std::size_t epoch, std::size_t phase_len) {
    if (cfg.anneal == Anneal::none) return cfg.lr;
    if (phase_len == 0) return cfg.lr;
    return cfg.lr * (1.0 - static_cast<double>(epoch) / static_cast<double>(phase_len));
}

double zbar_from_slider(std::size_t n, std::size_t m, double s) {
    if (n < 2 || m < 1) throw std::invalid_argument("zbar_from_slider: need n >= 2, m >= 1");
    const double tsne_anchor = 100.0 * static_cast<double>(n);
    const double umap_anchor = static_cast<double>(n) * static_cast<double>(n - 1) /
                               (2.0 * static_cast<double>(m));
    // exact at the endpoints; geometric interpolation elsewhere
    if (s == 0.0) return tsne_anchor;
    if (s == 1.0) return umap_anchor;
    return std::exp((1.0 - s) * std::log(tsne_anchor) + s * std::log(umap_anchor));
}

void sample_negatives(std::span<const std::uint32_t> heads, std::span<const std::uint32_t> tails,
                      std::uint32_t head, std::size_t m, Rng& rng,
                      std::vector<std::uint32_t>& out) {
    const std::size_t b = heads.size();
    bool has_candidate = false;
    for (std::size_t t = 0; t < b && !has_candidate; ++t)
        has_candidate = heads[t] != head || tails[t] != head;
    if (!has_candidate)
        throw std::runtime_error("sample_negatives: every batch index equals the head");

    out.clear();
    while (out.size() < m) {
        const std::uint64_t u = rng.bounded(2 * b);
        const std::uint32_t v = u < b ? heads[u] : tails[u - b];
        if (v == head) continue;  // rejection keeps remaining slots uniform
        out.push_back(v);
    }
}

double equilibrium_distance_toy(double zbar) {
    if (zbar <= 0.0 || zbar > 6.0)
        throw std::domain_error(
            "equilibrium_distance_toy: the Cauchy kernel bounds the 3-point partition "
            "function by 6, so zbar must lie in (0, 6]");
    return std::sqrt(6.0 / zbar - 1.0);
}

namespace {

struct Phase {
    std::size_t index;   // 0 = early exaggeration, 1 = main
    std::size_t epoch;   // epoch index within the phase
    std::size_t length;  // phase length in epochs
};

Phase phase_of(const OptimizerConfig& cfg, std::size_t epoch) {
    const std::size_t ee = cfg.early_exag_epochs;
    if (cfg.single_phase_anneal || ee == 0) return {epoch < ee ? 0u : 1u, epoch, cfg.epochs};
    if (epoch < ee) return {0, epoch, ee};
    return {1, epoch - ee, cfg.epochs - ee};
}

// Effective loss during early exaggeration: NEG gets the strongest
// attraction Z̄ = n(n-1)/m; NCE and InfoNCE drop to m = 5.
LossSpec effective_spec(const LossSpec& spec, bool exaggerating) {
    if (!exaggerating) return spec;
    LossSpec s = spec;
    if (spec.mode == LossMode::NEG) {
        s.zbar = static_cast<double>(spec.n) * static_cast<double>(spec.n - 1) /
                 static_cast<double>(spec.m);
    } else if (spec.mode == LossMode::NCE || spec.mode == LossMode::INFONCE) {
        s.m = 5;
    }
    return s;
}

}  // namespace

double epoch_lr(const OptimizerConfig& cfg, std::size_t epoch) {
    const Phase phase = phase_of(cfg, epoch);
    return lr_schedule(cfg, phase.epoch, phase.length);
}

LossSpec spec_at_epoch(const LossSpec& spec, const OptimizerConfig& cfg, std::size_t epoch) {
    return effective_spec(spec, cfg.early_exag_epochs > 0 && epoch < cfg.early_exag_epochs);
}

BatchGrad accumulate_batch_gradient(const LossSpec& eff, std::span<const std::uint32_t> heads,
                                    std::span<const std::uint32_t> tails, const double* coords,
                                    std::size_t d, double Z, Rng& rng, double* grad) {
    const std::size_t bsz = heads.size();
    BatchGrad out;
    std::vector<std::uint32_t> negs;
    std::vector<double> d2_negs;

    for (std::size_t t = 0; t < bsz; ++t) {
        const std::uint32_t i = heads[t];
        const std::uint32_t j = tails[t];
        const double* ei = coords + i * d;
        const double* ej = coords + j * d;
        double d2_pos = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = ei[c] - ej[c];
            d2_pos += diff * diff;
        }
        sample_negatives(heads, tails, i, eff.m, rng, negs);

        if (eff.mode == LossMode::INFONCE) {
            d2_negs.resize(negs.size());
            for (std::size_t u = 0; u < negs.size(); ++u) {
                const double* en = coords + negs[u] * d;
                double d2 = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = ei[c] - en[c];
                    d2 += diff * diff;
                }
                d2_negs[u] = d2;
            }
            out.loss += infonce_loss(eff, d2_pos, d2_negs);
            const InfonceGradient ig = infonce_grad(eff, d2_pos, d2_negs);
            for (std::size_t c = 0; c < d; ++c) {
                const double disp = (ei[c] - ej[c]) * ig.coeff_pos;
                grad[i * d + c] += disp;
                grad[j * d + c] -= disp;
            }
            for (std::size_t u = 0; u < negs.size(); ++u) {
                const double* en = coords + negs[u] * d;
                for (std::size_t c = 0; c < d; ++c) {
                    const double disp = (ei[c] - en[c]) * ig.coeff_negs[u];
                    grad[i * d + c] += disp;
                    grad[negs[u] * d + c] -= disp;
                }
            }
            continue;
        }

        out.loss += attr_loss(eff, d2_pos, Z);
        const PairGradient ag = pair_grad(eff, LossTerm::attr, d2_pos, Z);
        out.dZ += ag.dZ;
        for (std::size_t c = 0; c < d; ++c) {
            const double disp = (ei[c] - ej[c]) * ag.coeff;
            grad[i * d + c] += disp;
            grad[j * d + c] -= disp;
        }
        for (std::uint32_t jn : negs) {
            const double* en = coords + jn * d;
            double d2 = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = ei[c] - en[c];
                d2 += diff * diff;
            }
            out.loss += rep_loss(eff, d2, Z);
            const PairGradient rg = pair_grad(eff, LossTerm::rep, d2, Z);
            out.dZ += rg.dZ;
            for (std::size_t c = 0; c < d; ++c) {
                const double disp = (ei[c] - en[c]) * rg.coeff;
                grad[i * d + c] += disp;
                grad[jn * d + c] -= disp;
            }
        }
    }
    return out;
}

EmbeddingState run_training(const SkNNGraph& graph, const EmbeddingState& init,
                            const LossSpec& spec, const OptimizerConfig& cfg,
                            const EpochHook& hook, bool track_partition) {
    spec.validate();
    cfg.validate();
    if (init.n != graph.n || init.coords.size() != init.n * init.d)
        throw std::invalid_argument("run_training: init coordinates do not match the graph");
    if (spec.n != graph.n) throw std::invalid_argument("run_training: spec.n does not match graph");

    EmbeddingState state = init;
    if (spec.mode == LossMode::NCE) state.Z = 1.0;

    const std::size_t n = graph.n;
    const std::size_t d = state.d;
    const std::size_t E = graph.edges.size();
    const std::size_t b = cfg.batch_size;

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges = graph.edges;
    std::vector<double> grad(n * d, 0.0);
    std::vector<std::uint32_t> heads(b), tails(b);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const Phase phase = phase_of(cfg, epoch);
        const bool exaggerating = cfg.early_exag_epochs > 0 && epoch < cfg.early_exag_epochs;
        const LossSpec eff = effective_spec(spec, exaggerating);
        if (spec.mode == LossMode::NCE && cfg.early_exag_epochs > 0 &&
            epoch == cfg.early_exag_epochs) {
            state.Z = 1.0;  // reinitialized at the start of the main phase
        }
        const double eta = lr_schedule(cfg, phase.epoch, phase.length);
        const double eta_z =
            cfg.z_lr ? *cfg.z_lr * (cfg.anneal == Anneal::none
                                        ? 1.0
                                        : 1.0 - static_cast<double>(phase.epoch) /
                                                    static_cast<double>(phase.length))
                     : eta;

        Rng shuffle_rng = Rng::stream(cfg.seed, epoch);
        shuffle_rng.shuffle(edges);

        double epoch_loss = 0.0;
        const std::size_t nbatches = (E + b - 1) / b;
        for (std::size_t batch = 0; batch < nbatches; ++batch) {
            const std::size_t lo = batch * b;
            const std::size_t bsz = std::min(b, E - lo);
            for (std::size_t t = 0; t < bsz; ++t) {
                heads[t] = edges[lo + t].first;
                tails[t] = edges[lo + t].second;
            }
            const std::span<const std::uint32_t> hspan(heads.data(), bsz);
            const std::span<const std::uint32_t> tspan(tails.data(), bsz);

            std::fill(grad.begin(), grad.end(), 0.0);
            Rng rng = Rng::stream(cfg.seed, epoch, batch);
            const BatchGrad bg = accumulate_batch_gradient(eff, hspan, tspan, state.coords.data(),
                                                           d, state.Z, rng, grad.data());
            epoch_loss += bg.loss;

            // one aggregate SGD step per batch
            for (std::size_t u = 0; u < n * d; ++u) state.coords[u] -= eta * grad[u];
            if (spec.mode == LossMode::NCE) {
                state.Z -= eta_z * bg.dZ;
                state.Z = std::max(state.Z, 1e-12);
            }

            // 1e154 guard: beyond this, squared distances overflow to inf in
            // the next batch, so the run has already diverged
            for (std::size_t u = 0; u < n * d; ++u) {
                if (!std::isfinite(state.coords[u]) || std::abs(state.coords[u]) > 1e154)
                    throw DivergenceError("non-finite coordinate at epoch " +
                                          std::to_string(epoch) + ", batch " +
                                          std::to_string(batch));
            }
        }

        state.epoch = epoch + 1;
        if (hook) {
            EpochStats stats;
            stats.epoch = epoch;
            stats.zbar_or_Z = spec.mode == LossMode::NCE ? state.Z : eff.zbar;
            stats.loss = epoch_loss;
            stats.partition = track_partition ? partition_function(state.coords, n, d)
                                              : std::numeric_limits<double>::quiet_NaN();
            hook(stats);
        }
    }
    return state;
}

}  // namespace cne
