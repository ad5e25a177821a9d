#include "cne/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "cne/rng.hpp"

namespace cne {

bool Network::finite() const {
    for (const auto& w : W)
        if (!w.allFinite()) return false;
    for (const auto& b : bias)
        if (!b.allFinite()) return false;
    return true;
}

Network Network::init(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("Network: need at least input and output dims");
    for (std::size_t v : dims)
        if (v < 1) throw std::invalid_argument("Network: layer dims must be >= 1");
    Network net;
    net.dims = dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(dims[l]);
        const auto out = static_cast<Eigen::Index>(dims[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        Eigen::MatrixXd w(out, in);
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < in; ++c) w(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
        net.W.push_back(std::move(w));
        net.bias.push_back(Eigen::VectorXd::Zero(out));
    }
    return net;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& rows) {
    if (static_cast<std::size_t>(rows.cols()) != net.input_dim())
        throw std::invalid_argument("forward: input width does not match the network");
    Eigen::MatrixXd act = rows;
    for (std::size_t l = 0; l < net.layers(); ++l) {
        act = (act * net.W[l].transpose()).rowwise() + net.bias[l].transpose();
        if (l + 1 < net.layers()) act = act.cwiseMax(0.0);
    }
    return act;
}

NetworkGrad backward(const Network& net, const Eigen::MatrixXd& rows,
                     const Eigen::MatrixXd& output_grads) {
    if (static_cast<std::size_t>(rows.cols()) != net.input_dim())
        throw std::invalid_argument("backward: input width does not match the network");
    if (output_grads.rows() != rows.rows() ||
        static_cast<std::size_t>(output_grads.cols()) != net.output_dim())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    const std::size_t L = net.layers();
    std::vector<Eigen::MatrixXd> acts(L + 1);  // post-activation per layer
    acts[0] = rows;
    for (std::size_t l = 0; l < L; ++l) {
        acts[l + 1] = (acts[l] * net.W[l].transpose()).rowwise() + net.bias[l].transpose();
        if (l + 1 < L) acts[l + 1] = acts[l + 1].cwiseMax(0.0);
    }

    NetworkGrad grad;
    grad.W.resize(L);
    grad.bias.resize(L);
    Eigen::MatrixXd delta = output_grads;
    for (std::size_t l = L; l-- > 0;) {
        grad.W[l] = delta.transpose() * acts[l];
        grad.bias[l] = delta.colwise().sum();
        if (l > 0) {
            delta = delta * net.W[l];
            // rectifier passes gradient only where the activation is positive
            delta = (acts[l].array() > 0.0).cast<double>() * delta.array();
        }
    }
    return grad;
}

AdamState AdamState::init(const Network& net) {
    AdamState s;
    for (std::size_t l = 0; l < net.layers(); ++l) {
        s.mW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
        s.vW.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
        s.mb.push_back(Eigen::VectorXd::Zero(net.bias[l].size()));
        s.vb.push_back(Eigen::VectorXd::Zero(net.bias[l].size()));
    }
    return s;
}

void adam_step(Network& net, const NetworkGrad& grad, AdamState& state, double lr) {
    if (grad.W.size() != net.layers()) throw std::invalid_argument("adam_step: layer mismatch");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        state.mW[l] = state.beta1 * state.mW[l] + (1.0 - state.beta1) * grad.W[l];
        state.vW[l] = state.beta2 * state.vW[l].array() +
                      (1.0 - state.beta2) * grad.W[l].array().square();
        net.W[l].array() -= lr * (state.mW[l].array() / c1) /
                            ((state.vW[l].array() / c2).sqrt() + state.stab);
        state.mb[l] = state.beta1 * state.mb[l] + (1.0 - state.beta1) * grad.bias[l];
        state.vb[l] = state.beta2 * state.vb[l].array() +
                      (1.0 - state.beta2) * grad.bias[l].array().square();
        net.bias[l].array() -= lr * (state.mb[l].array() / c1) /
                               ((state.vb[l].array() / c2).sqrt() + state.stab);
    }
}

std::vector<double> embed_all(const Network& net, const DataMatrix& data) {
    if (data.D != net.input_dim())
        throw std::invalid_argument("embed_all: data width does not match the network");
    const std::size_t d = net.output_dim();
    std::vector<double> out(data.n * d);
    const std::size_t block = 1024;
    for (std::size_t lo = 0; lo < data.n; lo += block) {
        const std::size_t hi = std::min(lo + block, data.n);
        Eigen::MatrixXd rows = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                              Eigen::Dynamic, Eigen::RowMajor>>(
            data.values.data() + lo * data.D, static_cast<Eigen::Index>(hi - lo),
            static_cast<Eigen::Index>(data.D));
        const Eigen::MatrixXd emb = forward(net, rows);
        for (std::size_t r = 0; r < hi - lo; ++r)
            for (std::size_t c = 0; c < d; ++c)
                out[(lo + r) * d + c] = emb(static_cast<Eigen::Index>(r),
                                            static_cast<Eigen::Index>(c));
    }
    return out;
}

ParametricResult train_parametric(const SkNNGraph& graph, const DataMatrix& data,
                                  const LossSpec& spec, const OptimizerConfig& cfg,
                                  std::size_t hidden_width, std::size_t out_dim,
                                  const EpochHook& hook, bool track_partition) {
    spec.validate();
    cfg.validate();
    if (data.n != graph.n)
        throw std::invalid_argument("train_parametric: data row count does not match the graph");
    if (spec.n != graph.n)
        throw std::invalid_argument("train_parametric: spec.n does not match graph");

    const std::size_t n = graph.n;
    const std::size_t d = out_dim;
    Network net = Network::init({data.D, hidden_width, hidden_width, hidden_width, d}, cfg.seed);
    AdamState adam = AdamState::init(net);
    double Z = 1.0;

    const std::size_t E = graph.edges.size();
    const std::size_t b = cfg.batch_size;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges = graph.edges;
    std::vector<std::uint32_t> heads(b), tails(b), uniq;
    std::vector<double> coords(n * d, 0.0), grad(n * d, 0.0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const LossSpec eff = spec_at_epoch(spec, cfg, epoch);
        if (spec.mode == LossMode::NCE && cfg.early_exag_epochs > 0 &&
            epoch == cfg.early_exag_epochs) {
            Z = 1.0;  // reinitialized at the start of the main phase
        }
        const double eta = epoch_lr(cfg, epoch);
        const double eta_z = cfg.z_lr ? *cfg.z_lr * (cfg.lr > 0.0 ? eta / cfg.lr : 0.0) : eta;

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

            // unique nodes the batch can touch (heads, tails, and in-batch negatives)
            uniq.assign(heads.begin(), heads.begin() + static_cast<std::ptrdiff_t>(bsz));
            uniq.insert(uniq.end(), tails.begin(), tails.begin() + static_cast<std::ptrdiff_t>(bsz));
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

            Eigen::MatrixXd rows(static_cast<Eigen::Index>(uniq.size()),
                                 static_cast<Eigen::Index>(data.D));
            for (std::size_t r = 0; r < uniq.size(); ++r)
                for (std::size_t c = 0; c < data.D; ++c)
                    rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        data.at(uniq[r], c);
            const Eigen::MatrixXd emb = forward(net, rows);
            for (std::size_t r = 0; r < uniq.size(); ++r) {
                for (std::size_t c = 0; c < d; ++c)
                    coords[uniq[r] * d + c] = emb(static_cast<Eigen::Index>(r),
                                                  static_cast<Eigen::Index>(c));
                std::fill(grad.begin() + static_cast<std::ptrdiff_t>(uniq[r] * d),
                          grad.begin() + static_cast<std::ptrdiff_t>((uniq[r] + 1) * d), 0.0);
            }

            Rng rng = Rng::stream(cfg.seed, epoch, batch);
            const BatchGrad bg =
                accumulate_batch_gradient(eff, hspan, tspan, coords.data(), d, Z, rng, grad.data());
            epoch_loss += bg.loss;

            Eigen::MatrixXd output_grads(static_cast<Eigen::Index>(uniq.size()),
                                         static_cast<Eigen::Index>(d));
            for (std::size_t r = 0; r < uniq.size(); ++r)
                for (std::size_t c = 0; c < d; ++c)
                    output_grads(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        grad[uniq[r] * d + c];

            const NetworkGrad ng = backward(net, rows, output_grads);
            adam_step(net, ng, adam, eta);
            if (spec.mode == LossMode::NCE) {
                Z -= eta_z * bg.dZ;
                Z = std::max(Z, 1e-12);
            }

            if (!net.finite())
                throw DivergenceError("non-finite network weight at epoch " +
                                      std::to_string(epoch) + ", batch " + std::to_string(batch));
        }

        if (hook) {
            EpochStats stats;
            stats.epoch = epoch;
            stats.zbar_or_Z = spec.mode == LossMode::NCE ? Z : eff.zbar;
            stats.loss = epoch_loss;
            if (track_partition) {
                const std::vector<double> all = embed_all(net, data);
                stats.partition = partition_function(all, n, d);
            } else {
                stats.partition = std::numeric_limits<double>::quiet_NaN();
            }
            hook(stats);
        }
    }
    return {std::move(net), Z};
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw FormatError("network checkpoint: truncated file");
    return static_cast<std::uint32_t>(buf[0]) | static_cast<std::uint32_t>(buf[1]) << 8 |
           static_cast<std::uint32_t>(buf[2]) << 16 | static_cast<std::uint32_t>(buf[3]) << 24;
}

void write_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::ifstream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8))
        throw FormatError("network checkpoint: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write("CNEN", 4);
    write_u32(out, static_cast<std::uint32_t>(net.dims.size()));
    for (std::size_t v : net.dims) write_u32(out, static_cast<std::uint32_t>(v));
    for (std::size_t l = 0; l < net.layers(); ++l) {
        for (Eigen::Index r = 0; r < net.W[l].rows(); ++r)
            for (Eigen::Index c = 0; c < net.W[l].cols(); ++c) write_f64(out, net.W[l](r, c));
        for (Eigen::Index r = 0; r < net.bias[l].size(); ++r) write_f64(out, net.bias[l](r));
    }
    if (!out) throw IoError("write failed: " + path);
}

Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "CNEN", 4) != 0)
        throw FormatError("network checkpoint: bad magic");
    const std::uint32_t ndims = read_u32(in);
    if (ndims < 2 || ndims > 64) throw FormatError("network checkpoint: bad layer count");
    std::vector<std::size_t> dims(ndims);
    for (auto& v : dims) {
        v = read_u32(in);
        if (v < 1) throw FormatError("network checkpoint: bad layer dim");
    }
    Network net;
    net.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd w(static_cast<Eigen::Index>(dims[l + 1]),
                          static_cast<Eigen::Index>(dims[l]));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = read_f64(in);
        Eigen::VectorXd b(static_cast<Eigen::Index>(dims[l + 1]));
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = read_f64(in);
        net.W.push_back(std::move(w));
        net.bias.push_back(std::move(b));
    }
    if (!net.finite()) throw ValidationError("network checkpoint: non-finite weight");
    return net;
}

}  // namespace cne
