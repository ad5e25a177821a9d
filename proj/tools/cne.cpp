// Command-line driver for the contrastive neighbor-embedding engine.
//
// Subcommands: embed, spectrum, metrics, reference-tsne, transform, toy,
// plus `replay <run.json>` to re-execute a previous run from its resolved
// configuration. Exit codes: 1 usage error, 2 data error, 3 divergence.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "cne/data_matrix.hpp"
#include "cne/metrics.hpp"
#include "cne/model.hpp"
#include "cne/optimizer.hpp"
#include "cne/parallel.hpp"
#include "cne/parametric.hpp"
#include "cne/pca.hpp"
#include "cne/reference_tsne.hpp"
#include "cne/rng.hpp"
#include "cne/sknn_graph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::vector<std::string>& args);  // forward, used by replay

cne::MatrixFormat parse_format(const std::string& s) {
    if (s == "csv") return cne::MatrixFormat::csv;
    if (s == "raw_f32") return cne::MatrixFormat::raw_f32;
    if (s == "idx") return cne::MatrixFormat::idx;
    throw CLI::ValidationError("--format", "unknown format: " + s);
}

cne::LossMode parse_mode(const std::string& s) {
    if (s == "neg") return cne::LossMode::NEG;
    if (s == "nce") return cne::LossMode::NCE;
    if (s == "infonce") return cne::LossMode::INFONCE;
    if (s == "umap") return cne::LossMode::UMAP;
    throw CLI::ValidationError("--mode", "unknown mode: " + s);
}

cne::Kernel parse_kernel(const std::string& s) {
    if (s == "cauchy") return cne::Kernel::cauchy;
    if (s == "inverse_square") return cne::Kernel::inverse_square;
    throw CLI::ValidationError("--kernel", "unknown kernel: " + s);
}

std::vector<int> load_labels(const std::string& path) {
    try {
        return cne::load_idx_labels(path);
    } catch (const cne::FormatError&) {
        // fall through: plain text, one integer label per line
    }
    std::ifstream in(path);
    if (!in) throw cne::IoError("cannot open labels file: " + path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        labels.push_back(std::stoi(line));
    }
    return labels;
}

// Shared options for commands that load a data matrix.
struct InputOpts {
    std::string input;
    std::string format = "csv";
    bool csv_header = false;
    std::string labels_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "input data matrix")->required();
        cmd->add_option("--format", format, "input format: csv, raw_f32, idx")
            ->check(CLI::IsMember({"csv", "raw_f32", "idx"}));
        cmd->add_flag("--csv-header", csv_header, "skip one header row in csv input");
        cmd->add_option("--labels", labels_path,
                        "per-row integer labels (IDX1 file or one label per line)");
    }

    cne::DataMatrix load() const {
        cne::DataMatrix X = cne::load_matrix(input, parse_format(format), csv_header);
        if (!labels_path.empty()) {
            auto labels = load_labels(labels_path);
            if (labels.size() != X.n)
                throw cne::ValidationError("label count does not match row count");
            X.labels = std::move(labels);
        }
        return X;
    }

    void resolved(std::vector<std::string>& argv) const {
        argv.insert(argv.end(), {"--input", input, "--format", format});
        if (csv_header) argv.push_back("--csv-header");
        if (!labels_path.empty()) argv.insert(argv.end(), {"--labels", labels_path});
    }
};

// Options shared by embed and spectrum.
struct TrainOpts {
    InputOpts in;
    std::string out = "cne_out";
    std::string mode = "neg";
    std::string kernel = "cauchy";
    std::string init = "pca";
    double init_std = 1.0;
    std::size_t pca = 50;
    std::size_t k = 15;
    std::size_t m = 5;
    std::size_t d = 2;
    std::size_t batch = 1024;
    std::size_t epochs = 750;
    std::size_t ee = 250;
    double lr = std::numeric_limits<double>::quiet_NaN();  // default 1, or 0.001 parametric
    double z_lr = std::numeric_limits<double>::quiet_NaN();
    double eps = 1e-10;
    std::uint64_t seed = 0;
    double slider = std::numeric_limits<double>::quiet_NaN();
    double zbar = std::numeric_limits<double>::quiet_NaN();  // unordered-pair units
    std::string zbar_from;
    bool no_anneal = false;
    bool single_phase_anneal = false;
    bool svg = false;
    bool metrics = false;
    bool log = false;
    bool log_partition = false;
    int threads = 0;

    void attach(CLI::App* cmd, bool with_zbar = true) {
        in.attach(cmd);
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--mode", mode, "loss mode: neg, nce, infonce, umap")
            ->check(CLI::IsMember({"neg", "nce", "infonce", "umap"}));
        cmd->add_option("--kernel", kernel, "low-dimensional kernel: cauchy, inverse_square")
            ->check(CLI::IsMember({"cauchy", "inverse_square"}));
        cmd->add_option("--init", init, "embedding initialization: pca, random")
            ->check(CLI::IsMember({"pca", "random"}));
        cmd->add_option("--init-std", init_std, "initial embedding scale (std of first axis)");
        cmd->add_option("--pca", pca, "PCA dims before graph construction (0 disables)");
        cmd->add_option("--k", k, "kNN graph neighbor count");
        cmd->add_option("--m", m, "negative samples per positive pair");
        cmd->add_option("-d,--dim", d, "embedding dimension");
        cmd->add_option("--batch-size", batch, "edges per SGD batch");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--early-exag-epochs", ee, "early exaggeration epochs (0 disables)");
        cmd->add_option("--lr", lr, "base learning rate (default 1, or 0.001 parametric)");
        cmd->add_option("--z-lr", z_lr, "learning rate for the learnable Z (nce mode)");
        cmd->add_option("--eps", eps, "log-argument clip lower bound");
        cmd->add_option("--seed", seed, "random seed");
        if (with_zbar) {
            cmd->add_option("--slider", slider,
                            "attraction-repulsion slider s (0 ~ t-SNE scale, 1 = UMAP scale)");
            cmd->add_option("--zbar", zbar,
                            "fixed normalization Z-bar in unordered-pair units (neg mode; "
                            "doubled internally to the ordered-pair convention)");
            cmd->add_option("--zbar-from", zbar_from,
                            "JSON file with a Z_tsne partition function (ordered-pair units) "
                            "to use as the fixed normalization");
        }
        cmd->add_flag("--no-anneal", no_anneal, "constant learning rate");
        cmd->add_flag("--single-phase-anneal", single_phase_anneal,
                      "anneal over the whole run instead of per phase");
        cmd->add_flag("--svg", svg, "also export an SVG scatter plot");
        cmd->add_flag("--metrics", metrics, "also export metrics.json");
        cmd->add_flag("--log", log, "write a JSON-lines epoch log");
        cmd->add_flag("--log-partition", log_partition,
                      "include the partition function in the epoch log (slow)");
        cmd->add_option("--threads", threads, "worker thread cap (1 = bitwise reproducible)");
    }

    // Internal (ordered-pair) normalization for NEG mode.
    double internal_zbar(std::size_t n) const {
        const bool has_slider = !std::isnan(slider);
        const bool has_zbar = !std::isnan(zbar);
        const bool has_from = !zbar_from.empty();
        if (has_slider + has_zbar + has_from > 1)
            throw std::invalid_argument("supply at most one of --slider, --zbar, --zbar-from");
        if (has_zbar) return 2.0 * zbar;
        if (has_from) {
            std::ifstream f(zbar_from);
            if (!f) throw cne::IoError("cannot open: " + zbar_from);
            json j = json::parse(f);
            if (!j.contains("Z_tsne")) throw cne::FormatError("no Z_tsne key in " + zbar_from);
            return j["Z_tsne"].get<double>();
        }
        const double s = has_slider ? slider : 1.0;
        return 2.0 * cne::zbar_from_slider(n, m, s);
    }

    cne::LossSpec loss_spec(std::size_t n) const {
        cne::LossSpec spec;
        spec.mode = parse_mode(mode);
        spec.kernel = parse_kernel(kernel);
        spec.m = m;
        spec.eps = eps;
        spec.n = n;
        spec.zbar = spec.mode == cne::LossMode::NEG ? internal_zbar(n) : 1.0;
        spec.validate();
        return spec;
    }

    cne::OptimizerConfig opt_config(bool parametric) const {
        cne::OptimizerConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch;
        cfg.lr = std::isnan(lr) ? (parametric ? 0.001 : 1.0) : lr;
        cfg.anneal = no_anneal ? cne::Anneal::none : cne::Anneal::linear_to_zero;
        cfg.early_exag_epochs = ee;
        cfg.seed = seed;
        if (!std::isnan(z_lr)) cfg.z_lr = z_lr;
        cfg.single_phase_anneal = single_phase_anneal;
        cfg.validate();
        return cfg;
    }

    std::vector<double> initial_coords(const cne::DataMatrix& X) const {
        if (init == "pca") return cne::pca_init(X, d, init_std);
        cne::Rng rng = cne::Rng::stream(seed, 0xC0FFEE);
        std::vector<double> coords(X.n * d);
        for (auto& v : coords) v = init_std * rng.normal();
        return coords;
    }

    void resolved(std::vector<std::string>& argv) const {
        in.resolved(argv);
        auto f = cne::format_double;
        argv.insert(argv.end(),
                    {"--out", out, "--mode", mode, "--kernel", kernel, "--init", init,
                     "--init-std", f(init_std), "--pca", std::to_string(pca), "--k",
                     std::to_string(k), "--m", std::to_string(m), "--dim", std::to_string(d),
                     "--batch-size", std::to_string(batch), "--epochs", std::to_string(epochs),
                     "--early-exag-epochs", std::to_string(ee), "--eps", f(eps), "--seed",
                     std::to_string(seed)});
        if (!std::isnan(lr)) argv.insert(argv.end(), {"--lr", f(lr)});
        if (!std::isnan(z_lr)) argv.insert(argv.end(), {"--z-lr", f(z_lr)});
        if (!std::isnan(slider)) argv.insert(argv.end(), {"--slider", f(slider)});
        if (!std::isnan(zbar)) argv.insert(argv.end(), {"--zbar", f(zbar)});
        if (!zbar_from.empty()) argv.insert(argv.end(), {"--zbar-from", zbar_from});
        if (no_anneal) argv.push_back("--no-anneal");
        if (single_phase_anneal) argv.push_back("--single-phase-anneal");
        if (svg) argv.push_back("--svg");
        if (metrics) argv.push_back("--metrics");
        if (log) argv.push_back("--log");
        if (log_partition) argv.push_back("--log-partition");
        if (threads > 0) argv.insert(argv.end(), {"--threads", std::to_string(threads)});
    }
};

void write_run_json(const std::string& out_dir, const std::string& command,
                    const std::vector<std::string>& argv) {
    json j;
    j["command"] = command;
    j["argv"] = argv;
    std::ofstream f(fs::path(out_dir) / "run.json");
    if (!f) throw cne::IoError("cannot write run.json in " + out_dir);
    f << j.dump(2) << "\n";
}

void export_embedding(const std::string& out_dir, const std::string& stem,
                      const std::vector<double>& coords, std::size_t n, std::size_t d,
                      const std::optional<std::vector<int>>& labels, bool svg,
                      std::map<std::string, std::string> metadata = {}) {
    cne::ExportRecord rec;
    rec.n = n;
    rec.d = d;
    rec.embedding = coords;
    rec.labels = labels;
    rec.metadata = std::move(metadata);
    cne::export_record(rec, cne::ExportFormat::csv, (fs::path(out_dir) / (stem + ".csv")).string());
    if (svg && d == 2)
        cne::export_record(rec, cne::ExportFormat::svg,
                           (fs::path(out_dir) / (stem + ".svg")).string());
}

void write_metrics_json(const std::string& path, const cne::MetricsReport& r) {
    json j;
    j["knn_recall"] = r.knn_recall;
    j["spearman"] = r.spearman;
    j["partition_function"] = r.partition_function;
    if (r.kl_divergence) j["kl_divergence"] = *r.kl_divergence;
    j["k"] = r.k;
    j["sample_size"] = r.sample_size;
    j["seed"] = r.seed;
    std::ofstream f(path);
    if (!f) throw cne::IoError("cannot write " + path);
    f << j.dump(2) << "\n";
}

cne::EpochHook make_log_hook(std::ofstream& log) {
    return [&log](const cne::EpochStats& s) {
        json j;
        j["epoch"] = s.epoch;
        j["zbar_or_Z"] = s.zbar_or_Z;
        j["loss"] = s.loss;
        if (std::isfinite(s.partition)) j["partition"] = s.partition;
        log << j.dump() << "\n";
    };
}

// ---------------------------------------------------------------- embed

int cmd_embed(TrainOpts& o, bool parametric, std::size_t hidden_width,
              const std::string& save_network_path) {
    if (o.threads > 0) cne::set_thread_count(o.threads);
    fs::create_directories(o.out);

    const cne::DataMatrix X = o.in.load();
    const cne::DataMatrix graph_input =
        (o.pca > 0 && X.D > o.pca) ? cne::pca_reduce(X, o.pca) : X;
    const cne::SkNNGraph graph = cne::build_sknn(graph_input, o.k);

    const cne::LossSpec spec = o.loss_spec(X.n);
    const cne::OptimizerConfig cfg = o.opt_config(parametric);

    std::ofstream log_file;
    cne::EpochHook hook;
    if (o.log) {
        log_file.open(fs::path(o.out) / "log.jsonl");
        if (!log_file) throw cne::IoError("cannot write log.jsonl in " + o.out);
        hook = make_log_hook(log_file);
    }

    std::vector<double> coords;
    if (parametric) {
        cne::ParametricResult res = cne::train_parametric(graph, X, spec, cfg, hidden_width, o.d,
                                                          hook, o.log_partition);
        coords = cne::embed_all(res.net, X);
        if (!save_network_path.empty()) cne::save_network(res.net, save_network_path);
    } else {
        cne::EmbeddingState state;
        state.n = X.n;
        state.d = o.d;
        state.coords = o.initial_coords(graph_input);
        state = cne::run_training(graph, state, spec, cfg, hook, o.log_partition);
        coords = std::move(state.coords);
    }

    std::map<std::string, std::string> meta{{"mode", o.mode},
                                            {"kernel", o.kernel},
                                            {"seed", std::to_string(o.seed)}};
    if (spec.mode == cne::LossMode::NEG)
        meta["zbar_ordered"] = cne::format_double(spec.zbar);
    export_embedding(o.out, "embedding", coords, X.n, o.d, X.labels, o.svg, meta);

    if (o.metrics) {
        cne::MetricsReport rep;
        rep.k = 15;
        rep.sample_size = std::min<std::size_t>(5000, X.n);
        rep.seed = o.seed;
        rep.knn_recall = cne::knn_recall(X.values, X.D, coords, o.d, X.n, rep.k);
        rep.spearman = cne::spearman_distance_corr(X.values, X.D, coords, o.d, X.n,
                                                   rep.sample_size, rep.seed);
        rep.partition_function = cne::partition_function(coords, X.n, o.d);
        rep.kl_divergence = cne::kl_divergence(graph, coords, o.d);
        write_metrics_json((fs::path(o.out) / "metrics.json").string(), rep);
    }

    std::vector<std::string> argv{"embed"};
    o.resolved(argv);
    if (parametric) {
        argv.push_back("--parametric");
        argv.insert(argv.end(), {"--hidden-width", std::to_string(hidden_width)});
        if (!save_network_path.empty())
            argv.insert(argv.end(), {"--save-network", save_network_path});
    }
    write_run_json(o.out, "embed", argv);
    std::cout << "wrote " << (fs::path(o.out) / "embedding.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(TrainOpts& o, std::vector<double>& sliders) {
    if (o.threads > 0) cne::set_thread_count(o.threads);
    if (sliders.empty()) sliders = {0.0, 0.25, 0.5, 0.75, 1.0};
    fs::create_directories(o.out);

    const cne::DataMatrix X = o.in.load();
    const cne::DataMatrix graph_input =
        (o.pca > 0 && X.D > o.pca) ? cne::pca_reduce(X, o.pca) : X;
    const cne::SkNNGraph graph = cne::build_sknn(graph_input, o.k);
    const std::vector<double> init = o.initial_coords(graph_input);

    std::ofstream table(fs::path(o.out) / "spectrum.csv");
    if (!table) throw cne::IoError("cannot write spectrum.csv in " + o.out);
    table << "s,zbar_unordered,partition_function,rms_scale\n";
    std::printf("%10s %16s %20s %14s\n", "s", "zbar", "partition", "rms_scale");

    for (std::size_t g = 0; g < sliders.size(); ++g) {
        TrainOpts run = o;
        run.slider = sliders[g];
        run.zbar = std::numeric_limits<double>::quiet_NaN();
        run.zbar_from.clear();
        const cne::LossSpec spec = run.loss_spec(X.n);
        const cne::OptimizerConfig cfg = run.opt_config(false);

        cne::EmbeddingState state;
        state.n = X.n;
        state.d = o.d;
        state.coords = init;
        state = cne::run_training(graph, state, spec, cfg);

        const double part = cne::partition_function(state.coords, X.n, o.d);
        double cx = 0.0, cy = 0.0;
        std::vector<double> mean(o.d, 0.0);
        for (std::size_t i = 0; i < X.n; ++i)
            for (std::size_t c = 0; c < o.d; ++c) mean[c] += state.coords[i * o.d + c];
        for (auto& v : mean) v /= static_cast<double>(X.n);
        double ms = 0.0;
        for (std::size_t i = 0; i < X.n; ++i)
            for (std::size_t c = 0; c < o.d; ++c) {
                const double diff = state.coords[i * o.d + c] - mean[c];
                ms += diff * diff;
            }
        const double rms = std::sqrt(ms / static_cast<double>(X.n));
        (void)cx;
        (void)cy;

        const double zbar_unordered = spec.zbar / 2.0;
        table << cne::format_double(sliders[g]) << ',' << cne::format_double(zbar_unordered)
              << ',' << cne::format_double(part) << ',' << cne::format_double(rms) << "\n";
        std::printf("%10.4g %16.6g %20.8g %14.6g\n", sliders[g], zbar_unordered, part, rms);

        export_embedding(o.out, "embedding_s" + std::to_string(g), state.coords, X.n, o.d,
                         X.labels, o.svg,
                         {{"slider", cne::format_double(sliders[g])},
                          {"zbar_ordered", cne::format_double(spec.zbar)}});
    }

    std::vector<std::string> argv{"spectrum"};
    o.resolved(argv);
    for (double s : sliders) argv.insert(argv.end(), {"--sliders", cne::format_double(s)});
    write_run_json(o.out, "spectrum", argv);
    return 0;
}

// ---------------------------------------------------------------- metrics

int cmd_metrics(InputOpts& ref_in, const std::string& embedding_path, const std::string& out,
                std::size_t k, std::size_t pca, std::size_t sample_size, std::uint64_t seed,
                int threads) {
    if (threads > 0) cne::set_thread_count(threads);
    fs::create_directories(out);
    const cne::DataMatrix ref = ref_in.load();
    const cne::DataMatrix emb = cne::load_matrix(embedding_path, cne::MatrixFormat::csv, false);
    if (emb.n != ref.n) throw cne::ValidationError("embedding row count does not match reference");

    cne::MetricsReport rep;
    rep.k = k;
    rep.sample_size = std::min(sample_size, ref.n);
    rep.seed = seed;
    rep.knn_recall = cne::knn_recall(ref.values, ref.D, emb.values, emb.D, ref.n, k);
    rep.spearman = cne::spearman_distance_corr(ref.values, ref.D, emb.values, emb.D, ref.n,
                                               rep.sample_size, seed);
    rep.partition_function = cne::partition_function(emb.values, emb.n, emb.D);
    const cne::DataMatrix graph_input =
        (pca > 0 && ref.D > pca) ? cne::pca_reduce(ref, pca) : ref;
    rep.kl_divergence = cne::kl_divergence(cne::build_sknn(graph_input, k), emb.values, emb.D);

    const std::string path = (fs::path(out) / "metrics.json").string();
    write_metrics_json(path, rep);
    std::cout << "knn_recall " << rep.knn_recall << "\nspearman " << rep.spearman
              << "\npartition_function " << rep.partition_function << "\nkl_divergence "
              << *rep.kl_divergence << "\n";

    std::vector<std::string> argv{"metrics"};
    ref_in.resolved(argv);
    argv.insert(argv.end(), {"--embedding", embedding_path, "--out", out, "--k",
                             std::to_string(k), "--pca", std::to_string(pca), "--sample-size",
                             std::to_string(sample_size), "--seed", std::to_string(seed)});
    write_run_json(out, "metrics", argv);
    return 0;
}

// ---------------------------------------------------------------- reference-tsne

int cmd_reference_tsne(InputOpts& in, const std::string& out, std::size_t pca, std::size_t k,
                       cne::TsneConfig tcfg, const std::string& init, double init_std,
                       std::uint64_t seed, bool svg, int threads) {
    if (threads > 0) cne::set_thread_count(threads);
    fs::create_directories(out);
    const cne::DataMatrix X = in.load();
    const cne::DataMatrix graph_input = (pca > 0 && X.D > pca) ? cne::pca_reduce(X, pca) : X;
    const cne::SkNNGraph graph = cne::build_sknn(graph_input, k);

    std::vector<double> coords;
    if (init == "pca") {
        coords = cne::pca_init(graph_input, 2, init_std);
    } else {
        cne::Rng rng = cne::Rng::stream(seed, 0xC0FFEE);
        coords.resize(X.n * 2);
        for (auto& v : coords) v = init_std * rng.normal();
    }

    const cne::TsneResult res = cne::run_reference_tsne(graph, coords, 2, tcfg);
    export_embedding(out, "embedding", res.coords, X.n, 2, X.labels, svg);

    json j;
    j["Z_tsne"] = res.Z_tsne;
    j["n"] = X.n;
    j["iterations"] = tcfg.iterations;
    std::ofstream f(fs::path(out) / "tsne.json");
    if (!f) throw cne::IoError("cannot write tsne.json in " + out);
    f << j.dump(2) << "\n";
    std::cout << "Z_tsne " << cne::format_double(res.Z_tsne) << "\n";

    std::vector<std::string> argv{"reference-tsne"};
    in.resolved(argv);
    argv.insert(argv.end(),
                {"--out", out, "--pca", std::to_string(pca), "--k", std::to_string(k),
                 "--iterations", std::to_string(tcfg.iterations), "--lr",
                 cne::format_double(tcfg.lr), "--exaggeration",
                 cne::format_double(tcfg.exaggeration), "--exag-iterations",
                 std::to_string(tcfg.exag_iterations), "--init", init, "--init-std",
                 cne::format_double(init_std), "--seed", std::to_string(seed)});
    if (svg) argv.push_back("--svg");
    write_run_json(out, "reference-tsne", argv);
    return 0;
}

// ---------------------------------------------------------------- transform

int cmd_transform(InputOpts& in, const std::string& network_path, const std::string& out,
                  bool svg) {
    fs::create_directories(out);
    const cne::Network net = cne::load_network(network_path);
    const cne::DataMatrix X = in.load();
    if (X.D != net.input_dim())
        throw cne::ValidationError("input width " + std::to_string(X.D) +
                                   " does not match network input " +
                                   std::to_string(net.input_dim()));
    const std::vector<double> coords = cne::embed_all(net, X);
    export_embedding(out, "embedding", coords, X.n, net.output_dim(), X.labels, svg);

    std::vector<std::string> argv{"transform"};
    in.resolved(argv);
    argv.insert(argv.end(), {"--network", network_path, "--out", out});
    if (svg) argv.push_back("--svg");
    write_run_json(out, "transform", argv);
    std::cout << "wrote " << (fs::path(out) / "embedding.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- toy

// 3-point experiment: complete graph, full-batch SGD, fixed normalization.
// zbar here is in ordered-pair units so the printed partition function
// converges to it directly.
int cmd_toy(std::vector<double>& zbars, std::size_t epochs, double lr, std::size_t m,
            std::uint64_t seed) {
    if (zbars.empty()) zbars = {1, 2, 3, 4, 5, 7, 10};
    cne::SkNNGraph graph;
    graph.n = 3;
    graph.k = 2;
    graph.edges = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
    graph.degrees = {2, 2, 2};

    std::printf("%10s %20s %22s %22s\n", "zbar", "partition", "mean_distance",
                "equilibrium_distance");
    for (double zb : zbars) {
        cne::LossSpec spec;
        spec.mode = cne::LossMode::NEG;
        spec.zbar = zb;
        spec.m = m;
        spec.n = 3;

        cne::OptimizerConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = 6;
        cfg.lr = lr;
        cfg.anneal = cne::Anneal::none;
        cfg.early_exag_epochs = 0;
        cfg.seed = seed;

        cne::EmbeddingState state;
        state.n = 3;
        state.d = 2;
        cne::Rng rng = cne::Rng::stream(seed, 0xBEEF);
        state.coords.resize(6);
        for (auto& v : state.coords) v = 0.5 * rng.normal();

        state = cne::run_training(graph, state, spec, cfg);
        const double part = cne::partition_function(state.coords, 3, 2);
        double mean_dist = 0.0;
        for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}}) {
            const double dx = state.coords[2 * i] - state.coords[2 * j];
            const double dy = state.coords[2 * i + 1] - state.coords[2 * j + 1];
            mean_dist += std::sqrt(dx * dx + dy * dy);
        }
        mean_dist /= 3.0;
        const double eq = zb <= 6.0 ? cne::equilibrium_distance_toy(zb) : 0.0;
        std::printf("%10.4g %20.10g %22.10g %22.10g\n", zb, part, mean_dist, eq);
    }
    return 0;
}

// ---------------------------------------------------------------- driver

// Expand "--config FILE" into individual flags before parsing.  FILE holds
// flat "key = value" lines ('#' starts a comment); each key maps to the flag
// "--key".  A key is skipped when the flag already appears on the command
// line, so explicit flags take precedence over the file.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
    std::vector<std::string> out = args;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] != "--config") continue;
        if (i + 1 >= out.size())
            throw std::invalid_argument("--config requires a file path");
        const std::string path = out[i + 1];
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(i),
                  out.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        std::ifstream in(path);
        if (!in) throw cne::IoError("cannot open config file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config file " + path + " line " +
                                            std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config file " + path + " line " +
                                            std::to_string(lineno) + ": empty key");
            const std::string flag = "--" + key;
            if (std::find(out.begin(), out.end(), flag) != out.end()) continue;
            if (value == "false") continue;  // flag left unset
            out.push_back(flag);
            if (value != "true") out.push_back(value);
        }
        --i;  // re-examine the slot now holding the next argument
    }
    return out;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Contrastive neighbor embedding: four losses (neg, nce, infonce, umap) over a "
                 "shared kNN-graph/Cauchy-kernel substrate, with an attraction-repulsion "
                 "spectrum, parametric training, an exact t-SNE oracle, and quality metrics"};
    app.require_subcommand(1);

    // embed
    auto* embed = app.add_subcommand("embed", "train an embedding");
    TrainOpts eo;
    eo.attach(embed);
    bool parametric = false;
    std::size_t hidden_width = 100;
    std::string save_network_path;
    embed->add_flag("--parametric", parametric, "train a network instead of free coordinates");
    embed->add_option("--hidden-width", hidden_width, "hidden layer width (parametric)");
    embed->add_option("--save-network", save_network_path, "network checkpoint output path");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum",
                                        "sweep the slider over a grid, sharing graph and init");
    TrainOpts so;
    so.attach(spectrum);
    std::vector<double> sliders;
    spectrum->add_option("--sliders", sliders, "slider grid values");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "evaluate an embedding against reference data");
    InputOpts mi;
    mi.attach(metrics);
    std::string m_embedding, m_out = "cne_out";
    std::size_t m_k = 15, m_pca = 50, m_sample = 5000;
    std::uint64_t m_seed = 0;
    int m_threads = 0;
    metrics->add_option("--embedding", m_embedding, "embedding csv")->required();
    metrics->add_option("--out", m_out, "output directory");
    metrics->add_option("--k", m_k, "neighbor count for recall and the KL graph");
    metrics->add_option("--pca", m_pca, "PCA dims for the KL graph (0 disables)");
    metrics->add_option("--sample-size", m_sample, "Spearman subsample size");
    metrics->add_option("--seed", m_seed, "Spearman subsample seed");
    metrics->add_option("--threads", m_threads, "worker thread cap");

    // reference-tsne
    auto* rtsne = app.add_subcommand("reference-tsne", "exact full-gradient t-SNE (small n)");
    InputOpts ri;
    ri.attach(rtsne);
    std::string r_out = "cne_out", r_init = "pca";
    std::size_t r_pca = 50, r_k = 15;
    double r_init_std = 0.0001;
    std::uint64_t r_seed = 0;
    bool r_svg = false;
    int r_threads = 0;
    cne::TsneConfig tcfg;
    rtsne->add_option("--out", r_out, "output directory");
    rtsne->add_option("--pca", r_pca, "PCA dims before graph construction (0 disables)");
    rtsne->add_option("--k", r_k, "kNN graph neighbor count");
    rtsne->add_option("--iterations", tcfg.iterations, "gradient descent iterations");
    rtsne->add_option("--lr", tcfg.lr, "learning rate (0 selects n/12)");
    rtsne->add_option("--exaggeration", tcfg.exaggeration, "early attraction multiplier");
    rtsne->add_option("--exag-iterations", tcfg.exag_iterations, "early exaggeration iterations");
    rtsne->add_option("--init", r_init, "initialization: pca, random")
        ->check(CLI::IsMember({"pca", "random"}));
    rtsne->add_option("--init-std", r_init_std, "initial embedding scale");
    rtsne->add_option("--seed", r_seed, "random-init seed");
    rtsne->add_flag("--svg", r_svg, "also export an SVG scatter plot");
    rtsne->add_option("--threads", r_threads, "worker thread cap");

    // transform
    auto* transform = app.add_subcommand("transform",
                                         "embed new rows through a saved network checkpoint");
    InputOpts ti;
    ti.attach(transform);
    std::string t_network, t_out = "cne_out";
    bool t_svg = false;
    transform->add_option("--network", t_network, "network checkpoint")->required();
    transform->add_option("--out", t_out, "output directory");
    transform->add_flag("--svg", t_svg, "also export an SVG scatter plot");

    // toy
    auto* toy = app.add_subcommand(
        "toy", "3-point fixed-normalization experiment; prints zbar vs. partition function "
               "(zbar in ordered-pair units)");
    std::vector<double> toy_zbars;
    std::size_t toy_epochs = 2000, toy_m = 5;
    double toy_lr = 0.01;
    std::uint64_t toy_seed = 0;
    toy->add_option("--zbars", toy_zbars, "fixed normalization values");
    toy->add_option("--epochs", toy_epochs, "training epochs");
    toy->add_option("--lr", toy_lr, "learning rate (constant)");
    toy->add_option("--m", toy_m, "negative samples per positive pair");
    toy->add_option("--seed", toy_seed, "random seed");

    // per-subcommand flat key=value config file; expand_config_args applies it
    // before parsing, with explicit command-line flags taking precedence
    std::string config_help_sink;
    for (auto* sub : {embed, spectrum, metrics, rtsne, transform, toy})
        sub->add_option("--config", config_help_sink,
                        "flat key = value config file ('#' comments); flags override it");

    try {
        const std::vector<std::string> expanded = expand_config_args(args);
        // CLI11 parses the vector in reverse order
        std::vector<std::string> rargs(expanded.rbegin(), expanded.rend());
        app.parse(rargs);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (embed->parsed()) return cmd_embed(eo, parametric, hidden_width, save_network_path);
    if (spectrum->parsed()) return cmd_spectrum(so, sliders);
    if (metrics->parsed())
        return cmd_metrics(mi, m_embedding, m_out, m_k, m_pca, m_sample, m_seed, m_threads);
    if (rtsne->parsed())
        return cmd_reference_tsne(ri, r_out, r_pca, r_k, tcfg, r_init, r_init_std, r_seed, r_svg,
                                  r_threads);
    if (transform->parsed()) return cmd_transform(ti, t_network, t_out, t_svg);
    if (toy->parsed()) return cmd_toy(toy_zbars, toy_epochs, toy_lr, toy_m, toy_seed);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (!args.empty() && args[0] == "replay") {
            if (args.size() != 2) {
                std::cerr << "usage: cne replay <run.json>\n";
                return 1;
            }
            std::ifstream f(args[1]);
            if (!f) throw cne::IoError("cannot open: " + args[1]);
            const json j = json::parse(f);
            return run(j.at("argv").get<std::vector<std::string>>());
        }
        return run(args);
    } catch (const cne::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const cne::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cne::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cne::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
