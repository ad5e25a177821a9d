#include "cne/sknn_graph.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "cne/parallel.hpp"

namespace cne {
namespace {

std::uint32_t read_u32_le(std::istream& in) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw FormatError("unexpected end of graph file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xff),
                                         static_cast<unsigned char>((v >> 8) & 0xff),
                                         static_cast<unsigned char>((v >> 16) & 0xff),
                                         static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

}  // namespace

SkNNGraph build_sknn(const std::vector<double>& coords, std::size_t n, std::size_t dim,
                     std::size_t k) {
    if (n < 2 || k < 1 || k >= n)
        throw std::invalid_argument("build_sknn: requires 1 <= k < n");

    // per-point k nearest by partial sort; ties broken by smaller index
    std::vector<std::uint32_t> nn(n * k);
    parallel_blocks(n, 64, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
        for (std::size_t i = lo; i < hi; ++i) {
            const double* xi = coords.data() + i * dim;
            std::size_t c = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* xj = coords.data() + j * dim;
                double d2 = 0.0;
                for (std::size_t t = 0; t < dim; ++t) {
                    const double diff = xi[t] - xj[t];
                    d2 += diff * diff;
                }
                cand[c++] = {d2, static_cast<std::uint32_t>(j)};
            }
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                              cand.end());
            for (std::size_t t = 0; t < k; ++t) nn[i * k + t] = cand[t].second;
        }
    });

    // symmetrize: union with the transposed edge set
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        adj[i].assign(nn.begin() + static_cast<std::ptrdiff_t>(i * k),
                      nn.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) adj[nn[i * k + t]].push_back(static_cast<std::uint32_t>(i));

    SkNNGraph g;
    g.n = n;
    g.k = k;
    g.degrees.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = adj[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        g.degrees[i] = static_cast<std::uint32_t>(row.size());
        for (std::uint32_t j : row) g.edges.emplace_back(static_cast<std::uint32_t>(i), j);
    }
    return g;
}

SkNNGraph build_sknn(const DataMatrix& X, std::size_t k) {
    return build_sknn(X.values, X.n, X.D, k);
}

double edge_probability(const SkNNGraph& g) {
    if (g.edges.empty()) throw std::logic_error("edge_probability: empty graph");
    return 1.0 / static_cast<double>(g.edges.size());
}

void save_graph(const SkNNGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("CNEG", 4);
    write_u32_le(out, static_cast<std::uint32_t>(g.n));
    write_u32_le(out, static_cast<std::uint32_t>(g.k));
    write_u32_le(out, static_cast<std::uint32_t>(g.edges.size()));
    for (const auto& [i, j] : g.edges) {
        write_u32_le(out, i);
        write_u32_le(out, j);
    }
    if (!out) throw IoError("write failure on " + path);
}

SkNNGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || std::memcmp(magic.data(), "CNEG", 4) != 0)
        throw FormatError("bad graph magic (expected CNEG)");
    SkNNGraph g;
    g.n = read_u32_le(in);
    g.k = read_u32_le(in);
    const std::uint32_t E = read_u32_le(in);
    g.edges.resize(E);
    g.degrees.assign(g.n, 0);
    for (auto& [i, j] : g.edges) {
        i = read_u32_le(in);
        j = read_u32_le(in);
        if (i >= g.n || j >= g.n) throw FormatError("graph edge index out of range");
        ++g.degrees[i];
    }
    return g;
}

}  // namespace cne
