#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "cne/rng.hpp"
#include "cne/sknn_graph.hpp"

using namespace cne;

namespace {

DataMatrix random_matrix(std::size_t n, std::size_t D, std::uint64_t seed) {
    DataMatrix X;
    X.n = n;
    X.D = D;
    X.values.resize(n * D);
    Rng rng(seed);
    for (auto& v : X.values) v = rng.normal();
    return X;
}

// Independent O(n^2 log n) oracle: full sort per point with (distance, index)
// tie-breaking, then symmetrize.
std::set<std::pair<std::uint32_t, std::uint32_t>> oracle_edges(const DataMatrix& X,
                                                               std::size_t k) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> dir;
    for (std::size_t i = 0; i < X.n; ++i) {
        std::vector<std::pair<double, std::uint32_t>> all;
        for (std::size_t j = 0; j < X.n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t t = 0; t < X.D; ++t) {
                const double diff = X.at(i, t) - X.at(j, t);
                d2 += diff * diff;
            }
            all.emplace_back(d2, static_cast<std::uint32_t>(j));
        }
        std::sort(all.begin(), all.end());
        for (std::size_t t = 0; t < k; ++t)
            dir.emplace(static_cast<std::uint32_t>(i), all[t].second);
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> sym;
    for (auto [i, j] : dir) {
        sym.emplace(i, j);
        sym.emplace(j, i);
    }
    return sym;
}

}  // namespace

TEST_CASE("graph matches a full-sort oracle on random data") {
    const DataMatrix X = random_matrix(200, 5, 42);
    const std::size_t k = 10;
    const SkNNGraph g = build_sknn(X, k);
    const auto expected = oracle_edges(X, k);
    const std::set<std::pair<std::uint32_t, std::uint32_t>> got(g.edges.begin(), g.edges.end());
    CHECK(got == expected);
    CHECK(g.edges.size() == got.size());  // no duplicate directed edges
}

TEST_CASE("structural invariants hold") {
    const DataMatrix X = random_matrix(150, 3, 7);
    const std::size_t k = 8;
    const SkNNGraph g = build_sknn(X, k);

    const std::set<std::pair<std::uint32_t, std::uint32_t>> got(g.edges.begin(), g.edges.end());
    for (auto [i, j] : g.edges) {
        CHECK(i != j);                          // no self loops
        CHECK(got.count({j, i}) == 1);          // symmetric
    }
    CHECK(g.edges.size() >= X.n * k);
    CHECK(g.edges.size() <= 2 * X.n * k);
    REQUIRE(g.degrees.size() == X.n);
    std::size_t total = 0;
    for (auto deg : g.degrees) {
        CHECK(deg >= k);
        total += deg;
    }
    CHECK(total == g.edges.size());
}

TEST_CASE("four points on a line, k=1") {
    DataMatrix X;
    X.n = 4;
    X.D = 1;
    X.values = {0.0, 1.0, 2.1, 3.3};
    const SkNNGraph g = build_sknn(X, 1);
    // nearest neighbors: 0->1, 1->0, 2->1, 3->2; symmetrized
    const std::set<std::pair<std::uint32_t, std::uint32_t>> expected{
        {0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}};
    const std::set<std::pair<std::uint32_t, std::uint32_t>> got(g.edges.begin(), g.edges.end());
    CHECK(got == expected);
}

TEST_CASE("distance ties break toward the smaller index") {
    // points 1 and 2 tie at distance 1 from point 0; every other point has a
    // strictly nearer partner, so no symmetrized edge can reintroduce (0,2)
    DataMatrix X;
    X.n = 5;
    X.D = 2;
    X.values = {0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.1, 0.0, -1.1, 0.0};
    const SkNNGraph g = build_sknn(X, 1);
    const std::set<std::pair<std::uint32_t, std::uint32_t>> got(g.edges.begin(), g.edges.end());
    CHECK(got.count({0, 1}) == 1);  // smallest index wins the tie
    CHECK(got.count({0, 2}) == 0);
    CHECK(got.count({2, 0}) == 0);
}

TEST_CASE("edge probability is 1/E") {
    const DataMatrix X = random_matrix(30, 2, 3);
    const SkNNGraph g = build_sknn(X, 4);
    CHECK(edge_probability(g) == doctest::Approx(1.0 / static_cast<double>(g.edges.size())));
    SkNNGraph empty;
    CHECK_THROWS(edge_probability(empty));
}

TEST_CASE("k out of range is rejected") {
    const DataMatrix X = random_matrix(10, 2, 1);
    CHECK_THROWS(build_sknn(X, 0));
    CHECK_THROWS(build_sknn(X, 10));  // k must be < n
}

TEST_CASE("graph cache round trip") {
    const DataMatrix X = random_matrix(50, 3, 9);
    const SkNNGraph g = build_sknn(X, 5);
    const auto p =
        (std::filesystem::temp_directory_path() / "cne_test_knn_cache.cneg").string();
    save_graph(g, p);
    const SkNNGraph h = load_graph(p);
    CHECK(h.n == g.n);
    CHECK(h.k == g.k);
    CHECK(h.edges == g.edges);
}
