#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "landscape/json_writer.hpp"
#include "landscape/topography.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace landscape;

namespace {

DensityField flat_field(std::size_t n) {
    DensityField f;
    f.log_rho.assign(n, -10.0);
    f.err.assign(n, 0.1);
    return f;
}

Clustering hand_clustering(std::vector<std::int32_t> peaks, SaddleMap saddles) {
    Clustering c;
    c.peak_points = std::move(peaks);
    c.saddles = std::move(saddles);
    return c;
}

void check_same(const Dendrogram& tree, const std::vector<oracle::Merge>& ref) {
    REQUIRE(tree.merges.size() == ref.size());
    for (std::size_t m = 0; m < ref.size(); ++m) {
        CHECK(tree.merges[m].left == ref[m].left);
        CHECK(tree.merges[m].right == ref[m].right);
        CHECK(tree.merges[m].height == ref[m].height);
        CHECK(tree.merges[m].size == ref[m].size);
    }
}

}  // namespace

TEST_CASE("dissimilarity from one saddle") {
    auto f = flat_field(10);
    f.log_rho[0] = -3.0;
    f.log_rho[4] = -5.0;
    f.log_rho[7] = -7.0;
    const auto c = hand_clustering({0, 4}, {{{0, 1}, {7, -7.0, 0.1}}});
    const auto s = dissimilarity_matrix(c, f);
    CHECK(s.n == 2);
    CHECK(s.log_rho_max == -3.0);
    CHECK(s.at(0, 1) == 4.0);
    CHECK(s.at(1, 0) == 4.0);
    CHECK(s.at(0, 0) == 0.0);
    CHECK(s.from_saddle[1]);

    const auto tree = wpgma_dendrogram(s);
    REQUIRE(tree.merges.size() == 1);
    CHECK(tree.merges[0].height == 4.0);
    CHECK(to_newick(tree) == "(P0:4,P1:4);");
}

TEST_CASE("pairs without a border get the largest gap plus one") {
    auto f = flat_field(10);
    f.log_rho[0] = -1.0;
    f.log_rho[1] = -2.0;
    f.log_rho[2] = -2.5;
    // blobs 0-1 and 1-2 touch, 0 and 2 do not
    const auto c = hand_clustering({0, 1, 2}, {{{0, 1}, {5, -4.0, 0.1}}, {{1, 2}, {6, -6.0, 0.1}}});
    const auto s = dissimilarity_matrix(c, f);
    CHECK(s.at(0, 1) == 3.0);
    CHECK(s.at(1, 2) == 5.0);
    CHECK(s.at(0, 2) == std::max(3.0, 5.0) + 1.0);
    CHECK(s.at(2, 0) == 6.0);
    CHECK_FALSE(s.from_saddle[0 * 3 + 2]);
    CHECK(s.fill_value == 6.0);
}

TEST_CASE("three 1-D blobs in a row") {
    SplitMix64 rng(17);
    std::vector<double> x(1500);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = 7.0 * static_cast<double>(i % 3) + rng.normal();
    }
    const EmbeddingMatrix m(x.size(), 1, x);
    const auto g = build_knn(m, 16);
    const auto f = estimate_log_density(g, 16, 1.0);
    const auto c = density_peaks(m, g, f, 16, 3.0);
    REQUIRE(c.n_clusters() == 3);
    // the outer blobs never touch
    std::vector<double> where(3);
    for (std::size_t a = 0; a < 3; ++a) {
        where[a] = x[static_cast<std::size_t>(c.peak_points[a])];
    }
    const auto outer_l = static_cast<std::size_t>(std::min_element(where.begin(), where.end()) - where.begin());
    const auto outer_r = static_cast<std::size_t>(std::max_element(where.begin(), where.end()) - where.begin());
    const auto s = dissimilarity_matrix(c, f);
    CHECK_FALSE(s.from_saddle[outer_l * 3 + outer_r]);
    double max_finite = 0.0;
    for (std::size_t t = 0; t < 9; ++t) {
        if (s.from_saddle[t]) {
            max_finite = std::max(max_finite, s.values[t]);
        }
    }
    CHECK(s.at(outer_l, outer_r) == max_finite + 1.0);
}

TEST_CASE("single cluster gives a 1x1 zero matrix and a bare leaf") {
    auto f = flat_field(3);
    const auto s = dissimilarity_matrix(hand_clustering({1}, {}), f);
    CHECK(s.n == 1);
    CHECK(s.values == std::vector<double>{0.0});
    const auto tree = wpgma_dendrogram(s, {"only"});
    CHECK(tree.merges.empty());
    CHECK(to_newick(tree) == "only;");
}

TEST_CASE("hand-computed WPGMA") {
    // S12 = 1, S13 = 4, S23 = 6: {1,2} at 1, then ((4 + 6) / 2) = 5
    const auto s = DissimilarityMatrix::from_values(3, {0, 1, 4, 1, 0, 6, 4, 6, 0});
    const auto tree = wpgma_dendrogram(s, {"a", "b", "c"});
    REQUIRE(tree.merges.size() == 2);
    CHECK(tree.merges[0].left == 0);
    CHECK(tree.merges[0].right == 1);
    CHECK(tree.merges[0].height == 1.0);
    CHECK(tree.merges[1].left == 2);
    CHECK(tree.merges[1].right == 3);
    CHECK(tree.merges[1].height == 5.0);
    CHECK(tree.merges[1].size == 3);
    CHECK(to_newick(tree) == "(c:5,(a:1,b:1):4);");

    const auto j = to_json(tree);
    CHECK(j["leaves"] == nlohmann::ordered_json({"a", "b", "c"}));
    CHECK(j["merges"][1][2] == 5.0);
}

TEST_CASE("random matrices match the reference linkage") {
    SplitMix64 rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        const bool ties = rep % 3 == 0;
        const auto values = oracle::random_dissimilarity(rng, 8, ties);
        const auto tree = wpgma_dendrogram(DissimilarityMatrix::from_values(8, values));
        check_same(tree, oracle::wpgma(8, values));
        for (std::size_t m = 1; m < tree.merges.size(); ++m) {
            CHECK(tree.merges[m].height >= tree.merges[m - 1].height);
        }
    }
}

TEST_CASE("relabeling leaves and shifting all entries") {
    SplitMix64 rng(5);
    const std::size_t n = 7;
    const auto values = oracle::random_dissimilarity(rng, n, false);
    const auto base = wpgma_dendrogram(DissimilarityMatrix::from_values(n, values));

    // a constant added off the diagonal shifts every height by the constant
    auto shifted = values;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                shifted[i * n + j] += 2.0;
            }
        }
    }
    const auto moved = wpgma_dendrogram(DissimilarityMatrix::from_values(n, shifted));
    for (std::size_t m = 0; m < base.merges.size(); ++m) {
        CHECK(moved.merges[m].left == base.merges[m].left);
        CHECK(moved.merges[m].height == doctest::Approx(base.merges[m].height + 2.0).epsilon(1e-12));
    }

    // permuting leaves permutes the leaf sets of every merge
    const std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
    std::vector<double> permuted(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            permuted[perm[i] * n + perm[j]] = values[i * n + j];
        }
    }
    const auto other = wpgma_dendrogram(DissimilarityMatrix::from_values(n, permuted));
    auto leaf_sets = [n](const Dendrogram& t, const std::vector<std::size_t>& map) {
        std::vector<std::vector<std::size_t>> sets;
        auto members = [&](auto&& self, int id) -> std::vector<std::size_t> {
            if (static_cast<std::size_t>(id) < n) {
                return {map[static_cast<std::size_t>(id)]};
            }
            const auto& mg = t.merges[static_cast<std::size_t>(id) - n];
            auto a = self(self, mg.left);
            auto b = self(self, mg.right);
            a.insert(a.end(), b.begin(), b.end());
            std::sort(a.begin(), a.end());
            return a;
        };
        for (std::size_t m = 0; m < t.merges.size(); ++m) {
            sets.push_back(members(members, static_cast<int>(n + m)));
        }
        return sets;
    };
    std::vector<std::size_t> identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        identity[i] = i;
    }
    CHECK(leaf_sets(base, perm) == leaf_sets(other, identity));
    for (std::size_t m = 0; m < base.merges.size(); ++m) {
        CHECK(other.merges[m].height == base.merges[m].height);
    }
}

TEST_CASE("invalid dissimilarities") {
    CHECK_THROWS_AS(DissimilarityMatrix::from_values(2, {0, 1, 2, 0}), Error);
    CHECK_THROWS_AS(DissimilarityMatrix::from_values(2, {1, 1, 1, 0}), Error);
    CHECK_THROWS_AS(DissimilarityMatrix::from_values(2, {0, -1, -1, 0}), Error);
    CHECK_THROWS_AS(wpgma_dendrogram(DissimilarityMatrix{}), Error);
    const auto s = DissimilarityMatrix::from_values(2, {0, 1, 1, 0});
    CHECK_THROWS_AS(wpgma_dendrogram(s, {"one"}), Error);
}

TEST_CASE("newick quoting and files") {
    const auto s = DissimilarityMatrix::from_values(2, {0, 0.5, 0.5, 0});
    const auto tree = wpgma_dendrogram(s, {"P0:math(0.91)", "it's"});
    CHECK(to_newick(tree) == "('P0:math(0.91)':0.5,'it''s':0.5);");
    testutil::TempDir dir;
    save_dendrogram(dir / "t", tree);
    CHECK(testutil::read_file(dir / "t.nwk") == to_newick(tree) + "\n");
    const auto j = nlohmann::json::parse(testutil::read_file(dir / "t.json"));
    CHECK(j["merges"][0][2] == 0.5);
}
