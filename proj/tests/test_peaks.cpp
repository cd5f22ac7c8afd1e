#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "landscape/intrinsic_dim.hpp"
#include "landscape/metrics.hpp"
#include "landscape/peaks.hpp"
#include "landscape/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace landscape;

namespace {

DensityField field_from(std::vector<double> log_rho, double err = 0.1) {
    DensityField f;
    f.err.assign(log_rho.size(), err);
    f.log_rho = std::move(log_rho);
    f.k = 1;
    f.d_used = 1.0;
    return f;
}

struct Landscape {
    EmbeddingMatrix matrix;
    LabelSet labels;
    NeighborGraph graph;
    DensityField field;
};

Landscape two_blobs(double separation, std::uint64_t seed) {
    FixtureSpec spec;  // n = 1000, d = 2 in D = 16, two components
    spec.separation = separation;
    spec.seed = seed;
    auto [m, l] = gaussian_mixture(spec);
    Landscape out{m, l, build_knn(m, 32), {}};
    out.field = estimate_log_density(out.graph, 16, gride_mle(out.graph, 16).d_hat);
    return out;
}

// Random instance for the reference comparisons; quantized densities force ties.
Landscape random_instance(std::uint64_t seed, bool quantized) {
    SplitMix64 rng(seed);
    const std::size_t n = 20 + static_cast<std::size_t>(rng.uniform() * 45.0);
    const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
    auto m = testutil::gaussian_cloud(n, dim, seed * 7919 + 1);
    Landscape out{m, {}, build_knn(m, std::min<std::size_t>(n - 1, 12)), {}};
    if (quantized) {
        std::vector<double> lr(n);
        for (auto& v : lr) {
            v = std::floor(rng.uniform() * 6.0);
        }
        out.field = field_from(lr);
    } else {
        out.field = estimate_log_density(out.graph, 4, static_cast<double>(dim));
    }
    return out;
}

}  // namespace

TEST_CASE("three mutually neighboring points have one maximum") {
    const auto m = testutil::from_rows({{0.0}, {1.0}, {2.0}});
    const auto g = build_knn(m, 2);
    const auto f = field_from({1.0, 2.0, 3.0});
    CHECK(find_maxima(g, f, 2) == std::vector<std::int32_t>{2});
    const auto c = density_peaks(m, g, f, 2, 1.6);
    CHECK(c.n_clusters() == 1);
    CHECK(c.saddles.empty());
    CHECK(c.assignment == std::vector<int>{0, 0, 0});
    CHECK(c.core_fraction() == 1.0);
}

TEST_CASE("monotone chain joins the densest end") {
    const auto m = testutil::from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
    const auto g = build_knn(m, 1);
    const auto f = field_from({0.5, 1.0, 1.5, 2.0});
    const auto maxima = find_maxima(g, f, 1);
    CHECK(maxima == std::vector<std::int32_t>{3});
    CHECK(assign_points(m, g, f, maxima) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("equal densities are broken by index") {
    const auto m = testutil::from_rows({{0.0}, {1.0}, {10.0}, {11.0}});
    const auto g = build_knn(m, 1);
    const auto f = field_from({1.0, 1.0, 1.0, 1.0});
    // lower index counts as denser
    CHECK(find_maxima(g, f, 1) == std::vector<std::int32_t>{0, 2});
}

TEST_CASE("two well separated blobs") {
    const auto l = two_blobs(6.0, 42);
    const auto maxima = find_maxima(l.graph, l.field, 16);
    std::map<int, int> per_component;
    for (auto p : maxima) {
        ++per_component[l.labels.ids[static_cast<std::size_t>(p)]];
    }
    CHECK(per_component.size() == 2);

    const auto c = density_peaks(l.matrix, l.graph, l.field, 16, 1.6);
    CHECK(c.n_clusters() == 2);
    REQUIRE(c.saddles.size() == 1);

    // nearest-center partition using the component sample means
    const std::size_t dim = l.matrix.embed_dim();
    std::vector<std::vector<double>> mean(2, std::vector<double>(dim, 0.0));
    std::vector<double> count(2, 0.0);
    for (std::size_t i = 0; i < l.matrix.n_points(); ++i) {
        const auto cc = static_cast<std::size_t>(l.labels.ids[i]);
        count[cc] += 1.0;
        for (std::size_t t = 0; t < dim; ++t) {
            mean[cc][t] += l.matrix.row(i)[t];
        }
    }
    std::vector<int> nearest(l.matrix.n_points());
    for (std::size_t i = 0; i < l.matrix.n_points(); ++i) {
        double best = INFINITY;
        for (std::size_t cc = 0; cc < 2; ++cc) {
            double s = 0.0;
            for (std::size_t t = 0; t < dim; ++t) {
                const double diff = l.matrix.row(i)[t] - mean[cc][t] / count[cc];
                s += diff * diff;
            }
            if (s < best) {
                best = s;
                nearest[i] = static_cast<int>(cc);
            }
        }
    }
    // cluster ids are arbitrary; take the better of the two matchings
    std::size_t same = 0;
    for (std::size_t i = 0; i < nearest.size(); ++i) {
        same += c.assignment[i] == nearest[i];
    }
    const std::size_t agree = std::max(same, nearest.size() - same);
    CHECK(static_cast<double>(agree) >= 0.98 * static_cast<double>(nearest.size()));
}

TEST_CASE("two blobs yield exactly two raw maxima" * doctest::may_fail()) {
    // The kNN density at k = 16 carries sampling noise, so spurious local
    // maxima survive rules (I) and (II); they are removed only by merging.
    const auto l = two_blobs(6.0, 42);
    const auto maxima = find_maxima(l.graph, l.field, 16);
    MESSAGE("raw maxima: " << maxima.size());
    CHECK(maxima.size() == 2);
}

TEST_CASE("overlapping blobs merge into one") {
    const auto close = two_blobs(0.5, 42);
    CHECK(density_peaks(close.matrix, close.graph, close.field, 16, 1.6).n_clusters() == 1);
    FixtureSpec spec;
    spec.n_components = 1;
    spec.seed = 42;
    auto [m, lab] = gaussian_mixture(spec);
    const auto g = build_knn(m, 32);
    const auto f = estimate_log_density(g, 16, gride_mle(g, 16).d_hat);
    CHECK(density_peaks(m, g, f, 16, 1.6).n_clusters() == 1);
}

TEST_CASE("1-D mixture at -2 and +2 has its saddle near 0") {
    SplitMix64 rng(11);
    std::vector<double> x(2000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = (i % 2 == 0 ? -2.0 : 2.0) + rng.normal();
    }
    const EmbeddingMatrix m(x.size(), 1, x);
    const auto g = build_knn(m, 16);
    const auto f = estimate_log_density(g, 16, 1.0);

    // raw landscape: the densest saddle between a left peak and a right peak is the pass between the modes
    const auto maxima = find_maxima(g, f, 16);
    const auto assignment = assign_points(m, g, f, maxima);
    const auto saddles = find_saddles(m, g, f, maxima, assignment, 16);
    const Saddle* pass = nullptr;
    for (const auto& [key, s] : saddles) {
        const double xa = x[static_cast<std::size_t>(maxima[static_cast<std::size_t>(key.first)])];
        const double xb = x[static_cast<std::size_t>(maxima[static_cast<std::size_t>(key.second)])];
        if ((xa < 0) != (xb < 0) && (pass == nullptr || s.log_rho > pass->log_rho)) {
            pass = &s;
        }
    }
    REQUIRE(pass != nullptr);
    CHECK(std::abs(x[static_cast<std::size_t>(pass->point)]) <= 0.5);

    // with a stricter z the noise peaks merge and one saddle is left
    const auto c = density_peaks(m, g, f, 16, 3.0);
    REQUIRE(c.n_clusters() == 2);
    REQUIRE(c.saddles.size() == 1);
    const auto& s = c.saddles.begin()->second;
    CHECK(std::abs(x[static_cast<std::size_t>(s.point)]) <= 0.5);
    CHECK(s.log_rho < f.log_rho[static_cast<std::size_t>(c.peak_points[0])]);
    CHECK(s.log_rho < f.log_rho[static_cast<std::size_t>(c.peak_points[1])]);
}

TEST_CASE("maxima, assignment and saddles match the exhaustive reference") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto l = random_instance(seed, seed % 2 == 0);
        const std::size_t k = std::min<std::size_t>(l.graph.k_max(), 3 + seed % 6);
        const auto ref = oracle::brute_knn(l.matrix, l.graph.k_max());

        const auto maxima = find_maxima(l.graph, l.field, k);
        CHECK(maxima == oracle::maxima(ref, l.field.log_rho, k));
        const auto assignment = assign_points(l.matrix, l.graph, l.field, maxima);
        CHECK(assignment == oracle::assignment(l.matrix, l.field.log_rho, maxima));
        CHECK(find_saddles(l.matrix, l.graph, l.field, maxima, assignment, k) ==
              oracle::saddles(l.matrix, ref, l.field, maxima, assignment, k));
    }
}

TEST_CASE("z controls merging") {
    const auto l = two_blobs(6.0, 7);
    const auto raw = find_maxima(l.graph, l.field, 16);
    const auto c0 = density_peaks(l.matrix, l.graph, l.field, 16, 0.0);
    CHECK(c0.n_clusters() == raw.size());
    CHECK(c0.merge_log.empty());
    CHECK(density_peaks(l.matrix, l.graph, l.field, 16, 1e6).n_clusters() == 1);

    std::size_t last = c0.n_clusters();
    for (double z : {0.5, 1.0, 1.6, 2.5, 4.0, 8.0}) {
        const auto c = density_peaks(l.matrix, l.graph, l.field, 16, z);
        CHECK(c.n_clusters() <= last);
        last = c.n_clusters();
        CHECK(c.n_raw_peaks == raw.size());
        CHECK(c.merge_log.size() == raw.size() - c.n_clusters());
    }
}

TEST_CASE("clustering invariants") {
    const auto l = two_blobs(4.0, 3);
    for (auto rule : {HaloRule::max_border, HaloRule::min_saddle_global}) {
        const auto c = density_peaks(l.matrix, l.graph, l.field, 16, 1.0, rule);
        // peaks in decreasing density, each in its own cluster
        for (std::size_t a = 0; a < c.n_clusters(); ++a) {
            CHECK(c.assignment[static_cast<std::size_t>(c.peak_points[a])] == static_cast<int>(a));
            CHECK(c.core[static_cast<std::size_t>(c.peak_points[a])]);
            if (a > 0) {
                CHECK(denser(l.field, static_cast<std::size_t>(c.peak_points[a - 1]),
                             static_cast<std::size_t>(c.peak_points[a])));
            }
        }
        for (const auto& [key, s] : c.saddles) {
            CHECK(key.first < key.second);
            CHECK(s.log_rho <= l.field.log_rho[static_cast<std::size_t>(c.peak_points[static_cast<std::size_t>(key.first)])]);
            CHECK(s.log_rho <= l.field.log_rho[static_cast<std::size_t>(c.peak_points[static_cast<std::size_t>(key.second)])]);
        }
        const auto sizes = c.cluster_sizes();
        std::size_t total = 0;
        for (auto s : sizes) {
            CHECK(s > 0);
            total += s;
        }
        CHECK(total == l.matrix.n_points());
    }
}

TEST_CASE("halo rules") {
    // two 1-D bumps; point 4 borders the left cluster and becomes the saddle
    const auto m = testutil::from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}, {6.0}});
    const auto g = build_knn(m, 2);
    const auto f = field_from({2.0, 3.0, 2.5, 1.0, 2.2, 4.0, 0.5}, 0.01);
    const auto c = density_peaks(m, g, f, 1, 1.0);
    REQUIRE(c.n_clusters() == 2);
    CHECK(c.peak_points == std::vector<std::int32_t>{5, 1});
    REQUIRE(c.saddles.size() == 1);
    const double s = c.saddles.begin()->second.log_rho;
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(c.core[i] == (f.log_rho[i] > s));
    }
    const auto g2 = density_peaks(m, g, f, 1, 1.0, HaloRule::min_saddle_global);
    CHECK(g2.core == c.core);
    CHECK(halo_rule_from_string("min-saddle-global") == HaloRule::min_saddle_global);
    CHECK(to_string(HaloRule::max_border) == "max-border");
    CHECK_THROWS_AS(halo_rule_from_string("none"), Error);
}

TEST_CASE("merge bookkeeping on a hand-built landscape") {
    // three peaks: 0 and 1 separated by a shallow saddle, 2 well apart
    DensityField f = field_from({10.0, 9.75, 9.0, 9.5, 1.0}, 0.125);
    const std::vector<std::int32_t> maxima{0, 1, 2};
    const std::vector<int> assignment{0, 1, 2, 0, 2};
    SaddleMap saddles;
    saddles[{0, 1}] = {3, 9.5, 0.125};  // t = min(0.5, 0.25) / 0.25 = 1
    saddles[{1, 2}] = {4, 1.0, 0.125};
    const auto c = merge_by_z(f, maxima, assignment, saddles, 1.6);
    REQUIRE(c.merge_log.size() == 1);
    CHECK(c.merge_log[0].absorbed == 1);
    CHECK(c.merge_log[0].survivor == 0);
    CHECK(c.merge_log[0].t_stat == 1.0);
    CHECK(c.n_clusters() == 2);
    CHECK(c.assignment == std::vector<int>{0, 0, 1, 0, 1});
    REQUIRE(c.saddles.size() == 1);
    CHECK(c.saddles.at({0, 1}).point == 4);
    CHECK(c.raw_peak_of_cluster == std::vector<int>{0, 2});

    // t exactly equal to z is significant
    CHECK(merge_by_z(f, maxima, assignment, saddles, 1.0).n_clusters() == 3);
    CHECK_THROWS_AS(merge_by_z(f, maxima, assignment, saddles, -1.0), Error);
}

TEST_CASE("deterministic") {
    const auto l = two_blobs(3.0, 5);
    const auto a = density_peaks(l.matrix, l.graph, l.field, 16, 1.6);
    const auto b = density_peaks(l.matrix, l.graph, l.field, 16, 1.6);
    CHECK(a.assignment == b.assignment);
    CHECK(a.saddles == b.saddles);
    CHECK(a.core == b.core);
    REQUIRE(a.merge_log.size() == b.merge_log.size());
    for (std::size_t t = 0; t < a.merge_log.size(); ++t) {
        CHECK(a.merge_log[t].absorbed == b.merge_log[t].absorbed);
        CHECK(a.merge_log[t].t_stat == b.merge_log[t].t_stat);
    }
}

TEST_CASE("clustering survives isometry and scaling") {
    const auto l = two_blobs(4.0, 9);
    const double d = l.field.d_used;
    const auto base = density_peaks(l.matrix, l.graph, l.field, 16, 1.6);
    for (const auto& moved : {testutil::rigid_motion(l.matrix, 4), testutil::scaled(l.matrix, 3.0)}) {
        const auto g = build_knn(moved, 32);
        const auto f = estimate_log_density(g, 16, d);
        const auto c = density_peaks(moved, g, f, 16, 1.6);
        CHECK(c.assignment == base.assignment);
        CHECK(c.peak_points == base.peak_points);
    }
}
