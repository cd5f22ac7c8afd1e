#include "landscape/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "landscape/json_writer.hpp"

namespace landscape {

namespace {

using i128 = __int128;

i128 abs128(i128 v) {
    return v < 0 ? -v : v;
}

i128 gcd128(i128 a, i128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::int64_t pairs(std::int64_t n) {
    return n * (n - 1) / 2;
}

std::vector<int> densify(std::span<const int> raw, std::size_t& n_ids) {
    std::map<int, int> ids;
    for (int v : raw) {
        ids.try_emplace(v, 0);
    }
    int next = 0;
    for (auto& [key, id] : ids) {
        id = next++;
    }
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = ids[raw[i]];
    }
    n_ids = ids.size();
    return out;
}

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw Error("ARI needs partitions of equal length (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
    }
    if (a.size() < 2) {
        throw Error("ARI needs at least two points");
    }
    std::size_t na = 0;
    std::size_t nb = 0;
    const auto da = densify(a, na);
    const auto db = densify(b, nb);

    std::vector<std::int64_t> row(na, 0);
    std::vector<std::int64_t> col(nb, 0);
    std::unordered_map<std::uint64_t, std::int64_t> cells;
    for (std::size_t i = 0; i < da.size(); ++i) {
        ++row[static_cast<std::size_t>(da[i])];
        ++col[static_cast<std::size_t>(db[i])];
        ++cells[static_cast<std::uint64_t>(da[i]) * nb + static_cast<std::uint64_t>(db[i])];
    }

    i128 same_both = 0;
    for (const auto& [key, count] : cells) {
        same_both += pairs(count);
    }
    i128 same_a = 0;
    for (auto c : row) {
        same_a += pairs(c);
    }
    i128 same_b = 0;
    for (auto c : col) {
        same_b += pairs(c);
    }
    const i128 total = pairs(static_cast<std::int64_t>(a.size()));

    // (index - expected) / (mean max index - expected), both scaled by 2 * total
    i128 num = 2 * (total * same_both - same_a * same_b);
    i128 den = total * (same_a + same_b) - 2 * same_a * same_b;
    if (den == 0) {
        return 1.0;
    }
    const i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double adjusted_rand_index(const LabelSet& a, const LabelSet& b) {
    return adjusted_rand_index(std::span<const int>(a.ids), std::span<const int>(b.ids));
}

double neighborhood_overlap(const NeighborGraph& a, const NeighborGraph& b, std::size_t k) {
    if (a.n_points() != b.n_points()) {
        throw Error("neighborhood overlap needs graphs over the same points (" + std::to_string(a.n_points()) +
                    " vs " + std::to_string(b.n_points()) + ")");
    }
    if (k == 0 || k > a.k_max() || k > b.k_max()) {
        throw Error("overlap rank k = " + std::to_string(k) + " exceeds a graph's k_max");
    }
    std::int64_t shared = 0;
    std::vector<std::int32_t> sa(k);
    std::vector<std::int32_t> sb(k);
    for (std::size_t i = 0; i < a.n_points(); ++i) {
        auto na = a.neighbors(i);
        auto nb = b.neighbors(i);
        std::copy_n(na.begin(), k, sa.begin());
        std::copy_n(nb.begin(), k, sb.begin());
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        std::size_t x = 0;
        std::size_t y = 0;
        while (x < k && y < k) {
            if (sa[x] == sb[y]) {
                ++shared;
                ++x;
                ++y;
            } else if (sa[x] < sb[y]) {
                ++x;
            } else {
                ++y;
            }
        }
    }
    return static_cast<double>(shared) / (static_cast<double>(a.n_points()) * static_cast<double>(k));
}

CompositionSummary cluster_composition(const Clustering& clustering, const LabelSet& labels, double threshold,
                                       bool core_only) {
    const std::size_t n = clustering.assignment.size();
    if (labels.size() != n) {
        throw Error("label set has " + std::to_string(labels.size()) + " rows, clustering has " + std::to_string(n));
    }
    const std::size_t nc = clustering.n_clusters();
    const std::size_t nl = labels.n_categories();
    std::vector<std::int64_t> counts(nc * nl, 0);
    std::vector<std::size_t> sizes(nc, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (core_only && !clustering.core[i]) {
            continue;
        }
        const auto c = static_cast<std::size_t>(clustering.assignment[i]);
        ++counts[c * nl + static_cast<std::size_t>(labels.ids[i])];
        ++sizes[c];
    }

    CompositionSummary out;
    out.threshold = threshold;
    for (std::size_t c = 0; c < nc; ++c) {
        ClusterComposition comp;
        comp.size = sizes[c];
        if (sizes[c] > 0) {
            std::size_t best = 0;
            for (std::size_t l = 1; l < nl; ++l) {
                if (counts[c * nl + l] > counts[c * nl + best]) {
                    best = l;
                }
            }
            comp.dominant = static_cast<int>(best);
            comp.dominant_name = labels.names[best];
            comp.fraction = static_cast<double>(counts[c * nl + best]) / static_cast<double>(sizes[c]);
        }
        if (comp.fraction > threshold) {
            ++out.n_above_threshold;
        }
        out.clusters.push_back(std::move(comp));
    }
    out.ari = adjusted_rand_index(std::span<const int>(clustering.assignment), std::span<const int>(labels.ids));
    return out;
}

LayerProfile smooth_profile(const LayerProfile& profile, std::size_t window) {
    const std::size_t len = profile.values.size();
    if (len == 0) {
        throw Error("cannot smooth an empty profile");
    }
    if (profile.layer_ids.size() != len) {
        throw Error("profile layer ids and values differ in length");
    }
    if (window < 1 || window > len) {
        throw Error("smoothing window " + std::to_string(window) + " must lie in [1, " + std::to_string(len) + "]");
    }
    LayerProfile out;
    out.quantity = profile.quantity;
    for (std::size_t j = 0; j + window <= len; ++j) {
        double sum = 0.0;
        for (std::size_t t = 0; t < window; ++t) {
            sum += profile.values[j + t];
        }
        out.layer_ids.push_back(profile.layer_ids[j]);
        out.values.push_back(sum / static_cast<double>(window));
    }
    return out;
}

void save_profile_csv(const std::filesystem::path& path, const LayerProfile& profile) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out << "layer_id," << (profile.quantity.empty() ? "value" : profile.quantity) << '\n';
    for (std::size_t i = 0; i < profile.size(); ++i) {
        out << profile.layer_ids[i] << ',' << format_double(profile.values[i]) << '\n';
    }
}

}  // namespace landscape
