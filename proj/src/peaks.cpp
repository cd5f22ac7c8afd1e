#include "landscape/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace landscape {

namespace {

double distance_between(const EmbeddingMatrix& matrix, std::size_t a, std::size_t b) {
    return std::sqrt(squared_distance(matrix.row(a), matrix.row(b)));
}

std::vector<std::int32_t> density_order(const DensityField& field) {
    std::vector<std::int32_t> order(field.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) { return denser(field, a, b); });
    return order;
}

Saddle make_saddle(const DensityField& field, std::int32_t point, std::int32_t peak_a, std::int32_t peak_b) {
    Saddle s;
    s.point = point;
    s.log_rho = std::min({field.log_rho[point], field.log_rho[peak_a], field.log_rho[peak_b]});
    s.err = field.err[point];
    return s;
}

std::pair<int, int> key_of(int a, int b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace

HaloRule halo_rule_from_string(const std::string& s) {
    if (s == "max-border") {
        return HaloRule::max_border;
    }
    if (s == "min-saddle-global") {
        return HaloRule::min_saddle_global;
    }
    throw Error("unknown halo rule '" + s + "' (expected max-border or min-saddle-global)");
}

std::string to_string(HaloRule rule) {
    return rule == HaloRule::max_border ? "max-border" : "min-saddle-global";
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
    std::vector<std::size_t> sizes(n_clusters(), 0);
    for (int c : assignment) {
        ++sizes[static_cast<std::size_t>(c)];
    }
    return sizes;
}

double Clustering::core_fraction() const {
    if (core.empty()) {
        return 0.0;
    }
    return static_cast<double>(std::count(core.begin(), core.end(), true)) / static_cast<double>(core.size());
}

std::vector<std::int32_t> find_maxima(const NeighborGraph& graph, const DensityField& field, std::size_t k) {
    const std::size_t n = graph.n_points();
    if (k == 0 || k > graph.k_max()) {
        throw Error("peak search rank k = " + std::to_string(k) + " must lie in [1, k_max]");
    }
    if (field.size() != n) {
        throw Error("density field and neighbor graph disagree on the number of points");
    }

    std::vector<bool> candidate(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        auto nbrs = graph.neighbors(i);
        for (std::size_t r = 0; r < k; ++r) {
            const auto j = static_cast<std::size_t>(nbrs[r]);
            if (denser(field, i, j)) {
                candidate[j] = false;  // rule (II): j sits in the neighborhood of a denser point
            } else {
                candidate[i] = false;  // rule (I)
            }
        }
    }

    std::vector<std::int32_t> maxima;
    for (std::int32_t p : density_order(field)) {
        if (candidate[static_cast<std::size_t>(p)]) {
            maxima.push_back(p);
        }
    }
    return maxima;
}

std::vector<int> assign_points(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const DensityField& field,
                               const std::vector<std::int32_t>& maxima) {
    const std::size_t n = graph.n_points();
    if (maxima.empty()) {
        throw Error("cannot assign points without at least one density maximum");
    }
    if (field.size() != n || matrix.n_points() != n) {
        throw Error("matrix, density field and neighbor graph disagree on the number of points");
    }

    std::vector<int> label(n, -1);
    for (std::size_t c = 0; c < maxima.size(); ++c) {
        label[static_cast<std::size_t>(maxima[c])] = static_cast<int>(c);
    }

    const auto order = density_order(field);
    for (std::size_t pos = 0; pos < n; ++pos) {
        const auto i = static_cast<std::size_t>(order[pos]);
        if (label[i] >= 0) {
            continue;
        }
        // The neighbor list is sorted by (distance, index), so the first denser
        // entry is the nearest denser point overall.
        std::int64_t target = -1;
        auto nbrs = graph.neighbors(i);
        for (std::size_t r = 0; r < nbrs.size(); ++r) {
            if (denser(field, static_cast<std::size_t>(nbrs[r]), i)) {
                target = nbrs[r];
                break;
            }
        }
        if (target < 0) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < pos; ++q) {
                const auto j = static_cast<std::size_t>(order[q]);
                const double dist = distance_between(matrix, i, j);
                if (dist < best || (dist == best && static_cast<std::int64_t>(j) < target)) {
                    best = dist;
                    target = static_cast<std::int64_t>(j);
                }
            }
        }
        if (target < 0) {
            // only the global density maximum has no denser point, and it is always a maximum
            throw Error("point " + std::to_string(i) + " has no denser point but is not a maximum");
        }
        label[i] = label[static_cast<std::size_t>(target)];
    }
    return label;
}

SaddleMap find_saddles(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const DensityField& field,
                       const std::vector<std::int32_t>& maxima, const std::vector<int>& assignment, std::size_t k) {
    const std::size_t n = graph.n_points();
    if (assignment.size() != n) {
        throw Error("assignment length does not match the neighbor graph");
    }
    if (k == 0 || k > graph.k_max()) {
        throw Error("border search rank k = " + std::to_string(k) + " must lie in [1, k_max]");
    }

    std::vector<std::vector<std::int32_t>> members(maxima.size());
    for (std::size_t i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(assignment[i])].push_back(static_cast<std::int32_t>(i));
    }

    // densest border point per pair, before capping at the peaks
    std::map<std::pair<int, int>, std::int32_t> best;

    auto is_border_via = [&](std::size_t i, std::size_t j, double d_ij) {
        const int a = assignment[i];
        auto nbrs = graph.neighbors(j);
        auto dists = graph.distances(j);
        for (std::size_t r = 0; r < nbrs.size(); ++r) {
            if (dists[r] > d_ij) {
                return true;
            }
            const auto l = static_cast<std::size_t>(nbrs[r]);
            if (l != i && assignment[l] == a) {
                return false;
            }
        }
        // j's list ends at or before distance d_ij: check the rest of cluster a directly
        for (std::int32_t l : members[static_cast<std::size_t>(a)]) {
            if (static_cast<std::size_t>(l) != i && distance_between(matrix, j, static_cast<std::size_t>(l)) <= d_ij) {
                return false;
            }
        }
        return true;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const int a = assignment[i];
        auto nbrs = graph.neighbors(i);
        auto dists = graph.distances(i);
        for (std::size_t r = 0; r < k; ++r) {
            const auto j = static_cast<std::size_t>(nbrs[r]);
            const int b = assignment[j];
            if (b == a) {
                continue;
            }
            const auto key = key_of(a, b);
            auto it = best.find(key);
            if (it != best.end() && !denser(field, i, static_cast<std::size_t>(it->second))) {
                continue;  // cannot improve this pair's saddle
            }
            if (is_border_via(i, j, dists[r])) {
                best[key] = static_cast<std::int32_t>(i);
            }
        }
    }

    SaddleMap saddles;
    for (const auto& [key, point] : best) {
        saddles[key] = make_saddle(field, point, maxima[static_cast<std::size_t>(key.first)],
                                   maxima[static_cast<std::size_t>(key.second)]);
    }
    return saddles;
}

Clustering merge_by_z(const DensityField& field, const std::vector<std::int32_t>& maxima,
                      const std::vector<int>& assignment, const SaddleMap& saddles, double z, HaloRule halo_rule) {
    if (!(z >= 0.0)) {
        throw Error("confidence z must be non-negative");
    }
    const std::size_t m = maxima.size();
    if (m == 0) {
        throw Error("no density maxima to merge");
    }

    // raw id -> surviving raw id
    std::vector<int> owner(m);
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<bool> alive(m, true);
    SaddleMap current = saddles;

    auto t_stat = [&](const std::pair<int, int>& key, const Saddle& s) {
        const auto pa = static_cast<std::size_t>(maxima[static_cast<std::size_t>(key.first)]);
        const auto pb = static_cast<std::size_t>(maxima[static_cast<std::size_t>(key.second)]);
        const double ta = (field.log_rho[pa] - s.log_rho) / (field.err[pa] + s.err);
        const double tb = (field.log_rho[pb] - s.log_rho) / (field.err[pb] + s.err);
        return std::min(ta, tb);
    };

    std::vector<MergeRecord> log;
    for (;;) {
        const SaddleMap::value_type* worst = nullptr;
        double worst_t = 0.0;
        for (const auto& entry : current) {
            const double t = t_stat(entry.first, entry.second);
            if (t < z && (worst == nullptr || t < worst_t)) {
                worst = &entry;
                worst_t = t;
            }
        }
        if (worst == nullptr) {
            break;
        }

        const auto [a, b] = worst->first;
        // raw ids are in decreasing peak density, so the lower id keeps the label
        const int survivor = a;
        const int absorbed = b;
        log.push_back({absorbed, survivor, worst_t});

        alive[static_cast<std::size_t>(absorbed)] = false;
        for (auto& o : owner) {
            if (o == absorbed) {
                o = survivor;
            }
        }

        SaddleMap next;
        for (const auto& [key, s] : current) {
            if (key == std::pair{a, b}) {
                continue;
            }
            int u = key.first == absorbed ? survivor : key.first;
            int v = key.second == absorbed ? survivor : key.second;
            const auto nk = key_of(u, v);
            auto it = next.find(nk);
            if (it == next.end() ||
                denser(field, static_cast<std::size_t>(s.point), static_cast<std::size_t>(it->second.point))) {
                next[nk] = make_saddle(field, s.point, maxima[static_cast<std::size_t>(nk.first)],
                                       maxima[static_cast<std::size_t>(nk.second)]);
            }
        }
        current = std::move(next);
    }

    Clustering out;
    out.z = z;
    out.halo_rule = halo_rule;
    out.merge_log = std::move(log);
    out.n_raw_peaks = m;

    std::vector<int> final_id(m, -1);
    for (std::size_t r = 0; r < m; ++r) {
        if (alive[r]) {
            final_id[r] = static_cast<int>(out.peak_points.size());
            out.peak_points.push_back(maxima[r]);
            out.raw_peak_of_cluster.push_back(static_cast<int>(r));
        }
    }
    out.assignment.resize(assignment.size());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        out.assignment[i] = final_id[static_cast<std::size_t>(owner[static_cast<std::size_t>(assignment[i])])];
    }
    for (const auto& [key, s] : current) {
        out.saddles[key_of(final_id[static_cast<std::size_t>(key.first)], final_id[static_cast<std::size_t>(key.second)])] =
            s;
    }

    const std::size_t nc = out.n_clusters();
    std::vector<double> threshold(nc, -std::numeric_limits<double>::infinity());
    std::vector<bool> has_saddle(nc, false);
    double global_min = std::numeric_limits<double>::infinity();
    for (const auto& [key, s] : out.saddles) {
        for (int c : {key.first, key.second}) {
            auto cu = static_cast<std::size_t>(c);
            threshold[cu] = has_saddle[cu] ? std::max(threshold[cu], s.log_rho) : s.log_rho;
            has_saddle[cu] = true;
        }
        global_min = std::min(global_min, s.log_rho);
    }
    out.core.resize(assignment.size());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const auto c = static_cast<std::size_t>(out.assignment[i]);
        if (!has_saddle[c]) {
            out.core[i] = true;
        } else if (halo_rule == HaloRule::max_border) {
            out.core[i] = field.log_rho[i] > threshold[c];
        } else {
            out.core[i] = field.log_rho[i] > global_min;
        }
    }
    return out;
}

Clustering density_peaks(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const DensityField& field,
                         std::size_t k, double z, HaloRule halo_rule) {
    const auto maxima = find_maxima(graph, field, k);
    const auto assignment = assign_points(matrix, graph, field, maxima);
    const auto saddles = find_saddles(matrix, graph, field, maxima, assignment, k);
    return merge_by_z(field, maxima, assignment, saddles, z, halo_rule);
}

}  // namespace landscape
