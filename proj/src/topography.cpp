#include "landscape/topography.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include "landscape/json_writer.hpp"

namespace landscape {

DissimilarityMatrix DissimilarityMatrix::from_values(std::size_t n, std::vector<double> values) {
    if (values.size() != n * n) {
        throw Error("dissimilarity matrix needs " + std::to_string(n * n) + " values");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i * n + i] != 0.0) {
            throw Error("dissimilarity matrix diagonal must be zero");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = values[i * n + j];
            if (!std::isfinite(v) || v < 0.0) {
                throw Error("dissimilarity entries must be finite and non-negative");
            }
            if (v != values[j * n + i]) {
                throw Error("dissimilarity matrix must be symmetric");
            }
        }
    }
    DissimilarityMatrix out;
    out.n = n;
    out.values = std::move(values);
    out.from_saddle.assign(n * n, true);
    return out;
}

DissimilarityMatrix dissimilarity_matrix(const Clustering& clustering, const DensityField& field) {
    const std::size_t n = clustering.n_clusters();
    DissimilarityMatrix out;
    out.n = n;
    out.values.assign(n * n, 0.0);
    out.from_saddle.assign(n * n, false);
    if (n == 0) {
        return out;
    }

    double log_rho_max = -std::numeric_limits<double>::infinity();
    for (auto p : clustering.peak_points) {
        log_rho_max = std::max(log_rho_max, field.log_rho[static_cast<std::size_t>(p)]);
    }
    out.log_rho_max = log_rho_max;

    double max_finite = 0.0;
    for (const auto& [key, saddle] : clustering.saddles) {
        const auto a = static_cast<std::size_t>(key.first);
        const auto b = static_cast<std::size_t>(key.second);
        const double s = log_rho_max - saddle.log_rho;
        out.values[a * n + b] = out.values[b * n + a] = s;
        out.from_saddle[a * n + b] = out.from_saddle[b * n + a] = true;
        max_finite = std::max(max_finite, s);
    }
    out.fill_value = max_finite + missing_border_gap;
    for (std::size_t i = 0; i < n; ++i) {
        out.from_saddle[i * n + i] = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (!out.from_saddle[i * n + j]) {
                out.values[i * n + j] = out.fill_value;
            }
        }
    }
    return out;
}

Dendrogram wpgma_dendrogram(const DissimilarityMatrix& s, std::vector<std::string> leaf_names) {
    const std::size_t n = s.n;
    if (n == 0) {
        throw Error("cannot build a dendrogram over zero peaks");
    }
    if (leaf_names.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            leaf_names.push_back("P" + std::to_string(i));
        }
    } else if (leaf_names.size() != n) {
        throw Error("dendrogram needs one leaf name per peak");
    }

    // slot i holds node ids in `node`; rows of `dist` are indexed by slot
    std::vector<int> node(n);
    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        node[i] = static_cast<int>(i);
    }
    std::vector<double> dist = s.values;

    Dendrogram tree;
    tree.leaf_names = std::move(leaf_names);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t bi = 0;
        std::size_t bj = 0;
        bool found = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) {
                continue;
            }
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) {
                    continue;
                }
                const double d = dist[i * n + j];
                if (!found) {
                    bi = i;
                    bj = j;
                    found = true;
                    continue;
                }
                const double best = dist[bi * n + bj];
                if (d < best) {
                    bi = i;
                    bj = j;
                } else if (d == best) {
                    auto cand = std::minmax(node[i], node[j]);
                    auto cur = std::minmax(node[bi], node[bj]);
                    if (cand < cur) {
                        bi = i;
                        bj = j;
                    }
                }
            }
        }

        const double height = dist[bi * n + bj];
        auto [lo, hi] = std::minmax(node[bi], node[bj]);
        tree.merges.push_back({lo, hi, height, size[bi] + size[bj]});

        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) {
                continue;
            }
            const double merged = 0.5 * (dist[bi * n + k] + dist[bj * n + k]);
            dist[bi * n + k] = dist[k * n + bi] = merged;
        }
        node[bi] = static_cast<int>(n + step);
        size[bi] += size[bj];
        active[bj] = false;
    }
    return tree;
}

namespace {

std::string newick_label(const std::string& name) {
    if (name.find_first_of("()[]':;, \t\n") == std::string::npos && !name.empty()) {
        return name;
    }
    std::string out = "'";
    for (char c : name) {
        if (c == '\'') {
            out.push_back('\'');
        }
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

}  // namespace

std::string to_newick(const Dendrogram& tree) {
    const std::size_t n = tree.n_leaves();
    if (n == 0) {
        return ";";
    }
    auto height_of = [&](int id) {
        return static_cast<std::size_t>(id) < n ? 0.0 : tree.merges[static_cast<std::size_t>(id) - n].height;
    };
    std::function<std::string(int)> render = [&](int id) -> std::string {
        if (static_cast<std::size_t>(id) < n) {
            return newick_label(tree.leaf_names[static_cast<std::size_t>(id)]);
        }
        const auto& m = tree.merges[static_cast<std::size_t>(id) - n];
        return "(" + render(m.left) + ":" + format_double(m.height - height_of(m.left)) + "," + render(m.right) +
               ":" + format_double(m.height - height_of(m.right)) + ")";
    };
    const int root = n == 1 ? 0 : static_cast<int>(n + tree.merges.size() - 1);
    return render(root) + ";";
}

nlohmann::ordered_json to_json(const Dendrogram& tree) {
    nlohmann::ordered_json j;
    j["leaves"] = tree.leaf_names;
    j["merges"] = nlohmann::ordered_json::array();
    for (const auto& m : tree.merges) {
        j["merges"].push_back({m.left, m.right, m.height});
    }
    return j;
}

void save_dendrogram(const std::filesystem::path& stem, const Dendrogram& tree) {
    {
        std::ofstream out(stem.string() + ".nwk", std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + stem.string() + ".nwk'");
        }
        out << to_newick(tree) << '\n';
    }
    write_json_file(stem.string() + ".json", to_json(tree));
}

}  // namespace landscape
