#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "landscape/density.hpp"
#include "landscape/peaks.hpp"

namespace landscape {

/// Gap added above the largest saddle-derived dissimilarity for peak pairs with no border.
inline constexpr double missing_border_gap = 1.0;

/**
 * Symmetric peak-to-peak dissimilarity S_ab = log rho_max - log rho_ab,
 * where rho_max is the density of the highest peak and rho_ab the saddle
 * density between a and b.
 */
struct DissimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> values;
    /// true where the entry comes from a saddle, false where it was filled
    std::vector<bool> from_saddle;
    double log_rho_max = 0.0;
    double fill_value = 0.0;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }

    /// Wraps explicit values; checks symmetry, non-negativity and a zero diagonal.
    static DissimilarityMatrix from_values(std::size_t n, std::vector<double> values);
};

DissimilarityMatrix dissimilarity_matrix(const Clustering& clustering, const DensityField& field);

struct DendrogramMerge {
    /// Node ids: leaves are 0..n-1, the node created by merge m is n + m.
    int left = 0;
    int right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::vector<std::string> leaf_names;
    std::vector<DendrogramMerge> merges;

    std::size_t n_leaves() const { return leaf_names.size(); }
};

/**
 * WPGMA linkage: repeatedly joins the pair of active nodes with the lowest
 * dissimilarity (ties by lowest (min id, max id)); the new node's
 * dissimilarity to every other node is the plain mean of its two children's.
 * Leaf names default to "P<i>".
 */
Dendrogram wpgma_dendrogram(const DissimilarityMatrix& s, std::vector<std::string> leaf_names = {});

/// Newick text; branch lengths are height differences between parent and child.
std::string to_newick(const Dendrogram& tree);
/// {"leaves": [...], "merges": [[a, b, height], ...]}
nlohmann::ordered_json to_json(const Dendrogram& tree);

void save_dendrogram(const std::filesystem::path& stem, const Dendrogram& tree);

}  // namespace landscape
