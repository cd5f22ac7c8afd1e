#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "landscape/density.hpp"
#include "landscape/ingest.hpp"
#include "landscape/neighbors.hpp"

/**
 * @file peaks.hpp
 *
 * @brief Density-peaks clustering with statistical merging of peaks.
 *
 * The pipeline is:
 *   1. find_maxima: local density maxima under the kNN rules;
 *   2. assign_points: every other point inherits the label of its nearest
 *      denser point;
 *   3. find_saddles: densest border point between each pair of clusters;
 *   4. merge_by_z: merge peaks that are not significantly denser than a
 *      saddle, until every remaining pair passes the test.
 *
 * "Denser" is a strict total order: higher log-density first, and equal
 * log-densities ordered by ascending point index. Distances are compared as
 * (distance, index) pairs, matching the neighbor-graph order.
 */

namespace landscape {

inline constexpr double default_z = 1.6;

enum class HaloRule {
    max_border,         ///< core iff denser than the highest saddle of its own cluster
    min_saddle_global,  ///< core iff denser than the lowest saddle anywhere
};

HaloRule halo_rule_from_string(const std::string& s);
std::string to_string(HaloRule rule);

/// True when point a precedes point b in the density order.
inline bool denser(const DensityField& field, std::size_t a, std::size_t b) {
    return field.log_rho[a] > field.log_rho[b] || (field.log_rho[a] == field.log_rho[b] && a < b);
}

struct Saddle {
    std::int32_t point = -1;
    /// log-density of the saddle, capped at the lower of the two peak log-densities
    double log_rho = 0.0;
    double err = 0.0;

    friend bool operator==(const Saddle&, const Saddle&) = default;
};

/// Keyed by (lower cluster id, higher cluster id).
using SaddleMap = std::map<std::pair<int, int>, Saddle>;

struct MergeRecord {
    int absorbed = 0;   ///< raw peak id merged away
    int survivor = 0;   ///< raw peak id that keeps the label
    double t_stat = 0;  ///< min over both sides of (log rho_peak - log rho_saddle) / (err_peak + err_saddle)
};

/**
 * Final clustering. Cluster ids are dense, ordered by decreasing peak
 * density. `raw_peak_of_cluster` maps each cluster to its id among the
 * raw maxima (also ordered by decreasing density).
 */
struct Clustering {
    std::vector<std::int32_t> peak_points;
    std::vector<int> assignment;
    SaddleMap saddles;
    std::vector<bool> core;
    double z = default_z;
    HaloRule halo_rule = HaloRule::max_border;
    std::vector<MergeRecord> merge_log;
    std::size_t n_raw_peaks = 0;
    std::vector<int> raw_peak_of_cluster;

    std::size_t n_clusters() const { return peak_points.size(); }
    std::vector<std::size_t> cluster_sizes() const;
    double core_fraction() const;
};

/**
 * Points i with rho_i > rho_j for every j in N_k(i), and that belong to
 * no N_k(j) of a denser j. Returned in decreasing density order.
 */
std::vector<std::int32_t> find_maxima(const NeighborGraph& graph, const DensityField& field, std::size_t k);

/**
 * Labels every point: maxima[c] gets label c, and every other point, in
 * decreasing density order, takes the label of its nearest denser point
 * (searched over the whole data set).
 */
std::vector<int> assign_points(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const DensityField& field,
                               const std::vector<std::int32_t>& maxima);

/**
 * Point i of cluster a lies on the border with cluster b when some
 * j in N_k(i) belongs to b and is strictly closer to i than to any other
 * point of a. The saddle of (a, b) is the densest border point found on
 * either side.
 */
SaddleMap find_saddles(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const DensityField& field,
                       const std::vector<std::int32_t>& maxima, const std::vector<int>& assignment, std::size_t k);

/**
 * Merges peaks that fail the significance test at confidence @p z. A pair
 * fails when, on either side, (log rho_peak - log rho_saddle) <
 * z * (err_peak + err_saddle). The least significant failing pair is merged
 * first, saddles of the union are the densest of the constituents' saddles,
 * and the loop runs to a fixpoint.
 */
Clustering merge_by_z(const DensityField& field, const std::vector<std::int32_t>& maxima,
                      const std::vector<int>& assignment, const SaddleMap& saddles, double z,
                      HaloRule halo_rule = HaloRule::max_border);

/// find_maxima, assign_points, find_saddles and merge_by_z in sequence.
Clustering density_peaks(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const DensityField& field,
                         std::size_t k, double z = default_z, HaloRule halo_rule = HaloRule::max_border);

}  // namespace landscape
