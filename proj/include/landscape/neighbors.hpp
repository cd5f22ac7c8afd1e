#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "landscape/ingest.hpp"

namespace landscape {

/**
 * Exact Euclidean k-nearest-neighbor lists for every point of a matrix.
 *
 * Row i holds the k_max nearest points other than i, sorted by distance,
 * with equal distances ordered by ascending point index. Ranks are 1-based
 * in the accessors below: `distance(i, 1)` is the nearest-neighbor distance.
 */
class NeighborGraph {
public:
    NeighborGraph() = default;
    NeighborGraph(std::size_t n_points, std::size_t k_max, std::vector<std::int32_t> indices,
                  std::vector<double> distances);

    std::size_t n_points() const { return n_points_; }
    std::size_t k_max() const { return k_max_; }

    std::span<const std::int32_t> neighbors(std::size_t i) const {
        return {indices_.data() + i * k_max_, k_max_};
    }
    std::span<const double> distances(std::size_t i) const {
        return {distances_.data() + i * k_max_, k_max_};
    }
    std::int32_t neighbor(std::size_t i, std::size_t rank) const { return indices_[i * k_max_ + rank - 1]; }
    double distance(std::size_t i, std::size_t rank) const { return distances_[i * k_max_ + rank - 1]; }

    /// True when some point has a duplicate (r_1 = 0).
    bool has_zero_distance() const { return has_zero_distance_; }

    const std::vector<std::int32_t>& all_indices() const { return indices_; }
    const std::vector<double>& all_distances() const { return distances_; }

    friend bool operator==(const NeighborGraph&, const NeighborGraph&) = default;

private:
    std::size_t n_points_ = 0;
    std::size_t k_max_ = 0;
    std::vector<std::int32_t> indices_;
    std::vector<double> distances_;
    bool has_zero_distance_ = false;
};

/// Sum of squared coordinate differences, accumulated in a fixed order.
double squared_distance(std::span<const double> a, std::span<const double> b);

/**
 * Brute-force exact kNN graph. Rows are split across @p workers threads
 * (0 = use `default_worker_count()`); the result does not depend on the
 * worker count.
 */
NeighborGraph build_knn(const EmbeddingMatrix& matrix, std::size_t k_max, unsigned workers = 0);

/// Worker count from LANDSCAPE_WORKERS, else the hardware concurrency.
unsigned default_worker_count();

/// Caches a graph as `<prefix>.indices.npy` (int64) and `<prefix>.distances.npy` (float64).
void save_graph(const std::filesystem::path& prefix, const NeighborGraph& graph);
NeighborGraph load_graph(const std::filesystem::path& prefix);

}  // namespace landscape
