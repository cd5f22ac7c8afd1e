#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "landscape/ingest.hpp"
#include "landscape/neighbors.hpp"
#include "landscape/peaks.hpp"

namespace landscape {

/**
 * Adjusted Rand index between two partitions of the same points, from the
 * contingency table. Computed exactly in integers and rounded once, so the
 * result only depends on the pair counts. Two partitions that are both
 * all-singletons or both a single block score 1.
 */
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);
double adjusted_rand_index(const LabelSet& a, const LabelSet& b);

/// Mean over points of |topk_A(i) ∩ topk_B(i)| / k.
double neighborhood_overlap(const NeighborGraph& a, const NeighborGraph& b, std::size_t k);

inline constexpr std::size_t default_overlap_k = 30;
inline constexpr double default_purity_threshold = 0.8;

struct ClusterComposition {
    std::size_t size = 0;  ///< points counted (core points only when requested)
    int dominant = -1;     ///< label id, -1 when the cluster counted no points
    std::string dominant_name;
    double fraction = 0.0;
};

struct CompositionSummary {
    std::vector<ClusterComposition> clusters;
    double threshold = default_purity_threshold;
    std::size_t n_above_threshold = 0;  ///< clusters with fraction strictly above threshold
    double ari = 0.0;                   ///< against all points, regardless of core_only
};

CompositionSummary cluster_composition(const Clustering& clustering, const LabelSet& labels,
                                       double threshold = default_purity_threshold, bool core_only = false);

/// One scalar per layer, e.g. intrinsic dimension or cluster count.
struct LayerProfile {
    std::string quantity;
    std::vector<int> layer_ids;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

/// Moving average over `window` consecutive layers; ids take each window's first layer.
LayerProfile smooth_profile(const LayerProfile& profile, std::size_t window = 2);

/// CSV with header `layer_id,<quantity>`.
void save_profile_csv(const std::filesystem::path& path, const LayerProfile& profile);

}  // namespace landscape
