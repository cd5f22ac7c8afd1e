#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "landscape/density.hpp"
#include "landscape/ingest.hpp"
#include "landscape/intrinsic_dim.hpp"
#include "landscape/metrics.hpp"
#include "landscape/neighbors.hpp"
#include "landscape/peaks.hpp"
#include "landscape/topography.hpp"

namespace landscape {

struct RunConfig {
    std::size_t k_gride = 16;
    std::size_t k_density = 16;
    std::size_t k_adp = 16;
    double z = default_z;
    std::size_t overlap_k = default_overlap_k;
    HaloRule halo_rule = HaloRule::max_border;
    std::size_t smoothing_window = 2;
    double d_max = gride_default_d_max;
    /// Extra Gride scales reported per layer; empty for none.
    std::vector<std::size_t> id_scales;
    /// Label sets to use from the manifest; empty for all.
    std::vector<std::string> label_selection;
    bool core_only = false;
    double purity_threshold = default_purity_threshold;
    /// 0 = LANDSCAPE_WORKERS or hardware concurrency
    unsigned workers = 0;

    void validate() const;
    /// Largest neighbor rank any consumer needs (self excluded).
    std::size_t required_k_max(bool with_overlap) const;
    nlohmann::ordered_json to_json() const;
};

using NamedLabels = std::vector<std::pair<std::string, LabelSet>>;

struct LayerReport {
    int layer_id = 0;
    std::size_t n_points = 0;
    std::size_t embed_dim = 0;
    bool zero_distance_flag = false;
    GrideEstimate id;
    std::vector<GrideEstimate> id_profile;
    DensityField density;
    Clustering clustering;
    DissimilarityMatrix dissimilarity;
    Dendrogram dendrogram;
    std::vector<std::pair<std::string, CompositionSummary>> compositions;

    nlohmann::ordered_json to_json() const;
};

/// Full single-layer pipeline on a prebuilt graph.
LayerReport analyze_layer(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const NamedLabels& labels,
                          const RunConfig& config);
/// Builds the kNN graph at config.required_k_max(false) and analyzes.
LayerReport analyze_layer(const EmbeddingMatrix& matrix, const NamedLabels& labels, const RunConfig& config);

struct RunReport {
    std::string dataset;
    nlohmann::json provenance;
    RunConfig config;
    std::vector<LayerReport> layers;
    std::vector<LayerProfile> profiles;
    std::vector<LayerProfile> smoothed;

    nlohmann::ordered_json to_json() const;
};

NamedLabels load_manifest_labels(const Manifest& manifest, const RunConfig& config);

/**
 * Analyzes every layer of @p manifest in layer order and assembles raw and
 * smoothed profiles. With a reference manifest, also reports per-layer
 * neighborhood overlap against the reference layer at the same position.
 * Any layer failure aborts with an error naming the layer.
 */
RunReport analyze_manifest(const Manifest& manifest, const RunConfig& config,
                           const Manifest* reference = nullptr);

/// Writes report.json, profiles/, dendrograms/ and assignments/ under @p out_dir.
void write_run(const std::filesystem::path& out_dir, const RunReport& run);

}  // namespace landscape
