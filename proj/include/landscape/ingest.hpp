#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

/**
 * @file ingest.hpp
 *
 * @brief Embedding matrices, label partitions and layer manifests on disk.
 *
 * Matrices are read from NPY v1.0 files (2-D, C-order, little-endian float32
 * or float64) or from the raw format: one UTF-8 JSON header line
 * `{"n":N,"d":D,"dtype":"f8"}` followed by N*D little-endian float64 values.
 * Labels live in sidecar files, one category name per row.
 */

namespace landscape {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major N x D matrix of double precision activations for one layer.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t n_points, std::size_t embed_dim, std::vector<double> data, int layer_id = 0);

    std::size_t n_points() const { return n_points_; }
    std::size_t embed_dim() const { return embed_dim_; }
    int layer_id() const { return layer_id_; }
    void set_layer_id(int id) { layer_id_ = id; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * embed_dim_, embed_dim_};
    }
    std::span<double> row(std::size_t i) {
        return {data_.data() + i * embed_dim_, embed_dim_};
    }
    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t n_points_ = 0;
    std::size_t embed_dim_ = 0;
    std::vector<double> data_;
    int layer_id_ = 0;
};

enum class LabelKind { subject, answer, custom };

LabelKind label_kind_from_string(const std::string& s);
std::string to_string(LabelKind kind);

/**
 * Partition of the rows of a matrix into named categories.
 *
 * Ids are dense and assigned in order of first appearance.
 */
struct LabelSet {
    std::vector<int> ids;
    std::vector<std::string> names;
    LabelKind kind = LabelKind::custom;

    std::size_t size() const { return ids.size(); }
    std::size_t n_categories() const { return names.size(); }

    /// Builds a label set from per-row names, assigning ids by first appearance.
    static LabelSet from_names(const std::vector<std::string>& row_names, LabelKind kind = LabelKind::custom);
    /// Builds a label set from arbitrary integer ids; names are the decimal ids.
    static LabelSet from_ids(const std::vector<int>& raw_ids, LabelKind kind = LabelKind::custom);

    friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

struct ManifestLayer {
    int layer_id = 0;
    std::filesystem::path matrix;
};

/**
 * Ordered list of per-layer matrices for one dataset, plus label sidecars.
 *
 * Relative paths are resolved against the manifest's directory on load.
 */
struct Manifest {
    std::string dataset;
    std::size_t n_points = 0;  // 0 when undeclared
    std::vector<ManifestLayer> layers;
    std::map<std::string, std::filesystem::path> labels;
    nlohmann::json provenance = nlohmann::json::object();
};

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Reads only the header of an NPY or raw matrix file; returns {rows, cols}.
std::pair<std::size_t, std::size_t> peek_shape(const std::filesystem::path& path);

void save_npy(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

/// 2-D little-endian int64 NPY arrays, used for cached neighbor indices.
void save_npy_int64(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                    std::span<const std::int64_t> values);
std::vector<std::int64_t> load_npy_int64(const std::filesystem::path& path, std::size_t& rows, std::size_t& cols);
void save_raw(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

/// Reads a label file of any length.
LabelSet read_labels(const std::filesystem::path& path, LabelKind kind = LabelKind::custom);
/// Reads a label file and checks it has exactly @p n_expected rows.
LabelSet load_labels(const std::filesystem::path& path, std::size_t n_expected, LabelKind kind = LabelKind::custom);
void save_labels_csv(const std::filesystem::path& path, const LabelSet& labels, const std::string& header = "label");
void save_labels_json(const std::filesystem::path& path, const LabelSet& labels);

Manifest load_manifest(const std::filesystem::path& path);
/// Writes paths relative to the manifest's directory when they live below it.
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace landscape
