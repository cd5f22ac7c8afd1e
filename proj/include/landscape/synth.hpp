#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "landscape/ingest.hpp"

/**
 * @file synth.hpp
 *
 * @brief Deterministic synthetic point clouds with known structure.
 *
 * Every fixture is a pure function of its spec. The random stream is
 * splitmix64; a uniform draw is `(next() >> 11) * 2^-53` in [0, 1), and
 * normals come in Box-Muller pairs (u1, u2) -> (r cos(2 pi u2),
 * r sin(2 pi u2)) with r = sqrt(-2 log(1 - u1)), both values used in order.
 *
 * Embedding into D dimensions uses a D x D orthonormal matrix drawn first
 * from the stream: D*D normals filled row by row, then classical
 * Gram-Schmidt over the rows. A latent point x (dimension d) maps to
 * y_j = sum_i x_i Q[i][j], i.e. it is spanned by the first d rows.
 */

namespace landscape {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal, Box-Muller.
    double normal();

private:
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

enum class FixtureKind { gaussian_mixture, uniform_manifold, layered_pipeline };

FixtureKind fixture_kind_from_string(const std::string& s);
std::string to_string(FixtureKind kind);

struct FixtureSpec {
    FixtureKind kind = FixtureKind::gaussian_mixture;
    std::size_t n = 1000;
    std::size_t intrinsic_dim = 2;
    std::size_t embed_dim = 16;
    /// Mixture components; ignored by uniform_manifold.
    std::size_t n_components = 2;
    /// Distance between neighboring default centers, in units of sigma.
    double separation = 6.0;
    double sigma = 1.0;
    /// Optional explicit latent centers (n_components x intrinsic_dim).
    std::vector<std::vector<double>> centers;
    std::uint64_t seed = 0;
    /// layered_pipeline only
    std::size_t n_layers = 12;
    std::size_t n_subjects = 16;
    std::size_t n_answers = 4;
};

/**
 * Default mixture centers in latent space: one component at the origin;
 * two at +-(separation/2) e_0; otherwise (separation/sqrt 2) times
 * +e_0, ..., +e_{d-1}, -e_0, ..., -e_{d-1} in that order (at most 2d
 * components), so every pair is at least `separation` sigma apart.
 */
std::vector<std::vector<double>> default_centers(std::size_t n_components, std::size_t dim, double separation,
                                                 double sigma = 1.0);

/// D x D row-major orthonormal matrix drawn from @p rng.
std::vector<double> random_rotation(SplitMix64& rng, std::size_t dim);

/**
 * Point i belongs to component i mod n_components and is center + sigma * z
 * with z a latent standard normal, then embedded.
 */
std::pair<EmbeddingMatrix, LabelSet> gaussian_mixture(const FixtureSpec& spec);

/// Uniform samples on the unit d-cube, embedded isometrically into D dims.
EmbeddingMatrix uniform_manifold(const FixtureSpec& spec);

/**
 * Two-phase layered data: point i has subject i mod S and answer
 * (i / S) mod A. Layer l at depth t = l / (L - 1) mixes the subject
 * center (latent block 1) and answer center (latent block 2) with weight
 * w = clamp(3t - 1, 0, 1) on the answer, plus fresh latent noise per layer.
 */
struct LayeredFixture {
    std::vector<EmbeddingMatrix> layers;
    LabelSet subjects;
    LabelSet answers;
};
LayeredFixture layered_pipeline(const FixtureSpec& spec);

/// Writes NPY layers, label CSVs and `manifest.json` into @p dir; returns the manifest path.
std::filesystem::path write_fixture(const std::filesystem::path& dir, const FixtureSpec& spec);

}  // namespace landscape
