#include "landscape/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace landscape {

namespace fs = std::filesystem;

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

FixtureKind fixture_kind_from_string(const std::string& s) {
    if (s == "gaussian-mixture") {
        return FixtureKind::gaussian_mixture;
    }
    if (s == "uniform-manifold") {
        return FixtureKind::uniform_manifold;
    }
    if (s == "layered-pipeline") {
        return FixtureKind::layered_pipeline;
    }
    throw Error("unknown fixture kind '" + s + "'");
}

std::string to_string(FixtureKind kind) {
    switch (kind) {
    case FixtureKind::gaussian_mixture:
        return "gaussian-mixture";
    case FixtureKind::uniform_manifold:
        return "uniform-manifold";
    case FixtureKind::layered_pipeline:
        break;
    }
    return "layered-pipeline";
}

namespace {

void validate(const FixtureSpec& spec) {
    if (spec.n < 2) {
        throw Error("fixture needs n >= 2");
    }
    if (spec.intrinsic_dim < 1 || spec.intrinsic_dim > spec.embed_dim) {
        throw Error("fixture needs 1 <= intrinsic dim <= embedding dim");
    }
    if (!(spec.sigma > 0.0)) {
        throw Error("fixture noise sigma must be positive");
    }
}

// y = x * Q[0:d, :]
void embed(std::span<const double> latent, const std::vector<double>& rotation, std::size_t dim,
           std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < latent.size(); ++i) {
        const double xi = latent[i];
        const double* q = rotation.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            out[j] += xi * q[j];
        }
    }
}

}  // namespace

std::vector<std::vector<double>> default_centers(std::size_t n_components, std::size_t dim, double separation,
                                                 double sigma) {
    if (n_components == 0) {
        throw Error("mixture needs at least one component");
    }
    std::vector<std::vector<double>> centers(n_components, std::vector<double>(dim, 0.0));
    if (n_components == 1) {
        return centers;
    }
    if (n_components == 2) {
        centers[0][0] = 0.5 * separation * sigma;
        centers[1][0] = -0.5 * separation * sigma;
        return centers;
    }
    if (n_components > 2 * dim) {
        throw Error("default centers support at most " + std::to_string(2 * dim) + " components in " +
                    std::to_string(dim) + " dimensions; pass explicit centers");
    }
    const double scale = separation * sigma / std::numbers::sqrt2;
    for (std::size_t c = 0; c < n_components; ++c) {
        centers[c][c % dim] = c < dim ? scale : -scale;
    }
    return centers;
}

std::vector<double> random_rotation(SplitMix64& rng, std::size_t dim) {
    std::vector<double> q(dim * dim);
    for (auto& v : q) {
        v = rng.normal();
    }
    for (std::size_t r = 0; r < dim; ++r) {
        double* row = q.data() + r * dim;
        for (std::size_t p = 0; p < r; ++p) {
            const double* prev = q.data() + p * dim;
            double dot = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                dot += row[j] * prev[j];
            }
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] -= dot * prev[j];
            }
        }
        double norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            norm += row[j] * row[j];
        }
        norm = std::sqrt(norm);
        if (!(norm > 1e-10)) {
            throw Error("random rotation is numerically singular");
        }
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] /= norm;
        }
    }
    return q;
}

std::pair<EmbeddingMatrix, LabelSet> gaussian_mixture(const FixtureSpec& spec) {
    validate(spec);
    const std::size_t d = spec.intrinsic_dim;
    const std::size_t dim = spec.embed_dim;
    auto centers = spec.centers.empty() ? default_centers(spec.n_components, d, spec.separation, spec.sigma)
                                        : spec.centers;
    for (const auto& c : centers) {
        if (c.size() != d) {
            throw Error("explicit centers must have the intrinsic dimension");
        }
    }
    const std::size_t nc = centers.size();
    if (nc == 0) {
        throw Error("mixture needs at least one component");
    }

    SplitMix64 rng(spec.seed);
    const auto rotation = random_rotation(rng, dim);

    std::vector<double> data(spec.n * dim);
    std::vector<int> component(spec.n);
    std::vector<double> latent(d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t c = i % nc;
        component[i] = static_cast<int>(c);
        for (std::size_t t = 0; t < d; ++t) {
            latent[t] = centers[c][t] + spec.sigma * rng.normal();
        }
        embed(latent, rotation, dim, {data.data() + i * dim, dim});
    }
    return {EmbeddingMatrix(spec.n, dim, std::move(data)), LabelSet::from_ids(component)};
}

EmbeddingMatrix uniform_manifold(const FixtureSpec& spec) {
    validate(spec);
    const std::size_t d = spec.intrinsic_dim;
    const std::size_t dim = spec.embed_dim;
    SplitMix64 rng(spec.seed);
    const auto rotation = random_rotation(rng, dim);

    std::vector<double> data(spec.n * dim);
    std::vector<double> latent(d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (auto& v : latent) {
            v = rng.uniform();
        }
        embed(latent, rotation, dim, {data.data() + i * dim, dim});
    }
    return EmbeddingMatrix(spec.n, dim, std::move(data));
}

LayeredFixture layered_pipeline(const FixtureSpec& spec) {
    if (spec.n_layers < 2) {
        throw Error("layered fixture needs at least two layers");
    }
    if (spec.n_subjects < 1 || spec.n_answers < 1) {
        throw Error("layered fixture needs at least one subject and one answer");
    }
    // each block holds its centers on +-axes
    const std::size_t subject_dim = std::max<std::size_t>(1, (spec.n_subjects + 1) / 2);
    const std::size_t answer_dim = std::max<std::size_t>(1, (spec.n_answers + 1) / 2);
    const std::size_t d = subject_dim + answer_dim;
    if (spec.embed_dim < d) {
        throw Error("layered fixture needs an embedding dim of at least " + std::to_string(d));
    }
    FixtureSpec checked = spec;
    checked.intrinsic_dim = d;
    validate(checked);

    const auto subject_centers = default_centers(spec.n_subjects, subject_dim, spec.separation, spec.sigma);
    const auto answer_centers = default_centers(spec.n_answers, answer_dim, spec.separation, spec.sigma);

    SplitMix64 rng(spec.seed);
    const std::size_t dim = spec.embed_dim;
    const auto rotation = random_rotation(rng, dim);

    LayeredFixture out;
    std::vector<int> subject(spec.n);
    std::vector<int> answer(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        subject[i] = static_cast<int>(i % spec.n_subjects);
        answer[i] = static_cast<int>((i / spec.n_subjects) % spec.n_answers);
    }
    std::vector<std::string> subject_names;
    std::vector<std::string> answer_names;
    for (std::size_t i = 0; i < spec.n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "subject_%02d", subject[i]);
        subject_names.emplace_back(buf);
        answer_names.emplace_back(1, static_cast<char>('A' + answer[i] % 26));
    }
    out.subjects = LabelSet::from_names(subject_names, LabelKind::subject);
    out.answers = LabelSet::from_names(answer_names, LabelKind::answer);

    std::vector<double> latent(d);
    for (std::size_t layer = 0; layer < spec.n_layers; ++layer) {
        const double t = static_cast<double>(layer) / static_cast<double>(spec.n_layers - 1);
        const double w = std::clamp(3.0 * t - 1.0, 0.0, 1.0);
        std::vector<double> data(spec.n * dim);
        for (std::size_t i = 0; i < spec.n; ++i) {
            const auto& sc = subject_centers[static_cast<std::size_t>(subject[i])];
            const auto& ac = answer_centers[static_cast<std::size_t>(answer[i])];
            for (std::size_t u = 0; u < subject_dim; ++u) {
                latent[u] = (1.0 - w) * sc[u];
            }
            for (std::size_t u = 0; u < answer_dim; ++u) {
                latent[subject_dim + u] = w * ac[u];
            }
            for (auto& v : latent) {
                v += spec.sigma * rng.normal();
            }
            embed(latent, rotation, dim, {data.data() + i * dim, dim});
        }
        out.layers.emplace_back(spec.n, dim, std::move(data), static_cast<int>(layer));
    }
    return out;
}

fs::path write_fixture(const fs::path& dir, const FixtureSpec& spec) {
    fs::create_directories(dir);
    Manifest manifest;
    manifest.dataset = "synthetic-" + to_string(spec.kind);
    manifest.provenance = {{"generator", "splitmix64"},
                           {"kind", to_string(spec.kind)},
                           {"seed", spec.seed},
                           {"n", spec.n},
                           {"intrinsic_dim", spec.intrinsic_dim},
                           {"embed_dim", spec.embed_dim},
                           {"separation", spec.separation},
                           {"sigma", spec.sigma}};

    switch (spec.kind) {
    case FixtureKind::gaussian_mixture: {
        auto [matrix, labels] = gaussian_mixture(spec);
        save_npy(dir / "layer_00.npy", matrix);
        save_labels_csv(dir / "components.csv", labels, "component");
        manifest.layers.push_back({0, "layer_00.npy"});
        manifest.labels["component"] = "components.csv";
        manifest.provenance["n_components"] = spec.centers.empty() ? spec.n_components : spec.centers.size();
        break;
    }
    case FixtureKind::uniform_manifold: {
        save_npy(dir / "layer_00.npy", uniform_manifold(spec));
        manifest.layers.push_back({0, "layer_00.npy"});
        break;
    }
    case FixtureKind::layered_pipeline: {
        auto fixture = layered_pipeline(spec);
        for (const auto& layer : fixture.layers) {
            char name[32];
            std::snprintf(name, sizeof name, "layer_%02d.npy", layer.layer_id());
            save_npy(dir / name, layer);
            manifest.layers.push_back({layer.layer_id(), name});
        }
        save_labels_csv(dir / "subjects.csv", fixture.subjects, "subject");
        save_labels_csv(dir / "answers.csv", fixture.answers, "answer");
        manifest.labels["subject"] = "subjects.csv";
        manifest.labels["answer"] = "answers.csv";
        manifest.provenance["n_layers"] = spec.n_layers;
        manifest.provenance["n_subjects"] = spec.n_subjects;
        manifest.provenance["n_answers"] = spec.n_answers;
        break;
    }
    }
    manifest.n_points = spec.n;
    const auto path = dir / "manifest.json";
    save_manifest(path, manifest);
    return path;
}

}  // namespace landscape
