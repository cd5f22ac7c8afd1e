#include "landscape/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "landscape/json_writer.hpp"

namespace landscape {

namespace fs = std::filesystem;

void RunConfig::validate() const {
    if (k_gride < 1 || k_density < 1 || k_adp < 1 || overlap_k < 1) {
        throw Error("all neighbor ranks must be at least 1");
    }
    if (!(z >= 0.0)) {
        throw Error("z must be non-negative");
    }
    if (smoothing_window < 1) {
        throw Error("smoothing window must be at least 1");
    }
    for (std::size_t i = 1; i < id_scales.size(); ++i) {
        if (id_scales[i] <= id_scales[i - 1]) {
            throw Error("ID scales must be strictly increasing");
        }
    }
}

std::size_t RunConfig::required_k_max(bool with_overlap) const {
    std::size_t k = std::max({2 * k_gride, k_density, k_adp});
    if (with_overlap) {
        k = std::max(k, overlap_k);
    }
    if (!id_scales.empty()) {
        k = std::max(k, 2 * id_scales.back());
    }
    return k;
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["k_gride"] = k_gride;
    j["k_density"] = k_density;
    j["k_adp"] = k_adp;
    j["z"] = z;
    j["overlap_k"] = overlap_k;
    j["halo_rule"] = to_string(halo_rule);
    j["smoothing_window"] = smoothing_window;
    j["d_max"] = d_max;
    j["id_scales"] = id_scales;
    j["core_only"] = core_only;
    j["purity_threshold"] = purity_threshold;
    return j;
}

namespace {

std::vector<std::string> leaf_names_for(const Clustering& clustering, const CompositionSummary* comp) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < clustering.n_clusters(); ++c) {
        std::string name = "P" + std::to_string(c);
        if (comp != nullptr && comp->clusters[c].dominant >= 0) {
            char frac[16];
            std::snprintf(frac, sizeof frac, "%.2f", comp->clusters[c].fraction);
            name += ":" + comp->clusters[c].dominant_name + "(" + frac + ")";
        }
        names.push_back(std::move(name));
    }
    return names;
}

}  // namespace

LayerReport analyze_layer(const EmbeddingMatrix& matrix, const NeighborGraph& graph, const NamedLabels& labels,
                          const RunConfig& config) {
    config.validate();
    if (graph.n_points() != matrix.n_points()) {
        throw Error("neighbor graph does not belong to this matrix");
    }
    LayerReport report;
    report.layer_id = matrix.layer_id();
    report.n_points = matrix.n_points();
    report.embed_dim = matrix.embed_dim();
    report.zero_distance_flag = graph.has_zero_distance();

    report.id = gride_mle(graph, config.k_gride, config.d_max);
    if (!config.id_scales.empty()) {
        report.id_profile = gride_scale_profile(graph, config.id_scales, config.d_max);
    }
    report.density = estimate_log_density(graph, config.k_density, report.id.d_hat);
    report.clustering = density_peaks(matrix, graph, report.density, config.k_adp, config.z, config.halo_rule);
    report.dissimilarity = dissimilarity_matrix(report.clustering, report.density);

    for (const auto& [name, set] : labels) {
        report.compositions.emplace_back(
            name, cluster_composition(report.clustering, set, config.purity_threshold, config.core_only));
    }
    const CompositionSummary* leaf_source = nullptr;
    for (const auto& [name, comp] : report.compositions) {
        if (name == "subject") {
            leaf_source = &comp;
        }
    }
    if (leaf_source == nullptr && !report.compositions.empty()) {
        leaf_source = &report.compositions.front().second;
    }
    report.dendrogram = wpgma_dendrogram(report.dissimilarity, leaf_names_for(report.clustering, leaf_source));
    return report;
}

LayerReport analyze_layer(const EmbeddingMatrix& matrix, const NamedLabels& labels, const RunConfig& config) {
    config.validate();
    const auto graph = build_knn(matrix, config.required_k_max(false), config.workers);
    return analyze_layer(matrix, graph, labels, config);
}

nlohmann::ordered_json LayerReport::to_json() const {
    nlohmann::ordered_json j;
    j["layer_id"] = layer_id;
    j["n_points"] = n_points;
    j["embed_dim"] = embed_dim;
    j["zero_distance_flag"] = zero_distance_flag;
    j["intrinsic_dim"] = {{"k", id.k}, {"d_hat", id.d_hat}, {"n_used", id.n_used}, {"log_likelihood", id.log_likelihood}};
    if (!id_profile.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& e : id_profile) {
            arr.push_back({{"k", e.k}, {"d_hat", e.d_hat}, {"n_used", e.n_used}});
        }
        j["id_profile"] = arr;
    }
    j["density"] = {{"k", density.k},
                    {"d_used", density.d_used},
                    {"err", density.err.empty() ? 0.0 : density.err.front()}};

    const auto sizes = clustering.cluster_sizes();
    std::vector<std::size_t> core_counts(clustering.n_clusters(), 0);
    for (std::size_t i = 0; i < clustering.assignment.size(); ++i) {
        if (clustering.core[i]) {
            ++core_counts[static_cast<std::size_t>(clustering.assignment[i])];
        }
    }
    nlohmann::ordered_json cl;
    cl["z"] = clustering.z;
    cl["halo_rule"] = to_string(clustering.halo_rule);
    cl["n_raw_peaks"] = clustering.n_raw_peaks;
    cl["n_clusters"] = clustering.n_clusters();
    cl["core_fraction"] = clustering.core_fraction();
    cl["peaks"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < clustering.n_clusters(); ++c) {
        const auto p = static_cast<std::size_t>(clustering.peak_points[c]);
        cl["peaks"].push_back({{"cluster", c},
                               {"point", p},
                               {"log_rho", density.log_rho[p]},
                               {"size", sizes[c]},
                               {"core_fraction", static_cast<double>(core_counts[c]) / static_cast<double>(sizes[c])}});
    }
    cl["saddles"] = nlohmann::ordered_json::array();
    for (const auto& [key, s] : clustering.saddles) {
        cl["saddles"].push_back(
            {{"a", key.first}, {"b", key.second}, {"point", s.point}, {"log_rho", s.log_rho}, {"err", s.err}});
    }
    cl["merge_log"] = nlohmann::ordered_json::array();
    for (const auto& m : clustering.merge_log) {
        cl["merge_log"].push_back({{"absorbed", m.absorbed}, {"survivor", m.survivor}, {"t", m.t_stat}});
    }
    j["clustering"] = cl;

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < dissimilarity.n; ++a) {
        std::vector<double> row(dissimilarity.values.begin() + static_cast<std::ptrdiff_t>(a * dissimilarity.n),
                                dissimilarity.values.begin() + static_cast<std::ptrdiff_t>((a + 1) * dissimilarity.n));
        rows.push_back(row);
    }
    j["dissimilarity"] = {{"log_rho_max", dissimilarity.log_rho_max},
                          {"fill_value", dissimilarity.fill_value},
                          {"matrix", rows}};
    j["dendrogram"] = landscape::to_json(dendrogram);

    if (!compositions.empty()) {
        nlohmann::ordered_json labels_j;
        for (const auto& [name, comp] : compositions) {
            nlohmann::ordered_json lj;
            lj["ari"] = comp.ari;
            lj["threshold"] = comp.threshold;
            lj["n_above_threshold"] = comp.n_above_threshold;
            lj["clusters"] = nlohmann::ordered_json::array();
            for (std::size_t c = 0; c < comp.clusters.size(); ++c) {
                const auto& cc = comp.clusters[c];
                lj["clusters"].push_back({{"cluster", c},
                                          {"size", cc.size},
                                          {"dominant", cc.dominant_name},
                                          {"fraction", cc.fraction}});
            }
            labels_j[name] = lj;
        }
        j["labels"] = labels_j;
    }
    return j;
}

NamedLabels load_manifest_labels(const Manifest& manifest, const RunConfig& config) {
    NamedLabels out;
    for (const auto& [name, path] : manifest.labels) {
        if (!config.label_selection.empty() &&
            std::find(config.label_selection.begin(), config.label_selection.end(), name) ==
                config.label_selection.end()) {
            continue;
        }
        out.emplace_back(name, load_labels(path, manifest.n_points, label_kind_from_string(name)));
    }
    for (const auto& wanted : config.label_selection) {
        if (!manifest.labels.contains(wanted)) {
            throw Error("manifest has no label set named '" + wanted + "'");
        }
    }
    return out;
}

RunReport analyze_manifest(const Manifest& manifest, const RunConfig& config, const Manifest* reference) {
    config.validate();
    if (reference != nullptr) {
        if (reference->layers.size() != manifest.layers.size()) {
            throw Error("reference manifest has " + std::to_string(reference->layers.size()) + " layers, expected " +
                        std::to_string(manifest.layers.size()));
        }
        if (reference->n_points != manifest.n_points) {
            throw Error("reference manifest covers a different number of points");
        }
    }

    RunReport run;
    run.dataset = manifest.dataset;
    run.provenance = manifest.provenance;
    run.config = config;
    const auto labels = load_manifest_labels(manifest, config);

    const std::size_t n_layers = manifest.layers.size();
    run.layers.resize(n_layers);
    std::vector<double> overlaps(n_layers, 0.0);
    std::vector<std::exception_ptr> errors(n_layers);

    const unsigned workers = config.workers == 0 ? default_worker_count() : config.workers;
    const unsigned layer_workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_layers));
    // knn rows are split across threads only when layers run one at a time
    const unsigned knn_workers = layer_workers > 1 ? 1 : workers;

    auto run_layer = [&](std::size_t idx) {
        const auto& entry = manifest.layers[idx];
        try {
            auto matrix = load_embeddings(entry.matrix);
            matrix.set_layer_id(entry.layer_id);
            const bool with_overlap = reference != nullptr;
            const auto graph = build_knn(matrix, config.required_k_max(with_overlap), knn_workers);
            run.layers[idx] = analyze_layer(matrix, graph, labels, config);
            if (with_overlap) {
                auto ref_matrix = load_embeddings(reference->layers[idx].matrix);
                const auto ref_graph = build_knn(ref_matrix, config.overlap_k, knn_workers);
                overlaps[idx] = neighborhood_overlap(graph, ref_graph, config.overlap_k);
            }
        } catch (const std::exception& e) {
            errors[idx] = std::make_exception_ptr(
                Error("layer " + std::to_string(entry.layer_id) + " (" + entry.matrix.filename().string() +
                      "): " + e.what()));
        }
    };

    if (layer_workers <= 1) {
        for (std::size_t idx = 0; idx < n_layers; ++idx) {
            run_layer(idx);
            if (errors[idx]) {
                std::rethrow_exception(errors[idx]);
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < layer_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t idx = next++; idx < n_layers; idx = next++) {
                    run_layer(idx);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    auto make_profile = [&](const std::string& quantity, auto value_of) {
        LayerProfile p;
        p.quantity = quantity;
        for (const auto& layer : run.layers) {
            p.layer_ids.push_back(layer.layer_id);
            p.values.push_back(value_of(layer));
        }
        return p;
    };
    run.profiles.push_back(make_profile("intrinsic_dim", [](const LayerReport& l) { return l.id.d_hat; }));
    run.profiles.push_back(make_profile(
        "n_clusters", [](const LayerReport& l) { return static_cast<double>(l.clustering.n_clusters()); }));
    run.profiles.push_back(
        make_profile("core_fraction", [](const LayerReport& l) { return l.clustering.core_fraction(); }));
    for (std::size_t li = 0; li < labels.size(); ++li) {
        run.profiles.push_back(make_profile("ari_" + labels[li].first,
                                            [li](const LayerReport& l) { return l.compositions[li].second.ari; }));
    }
    if (reference != nullptr) {
        LayerProfile p;
        p.quantity = "overlap";
        for (std::size_t idx = 0; idx < n_layers; ++idx) {
            p.layer_ids.push_back(run.layers[idx].layer_id);
            p.values.push_back(overlaps[idx]);
        }
        run.profiles.push_back(std::move(p));
    }
    for (const auto& p : run.profiles) {
        if (config.smoothing_window <= p.size()) {
            run.smoothed.push_back(smooth_profile(p, config.smoothing_window));
        } else {
            LayerProfile empty;
            empty.quantity = p.quantity;
            run.smoothed.push_back(std::move(empty));
        }
    }
    return run;
}

nlohmann::ordered_json RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["dataset"] = dataset;
    j["provenance"] = nlohmann::ordered_json::parse(provenance.dump());
    j["config"] = config.to_json();
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : layers) {
        j["layers"].push_back(layer.to_json());
    }
    nlohmann::ordered_json profiles_j;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        profiles_j[profiles[i].quantity] = {{"layer_ids", profiles[i].layer_ids},
                                            {"raw", profiles[i].values},
                                            {"smoothed_layer_ids", smoothed[i].layer_ids},
                                            {"smoothed", smoothed[i].values}};
    }
    j["profiles"] = profiles_j;
    return j;
}

void write_run(const fs::path& out_dir, const RunReport& run) {
    // everything is computed before the first file is touched
    const auto report = run.to_json();
    fs::create_directories(out_dir / "profiles");
    fs::create_directories(out_dir / "dendrograms");
    fs::create_directories(out_dir / "assignments");
    for (std::size_t i = 0; i < run.profiles.size(); ++i) {
        save_profile_csv(out_dir / "profiles" / (run.profiles[i].quantity + ".csv"), run.profiles[i]);
        save_profile_csv(out_dir / "profiles" / (run.profiles[i].quantity + "_smoothed.csv"), run.smoothed[i]);
    }
    for (const auto& layer : run.layers) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "layer_%03d", layer.layer_id);
        save_dendrogram(out_dir / "dendrograms" / stem, layer.dendrogram);
        std::ofstream out(out_dir / "assignments" / (std::string(stem) + ".csv"), std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write assignments for layer " + std::to_string(layer.layer_id));
        }
        out << "cluster\n";
        for (int c : layer.clustering.assignment) {
            out << c << '\n';
        }
    }
    write_json_file(out_dir / "report.json", report);
}

}  // namespace landscape
