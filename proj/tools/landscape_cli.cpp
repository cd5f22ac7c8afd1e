// landscape: intrinsic dimension, density peaks and topography of embedding dumps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "landscape/json_writer.hpp"
#include "landscape/pipeline.hpp"
#include "landscape/synth.hpp"

namespace fs = std::filesystem;
using namespace landscape;

namespace {

struct AnalysisFlags {
    RunConfig config;
    std::string halo_rule = "max-border";
    std::vector<std::string> labels;
};

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& f) {
    cmd->add_option("--k-gride", f.config.k_gride, "Gride rank scale k (ratios r_2k / r_k)")->capture_default_str();
    cmd->add_option("--k-density", f.config.k_density, "rank of the kNN density estimate")->capture_default_str();
    cmd->add_option("--k-adp", f.config.k_adp, "neighborhood size for peaks and borders")->capture_default_str();
    cmd->add_option("--z", f.config.z, "confidence for merging peaks")->capture_default_str();
    cmd->add_option("--overlap-k", f.config.overlap_k, "rank for neighborhood overlap")->capture_default_str();
    cmd->add_option("--halo-rule", f.halo_rule, "core/halo rule")
        ->check(CLI::IsMember({"max-border", "min-saddle-global"}))
        ->capture_default_str();
    cmd->add_option("--window", f.config.smoothing_window, "moving-average window over layers")
        ->capture_default_str();
    cmd->add_option("--d-max", f.config.d_max, "upper bound of the ID search")->capture_default_str();
    cmd->add_option("--id-scales", f.config.id_scales, "extra Gride ranks to report, increasing")->delimiter(',');
    cmd->add_flag("--core-only", f.config.core_only, "cluster purity from core points only");
    cmd->add_option("--purity-threshold", f.config.purity_threshold, "dominant-fraction threshold")
        ->capture_default_str();
}

RunConfig finish(AnalysisFlags& f) {
    f.config.halo_rule = halo_rule_from_string(f.halo_rule);
    f.config.validate();
    return f.config;
}

std::pair<std::string, fs::path> split_label_arg(const std::string& arg) {
    auto eq = arg.find('=');
    if (eq == std::string::npos) {
        fs::path p(arg);
        return {p.stem().string(), p};
    }
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probability-landscape analysis of representation point clouds"};
    app.set_config("--config", "", "TOML/INI file with flag values (command-line flags win)");
    app.require_subcommand(1);
    app.add_option_function<unsigned>(
           "--workers", [](unsigned w) { setenv("LANDSCAPE_WORKERS", std::to_string(w).c_str(), 1); },
           "worker threads (default: LANDSCAPE_WORKERS or all cores)")
        ->envname("LANDSCAPE_WORKERS");

    // id
    auto* id_cmd = app.add_subcommand("id", "Gride intrinsic dimension profile of one matrix");
    std::string id_matrix;
    std::vector<std::size_t> id_ks;
    double id_d_max = gride_default_d_max;
    std::string id_out;
    id_cmd->add_option("matrix", id_matrix, "NPY or raw matrix")->required()->check(CLI::ExistingFile);
    id_cmd->add_option("--ks", id_ks, "ranks, strictly increasing (default 1,2,4,... up to N/2)")->delimiter(',');
    id_cmd->add_option("--d-max", id_d_max, "upper bound of the ID search")->capture_default_str();
    id_cmd->add_option("--out", id_out, "CSV destination (default stdout)");

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "Density peaks, topography and label stats for one matrix");
    AnalysisFlags cluster_flags;
    std::string cluster_matrix;
    std::string cluster_out;
    cluster_cmd->add_option("matrix", cluster_matrix, "NPY or raw matrix")->required()->check(CLI::ExistingFile);
    cluster_cmd->add_option("--labels", cluster_flags.labels, "label file, optionally as name=path")
        ->take_all();
    cluster_cmd->add_option("--out", cluster_out, "output directory")->required();
    add_analysis_flags(cluster_cmd, cluster_flags);

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Per-layer analysis of a manifest with layer profiles");
    AnalysisFlags analyze_flags;
    std::string manifest_path;
    std::string reference_path;
    std::string analyze_out;
    analyze_cmd->add_option("manifest", manifest_path, "manifest JSON")->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--reference", reference_path, "manifest to compare neighborhoods against")
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--labels", analyze_flags.config.label_selection, "label sets to use (default all)")
        ->delimiter(',');
    analyze_cmd->add_option("--out", analyze_out, "output directory")->required();
    add_analysis_flags(analyze_cmd, analyze_flags);

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "Neighborhood overlap of two matrices or ARI of two partitions");
    std::string cmp_a;
    std::string cmp_b;
    std::string cmp_labels_a;
    std::string cmp_labels_b;
    std::size_t cmp_k = default_overlap_k;
    compare_cmd->add_option("--a", cmp_a, "first matrix")->check(CLI::ExistingFile);
    compare_cmd->add_option("--b", cmp_b, "second matrix")->check(CLI::ExistingFile);
    compare_cmd->add_option("--labels-a", cmp_labels_a, "first label file")->check(CLI::ExistingFile);
    compare_cmd->add_option("--labels-b", cmp_labels_b, "second label file")->check(CLI::ExistingFile);
    compare_cmd->add_option("--overlap-k", cmp_k, "neighborhood rank")->capture_default_str();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write a deterministic synthetic fixture");
    FixtureSpec spec;
    std::string synth_kind = "gaussian-mixture";
    std::string synth_out;
    synth_cmd->add_option("--kind", synth_kind)
        ->check(CLI::IsMember({"gaussian-mixture", "uniform-manifold", "layered-pipeline"}))
        ->capture_default_str();
    synth_cmd->add_option("--n", spec.n)->capture_default_str();
    synth_cmd->add_option("--intrinsic-dim", spec.intrinsic_dim)->capture_default_str();
    synth_cmd->add_option("--embed-dim", spec.embed_dim)->capture_default_str();
    synth_cmd->add_option("--components", spec.n_components)->capture_default_str();
    synth_cmd->add_option("--separation", spec.separation, "center spacing in units of sigma")
        ->capture_default_str();
    synth_cmd->add_option("--sigma", spec.sigma)->capture_default_str();
    synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
    synth_cmd->add_option("--layers", spec.n_layers)->capture_default_str();
    synth_cmd->add_option("--subjects", spec.n_subjects)->capture_default_str();
    synth_cmd->add_option("--answers", spec.n_answers)->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*id_cmd) {
            const auto matrix = load_embeddings(id_matrix);
            std::size_t limit = matrix.n_points() - 1;
            if (id_ks.empty()) {
                id_ks = geometric_ks(limit);
            }
            if (id_ks.empty()) {
                throw Error("matrix too small for any Gride scale");
            }
            const auto graph = build_knn(matrix, 2 * id_ks.back());
            const auto profile = gride_scale_profile(graph, id_ks, id_d_max);
            std::ostringstream csv;
            csv << "k,d_hat\n";
            for (const auto& e : profile) {
                csv << e.k << ',' << format_double(e.d_hat) << '\n';
            }
            if (id_out.empty()) {
                std::cout << csv.str();
            } else {
                std::ofstream(id_out, std::ios::binary | std::ios::trunc) << csv.str();
            }
        } else if (*cluster_cmd) {
            const auto config = finish(cluster_flags);
            auto matrix = load_embeddings(cluster_matrix);
            NamedLabels labels;
            for (const auto& arg : cluster_flags.labels) {
                auto [name, path] = split_label_arg(arg);
                labels.emplace_back(name, load_labels(path, matrix.n_points(), label_kind_from_string(name)));
            }
            RunReport run;
            run.dataset = fs::path(cluster_matrix).filename().string();
            run.provenance = nlohmann::json::object();
            run.config = config;
            run.layers.push_back(analyze_layer(matrix, labels, config));
            write_run(cluster_out, run);
            const auto& layer = run.layers.front();
            std::cout << "ID " << format_double(layer.id.d_hat) << ", " << layer.clustering.n_clusters()
                      << " cluster(s), core fraction " << format_double(layer.clustering.core_fraction()) << '\n';
        } else if (*analyze_cmd) {
            const auto config = finish(analyze_flags);
            const auto manifest = load_manifest(manifest_path);
            std::optional<Manifest> reference;
            if (!reference_path.empty()) {
                reference = load_manifest(reference_path);
            }
            const auto run = analyze_manifest(manifest, config, reference ? &*reference : nullptr);
            write_run(analyze_out, run);
            std::cout << "analyzed " << run.layers.size() << " layer(s) into " << analyze_out << '\n';
        } else if (*compare_cmd) {
            bool did = false;
            if (!cmp_a.empty() || !cmp_b.empty()) {
                if (cmp_a.empty() || cmp_b.empty()) {
                    throw Error("--a and --b must be given together");
                }
                const auto ga = build_knn(load_embeddings(cmp_a), cmp_k);
                const auto gb = build_knn(load_embeddings(cmp_b), cmp_k);
                std::cout << "overlap," << format_double(neighborhood_overlap(ga, gb, cmp_k)) << '\n';
                did = true;
            }
            if (!cmp_labels_a.empty() || !cmp_labels_b.empty()) {
                if (cmp_labels_a.empty() || cmp_labels_b.empty()) {
                    throw Error("--labels-a and --labels-b must be given together");
                }
                const auto la = read_labels(cmp_labels_a);
                const auto lb = load_labels(cmp_labels_b, la.size());
                std::cout << "ari," << format_double(adjusted_rand_index(la, lb)) << '\n';
                did = true;
            }
            if (!did) {
                throw Error("compare needs --a/--b or --labels-a/--labels-b");
            }
        } else if (*synth_cmd) {
            spec.kind = fixture_kind_from_string(synth_kind);
            const auto path = write_fixture(synth_out, spec);
            std::cout << path.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
