#include "landscape/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

namespace landscape {

NeighborGraph::NeighborGraph(std::size_t n_points, std::size_t k_max, std::vector<std::int32_t> index_rows,
                             std::vector<double> distance_rows)
    : n_points_(n_points), k_max_(k_max), indices_(std::move(index_rows)), distances_(std::move(distance_rows)) {
    if (indices_.size() != n_points_ * k_max_ || distances_.size() != n_points_ * k_max_) {
        throw Error("neighbor graph arrays do not match " + std::to_string(n_points_) + "x" + std::to_string(k_max_));
    }
    for (std::size_t i = 0; i < n_points_; ++i) {
        auto row = distances(i);
        auto idx = neighbors(i);
        for (std::size_t r = 0; r < k_max_; ++r) {
            if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= n_points_ || static_cast<std::size_t>(idx[r]) == i) {
                throw Error("neighbor graph row " + std::to_string(i) + " has an invalid index");
            }
            if (!(row[r] >= 0.0) || !std::isfinite(row[r]) || (r > 0 && row[r] < row[r - 1])) {
                throw Error("neighbor graph row " + std::to_string(i) + " has unsorted or invalid distances");
            }
        }
        if (k_max_ > 0 && row[0] == 0.0) {
            has_zero_distance_ = true;
        }
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    // four interleaved partial sums, combined pairwise
    const std::size_t n = a.size();
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        for (std::size_t t = 0; t < 4; ++t) {
            const double diff = a[j + t] - b[j + t];
            acc[t] += diff * diff;
        }
    }
    for (; j < n; ++j) {
        const double diff = a[j] - b[j];
        acc[j % 4] += diff * diff;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

unsigned default_worker_count() {
    if (const char* env = std::getenv("LANDSCAPE_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

NeighborGraph build_knn(const EmbeddingMatrix& matrix, std::size_t k_max, unsigned workers) {
    const std::size_t n = matrix.n_points();
    if (k_max == 0) {
        throw Error("k_max must be at least 1");
    }
    if (k_max >= n) {
        throw Error("k_max = " + std::to_string(k_max) + " needs at least " + std::to_string(k_max + 1) +
                    " points, matrix has " + std::to_string(n));
    }
    if (workers == 0) {
        workers = default_worker_count();
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    std::vector<std::int32_t> indices(n * k_max);
    std::vector<double> distances(n * k_max);

    auto process_rows = [&](std::size_t begin, std::size_t end) {
        std::vector<double> dist(n);
        std::vector<std::int32_t> order(n - 1);
        for (std::size_t i = begin; i < end; ++i) {
            auto xi = matrix.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                dist[j] = std::sqrt(squared_distance(xi, matrix.row(j)));
            }
            std::size_t pos = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    order[pos++] = static_cast<std::int32_t>(j);
                }
            }
            auto closer = [&](std::int32_t a, std::int32_t b) {
                return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
            };
            auto kth = order.begin() + static_cast<std::ptrdiff_t>(k_max);
            std::nth_element(order.begin(), kth - 1, order.end(), closer);
            std::sort(order.begin(), kth, closer);
            for (std::size_t r = 0; r < k_max; ++r) {
                indices[i * k_max + r] = order[r];
                distances[i * k_max + r] = dist[order[r]];
            }
        }
    };

    if (workers <= 1) {
        process_rows(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            std::size_t begin = w * chunk;
            std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) {
                break;
            }
            pool.emplace_back(process_rows, begin, end);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return NeighborGraph(n, k_max, std::move(indices), std::move(distances));
}

void save_graph(const std::filesystem::path& prefix, const NeighborGraph& graph) {
    std::vector<std::int64_t> idx(graph.all_indices().begin(), graph.all_indices().end());
    save_npy_int64(prefix.string() + ".indices.npy", graph.n_points(), graph.k_max(), idx);
    save_npy(prefix.string() + ".distances.npy",
             EmbeddingMatrix(graph.n_points(), graph.k_max(), graph.all_distances()));
}

NeighborGraph load_graph(const std::filesystem::path& prefix) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    auto idx = load_npy_int64(prefix.string() + ".indices.npy", rows, cols);
    auto dist = load_embeddings(prefix.string() + ".distances.npy");
    if (dist.n_points() != rows || dist.embed_dim() != cols) {
        throw Error("cached graph '" + prefix.string() + "': index and distance arrays differ in shape");
    }
    std::vector<std::int32_t> indices(idx.begin(), idx.end());
    return NeighborGraph(rows, cols, std::move(indices), dist.data());
}

}  // namespace landscape
