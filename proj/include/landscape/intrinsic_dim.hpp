#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "landscape/neighbors.hpp"

namespace landscape {

/// Gride maximum-likelihood intrinsic dimension at rank scale k (ratios r_{2k}/r_k).
struct GrideEstimate {
    double d_hat = 0.0;
    std::size_t k = 0;
    std::size_t n_used = 0;
    /// Total log-likelihood at d_hat, Beta normalizer included.
    double log_likelihood = 0.0;
};

inline constexpr double gride_d_min = 1e-3;
inline constexpr double gride_default_d_max = 512.0;
/// Points whose ratio satisfies mu - 1 below this are treated as degenerate.
inline constexpr double gride_degenerate_ratio = 1e-12;

/**
 * Log-likelihood of dimension @p d for the distance ratios @p mu:
 * sum_i [ log d + (k-1) log(mu_i^d - 1) - (d(2k-1)+1) log mu_i - log B(k,k) ].
 */
double gride_log_likelihood(std::span<const double> mu, std::size_t k, double d);

/// Derivative of gride_log_likelihood with respect to d.
double gride_score(std::span<const double> mu, std::size_t k, double d);

/**
 * Maximizes the likelihood over d in (gride_d_min, d_max]. Ratios that are
 * not finite or within gride_degenerate_ratio of 1 are dropped first.
 * Throws when nothing is left or no interior maximizer exists.
 */
GrideEstimate gride_from_ratios(std::span<const double> mu, std::size_t k, double d_max = gride_default_d_max);

/// Ratios r_{2k}(i)/r_k(i) for the non-degenerate points of @p graph.
std::vector<double> gride_ratios(const NeighborGraph& graph, std::size_t k);

GrideEstimate gride_mle(const NeighborGraph& graph, std::size_t k, double d_max = gride_default_d_max);

/// One estimate per rank in @p ks (strictly increasing, 2*max(ks) <= k_max).
std::vector<GrideEstimate> gride_scale_profile(const NeighborGraph& graph, std::span<const std::size_t> ks,
                                               double d_max = gride_default_d_max);

/// 1, 2, 4, ... up to the largest power of two with 2k <= k_max.
std::vector<std::size_t> geometric_ks(std::size_t k_max);

}  // namespace landscape
