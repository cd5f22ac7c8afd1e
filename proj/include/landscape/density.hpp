#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "landscape/neighbors.hpp"

namespace landscape {

/**
 * kNN log-density of every point: log rho_i = log k - log N - log V_i, where
 * V_i is the volume of the d-dimensional ball of radius r_k(i).
 *
 * The error of each log-density is sqrt(trigamma(k)), the standard
 * deviation of the log of a kNN volume estimate.
 */
struct DensityField {
    std::vector<double> log_rho;
    std::vector<double> err;
    std::size_t k = 0;
    double d_used = 0.0;

    std::size_t size() const { return log_rho.size(); }
};

/// log of the unit-ball volume pi^{d/2} / Gamma(d/2 + 1).
double log_unit_ball_volume(double d);

/// log V = log(omega_d) + d log r.
double log_ball_volume(double d, double radius);

DensityField estimate_log_density(const NeighborGraph& graph, std::size_t k, double d);

/// CSV with columns index,log_rho,err.
void save_density_csv(const std::filesystem::path& path, const DensityField& field);

}  // namespace landscape
