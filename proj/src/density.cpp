#include "landscape/density.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <boost/math/special_functions/trigamma.hpp>

#include "landscape/json_writer.hpp"

namespace landscape {

double log_unit_ball_volume(double d) {
    return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
}

double log_ball_volume(double d, double radius) {
    return log_unit_ball_volume(d) + d * std::log(radius);
}

DensityField estimate_log_density(const NeighborGraph& graph, std::size_t k, double d) {
    if (k == 0 || k > graph.k_max()) {
        throw Error("density rank k = " + std::to_string(k) + " must lie in [1, k_max = " +
                    std::to_string(graph.k_max()) + "]");
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw Error("density needs a positive finite intrinsic dimension");
    }

    const std::size_t n = graph.n_points();
    std::string zero_rows;
    std::size_t n_zero = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (graph.distance(i, k) <= 0.0) {
            if (n_zero < 20) {
                zero_rows += (n_zero ? ", " : "") + std::to_string(i);
            }
            ++n_zero;
        }
    }
    if (n_zero > 0) {
        throw Error("kNN density undefined: " + std::to_string(n_zero) + " point(s) have r_" + std::to_string(k) +
                    " = 0 (duplicates); indices " + zero_rows + (n_zero > 20 ? ", ..." : ""));
    }

    DensityField field;
    field.k = k;
    field.d_used = d;
    field.log_rho.resize(n);
    const double offset = std::log(static_cast<double>(k)) - std::log(static_cast<double>(n)) - log_unit_ball_volume(d);
    for (std::size_t i = 0; i < n; ++i) {
        field.log_rho[i] = offset - d * std::log(graph.distance(i, k));
    }
    field.err.assign(n, std::sqrt(boost::math::trigamma(static_cast<double>(k))));
    return field;
}

void save_density_csv(const std::filesystem::path& path, const DensityField& field) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out << "index,log_rho,err\n";
    for (std::size_t i = 0; i < field.size(); ++i) {
        out << i << ',' << format_double(field.log_rho[i]) << ',' << format_double(field.err[i]) << '\n';
    }
}

}  // namespace landscape
