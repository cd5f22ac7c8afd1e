#include "landscape/intrinsic_dim.hpp"

#include <cmath>
#include <string>

namespace landscape {

namespace {

template <class F>
double pairwise_sum(std::size_t begin, std::size_t end, const F& term) {
    if (end - begin <= 8) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            s += term(i);
        }
        return s;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

// log(mu^d - 1), stable for mu^d close to 1 and for large d*log(mu)
double log_pow_minus_one(double log_mu, double d) {
    const double x = d * log_mu;
    return x + std::log(-std::expm1(-x));
}

double log_beta_kk(std::size_t k) {
    const double kk = static_cast<double>(k);
    return 2.0 * std::lgamma(kk) - std::lgamma(2.0 * kk);
}

}  // namespace

double gride_log_likelihood(std::span<const double> mu, std::size_t k, double d) {
    const double km1 = static_cast<double>(k) - 1.0;
    const double expo = d * (2.0 * static_cast<double>(k) - 1.0) + 1.0;
    const double log_d = std::log(d);
    const double lb = log_beta_kk(k);
    return pairwise_sum(0, mu.size(), [&](std::size_t i) {
        const double lm = std::log(mu[i]);
        const double mid = km1 > 0.0 ? km1 * log_pow_minus_one(lm, d) : 0.0;
        return log_d + mid - expo * lm - lb;
    });
}

double gride_score(std::span<const double> mu, std::size_t k, double d) {
    const double km1 = static_cast<double>(k) - 1.0;
    const double two_k_m1 = 2.0 * static_cast<double>(k) - 1.0;
    return pairwise_sum(0, mu.size(), [&](std::size_t i) {
        const double lm = std::log(mu[i]);
        // mu^d / (mu^d - 1) = 1 / (1 - mu^-d)
        const double frac = km1 > 0.0 ? km1 * lm / -std::expm1(-d * lm) : 0.0;
        return 1.0 / d + frac - two_k_m1 * lm;
    });
}

namespace {

double gride_score_slope(std::span<const double> mu, std::size_t k, double d) {
    const double km1 = static_cast<double>(k) - 1.0;
    return pairwise_sum(0, mu.size(), [&](std::size_t i) {
        const double lm = std::log(mu[i]);
        double curv = 0.0;
        if (km1 > 0.0) {
            const double e = std::exp(-d * lm);
            const double denom = -std::expm1(-d * lm);
            curv = km1 * lm * lm * e / (denom * denom);
        }
        return -1.0 / (d * d) - curv;
    });
}

}  // namespace

GrideEstimate gride_from_ratios(std::span<const double> ratios, std::size_t k, double d_max) {
    if (k == 0) {
        throw Error("Gride rank k must be at least 1");
    }
    std::vector<double> kept;
    kept.reserve(ratios.size());
    for (double r : ratios) {
        if (std::isfinite(r) && r - 1.0 >= gride_degenerate_ratio) {
            kept.push_back(r);
        }
    }
    const std::span<const double> mu(kept);
    if (mu.empty()) {
        throw Error("Gride: all points degenerate (every distance ratio is 1)");
    }
    if (!(d_max > gride_d_min)) {
        throw Error("Gride: d_max must exceed " + std::to_string(gride_d_min));
    }

    // The log-likelihood is strictly concave in d, so the score has at most one root.
    double lo = gride_d_min;
    double hi = d_max;
    const double f_lo = gride_score(mu, k, lo);
    const double f_hi = gride_score(mu, k, hi);
    if (f_lo <= 0.0) {
        throw Error("Gride: no likelihood maximizer above d = " + std::to_string(gride_d_min));
    }
    if (f_hi >= 0.0) {
        throw Error("Gride: no likelihood maximizer in (0, " + std::to_string(d_max) + "]");
    }

    // k = 1 closed form n / sum(log mu) is also a good start for larger k
    const double sum_log = pairwise_sum(0, mu.size(), [&](std::size_t i) { return std::log(mu[i]); });
    double d = static_cast<double>(mu.size()) / sum_log;
    if (!(d > lo && d < hi)) {
        d = 0.5 * (lo + hi);
    }

    for (int iter = 0; iter < 200; ++iter) {
        const double f = gride_score(mu, k, d);
        if (f == 0.0) {
            break;
        }
        if (f > 0.0) {
            lo = d;
        } else {
            hi = d;
        }
        const double slope = gride_score_slope(mu, k, d);
        double next = d - f / slope;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const double step = std::abs(next - d);
        d = next;
        if (step <= 1e-13 * std::max(1.0, d) || hi - lo <= 1e-13 * std::max(1.0, d)) {
            break;
        }
    }

    GrideEstimate est;
    est.d_hat = d;
    est.k = k;
    est.n_used = mu.size();
    est.log_likelihood = gride_log_likelihood(mu, k, d);
    return est;
}

std::vector<double> gride_ratios(const NeighborGraph& graph, std::size_t k) {
    if (k == 0 || 2 * k > graph.k_max()) {
        throw Error("Gride at k = " + std::to_string(k) + " needs 2k <= k_max = " + std::to_string(graph.k_max()));
    }
    std::vector<double> mu;
    mu.reserve(graph.n_points());
    for (std::size_t i = 0; i < graph.n_points(); ++i) {
        const double r1 = graph.distance(i, k);
        const double r2 = graph.distance(i, 2 * k);
        if (r1 <= 0.0) {
            continue;
        }
        const double ratio = r2 / r1;
        if (ratio - 1.0 < gride_degenerate_ratio) {
            continue;
        }
        mu.push_back(ratio);
    }
    return mu;
}

GrideEstimate gride_mle(const NeighborGraph& graph, std::size_t k, double d_max) {
    const auto mu = gride_ratios(graph, k);
    return gride_from_ratios(mu, k, d_max);
}

std::vector<GrideEstimate> gride_scale_profile(const NeighborGraph& graph, std::span<const std::size_t> ks,
                                               double d_max) {
    std::vector<GrideEstimate> out;
    out.reserve(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (i > 0 && ks[i] <= ks[i - 1]) {
            throw Error("Gride scale profile: ranks must be strictly increasing");
        }
        out.push_back(gride_mle(graph, ks[i], d_max));
    }
    return out;
}

std::vector<std::size_t> geometric_ks(std::size_t k_max) {
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; 2 * k <= k_max; k *= 2) {
        ks.push_back(k);
    }
    return ks;
}

}  // namespace landscape
