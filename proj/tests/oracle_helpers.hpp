#pragma once

// Shared oracles for the test binaries: closed forms and brute-force routes
// that are independent of the library implementations they cross-check.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "loctail/field_model.hpp"
#include "loctail/kernel.hpp"
#include "loctail/rng.hpp"

namespace oracle {

// E|N(0,1)|^n = 2^{n/2} Gamma((n+1)/2) / sqrt(pi); the level-0 local time of
// Brownian motion on [0,1] has exactly these moments.
inline double abs_gaussian_moment(int n) {
    return std::exp(0.5 * n * std::log(2.0) + std::lgamma(0.5 * (n + 1))) /
           std::sqrt(M_PI);
}

inline loctail::MomentSeries exact_bm_series(int n_max, double rel_se = 1e-9) {
    loctail::MomentSeries s;
    s.fingerprint = "exact-bm-oracle";
    s.beta = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        loctail::MomentEstimate e;
        e.n = n;
        e.value = abs_gaussian_moment(n);
        e.se = rel_se * e.value;
        e.mean = e.mom = e.value;
        e.mean_se = e.mom_se = e.se;
        e.samples = 1;
        s.entries.push_back(e);
    }
    return s;
}

// Laplace cofactor expansion; exponential cost, fine up to 8x8.
inline double cofactor_det(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 1) return m(0, 0);
    double det = 0.0, sign = 1.0;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd minor(n - 1, n - 1);
        for (int r = 1; r < n; ++r) {
            int cc = 0;
            for (int c = 0; c < n; ++c)
                if (c != j) minor(r - 1, cc++) = m(r, c);
        }
        det += sign * m(0, j) * cofactor_det(minor);
        sign = -sign;
    }
    return det;
}

struct SsrwMoments {
    std::vector<double> value;  // orders 1..n_max of visits/sqrt(K)
    std::vector<double> se;
};

// Simple symmetric random walk: moments of (#returns to 0 in K steps)/sqrt(K).
// Converges to the Brownian level-0 local time on [0,1]; discretization bias
// is roughly 2.3*n/sqrt(K) relative at order n.
inline SsrwMoments ssrw_local_time_moments(long steps, long reps, int n_max,
                                           std::uint64_t seed) {
    std::vector<double> sum(static_cast<std::size_t>(n_max), 0.0);
    std::vector<double> sumsq(static_cast<std::size_t>(n_max), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(steps));
    for (long r = 0; r < reps; ++r) {
        loctail::RngStream rng(seed, static_cast<std::uint64_t>(r));
        long pos = 0, visits = 0;
        long k = 0;
        while (k < steps) {
            std::uint64_t bits = rng.next_u64();
            int take = static_cast<int>(std::min<long>(64, steps - k));
            for (int b = 0; b < take; ++b) {
                pos += (bits & 1) ? 1 : -1;
                bits >>= 1;
                if (pos == 0) ++visits;
            }
            k += take;
        }
        const double z = visits * scale;
        double p = 1.0;
        for (int n = 0; n < n_max; ++n) {
            p *= z;
            sum[static_cast<std::size_t>(n)] += p;
            sumsq[static_cast<std::size_t>(n)] += p * p;
        }
    }
    SsrwMoments out;
    for (int n = 0; n < n_max; ++n) {
        const double mean = sum[static_cast<std::size_t>(n)] / reps;
        const double var =
            (sumsq[static_cast<std::size_t>(n)] / reps - mean * mean) / (reps - 1);
        out.value.push_back(mean);
        out.se.push_back(std::sqrt(std::max(var, 0.0)));
    }
    return out;
}

// Uniform points in (0,1)^N with pairwise alpha-distance >= min_dist.
inline std::vector<Eigen::VectorXd> separated_points(loctail::RngStream& rng, int count,
                                                     const loctail::ScalingVector& alpha,
                                                     double min_dist = 1e-3,
                                                     bool include_origin_gap = true) {
    const int N = alpha.size();
    std::vector<Eigen::VectorXd> pts;
    int guard = 0;
    while (static_cast<int>(pts.size()) < count) {
        if (++guard > 100000) throw std::runtime_error("separated_points: cannot place");
        Eigen::VectorXd t(N);
        for (int i = 0; i < N; ++i) t[i] = rng.next_unit();
        bool ok = !include_origin_gap ||
                  loctail::alpha_norm(t, alpha) > min_dist;
        for (const auto& s : pts)
            ok = ok && loctail::alpha_dist(s, t, alpha) > min_dist;
        if (ok) pts.push_back(std::move(t));
    }
    return pts;
}

// Narrowing property: each hop of the reversed construction order goes to the
// current nearest previously-visited point.
inline bool narrowing_holds(const std::vector<Eigen::VectorXd>& points,
                            const std::vector<int>& order,
                            const loctail::ScalingVector& alpha) {
    // order[k] was chosen, walking backwards, as the nearest remaining point
    // to order[k+1]; equivalently, for every k the distance from order[k+1]
    // to order[k] is minimal over all points that appear at positions <= k.
    const int n = static_cast<int>(order.size());
    for (int k = 0; k + 1 < n; ++k) {
        const auto& next = points[static_cast<std::size_t>(order[static_cast<std::size_t>(k + 1)])];
        const double hop =
            loctail::alpha_dist(points[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])],
                                next, alpha);
        for (int j = 0; j <= k; ++j) {
            const double alt = loctail::alpha_dist(
                points[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])], next, alpha);
            if (alt < hop - 1e-12) return false;
        }
    }
    return true;
}

namespace detail {

inline void count_blocks(unsigned mask, int m, long long& leaves);

// enumerate ascending m-combinations of the set bits at/after min_bit
inline void count_combos(unsigned mask, unsigned picked, int left, int min_bit, int m,
                         long long& leaves) {
    if (left == 0) {
        count_blocks(mask & ~picked, m, leaves);
        return;
    }
    for (int b = min_bit; b < 16; ++b)
        if (mask & (1u << b)) count_combos(mask, picked | (1u << b), left - 1, b + 1, m, leaves);
}

inline void count_blocks(unsigned mask, int m, long long& leaves) {
    if (mask == 0) {
        ++leaves;
        return;
    }
    count_combos(mask, 0, m, 0, m, leaves);
}

}  // namespace detail

// Ordered partitions of [n*m] into n blocks of m, one leaf per partition.
// For m = 1 the blocks are a permutation; iterate those directly.
inline long long exhaustive_partition_count(int n, int m) {
    const int total = n * m;
    if (total > 14) throw std::invalid_argument("exhaustive_partition_count: too large");
    if (m == 1) {
        std::vector<int> items(static_cast<std::size_t>(total));
        for (int i = 0; i < total; ++i) items[static_cast<std::size_t>(i)] = i;
        long long count = 0;
        do {
            ++count;
        } while (std::next_permutation(items.begin(), items.end()));
        return count;
    }
    long long leaves = 0;
    detail::count_blocks((1u << total) - 1u, m, leaves);
    return leaves;
}

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n, my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i)
        sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    return sxy / sxx;
}

}  // namespace oracle
