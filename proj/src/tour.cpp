#include "loctail/tour.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "loctail/parallel.hpp"
#include "loctail/rng.hpp"

namespace loctail {

ScalingVector normalized_alpha(const ScalingVector& alpha) {
    double mn = alpha.min();
    if (mn >= 1.0) return alpha;
    std::vector<double> a(alpha.alpha);
    for (double& v : a) v /= mn;
    return ScalingVector(std::move(a));
}

std::vector<int> narrowing_order(const std::vector<Eigen::VectorXd>& points,
                                 const ScalingVector& alpha, std::optional<int> start) {
    const int n = static_cast<int>(points.size());
    if (n == 0) throw std::invalid_argument("narrowing_order: no points");
    for (const auto& p : points)
        if (p.size() != alpha.size())
            throw std::invalid_argument("narrowing_order: point dimension != |alpha|");
    ScalingVector a = normalized_alpha(alpha);

    int cur;
    if (start) {
        if (*start < 0 || *start >= n)
            throw std::invalid_argument("narrowing_order: start index out of range");
        cur = *start;
    } else {
        cur = 0;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            double v = alpha_norm(points[static_cast<std::size_t>(i)], a);
            if (v > best) {
                best = v;
                cur = i;
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    order[static_cast<std::size_t>(n - 1)] = cur;
    used[static_cast<std::size_t>(cur)] = 1;
    for (int k = n - 2; k >= 0; --k) {
        int next = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            double d = alpha_dist(points[static_cast<std::size_t>(cur)],
                                  points[static_cast<std::size_t>(i)], a);
            if (d == 0.0) throw std::invalid_argument("narrowing_order: duplicate points");
            if (d < best) {  // strict: ties keep the lowest index
                best = d;
                next = i;
            }
        }
        order[static_cast<std::size_t>(k)] = next;
        used[static_cast<std::size_t>(next)] = 1;
        cur = next;
    }
    return order;
}

std::vector<int> sorted_tour(const std::vector<Eigen::VectorXd>& points) {
    if (points.empty()) throw std::invalid_argument("sorted_tour: no points");
    for (const auto& p : points)
        if (p.size() != 1) throw std::invalid_argument("sorted_tour: one-axis points only");
    std::vector<int> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return points[static_cast<std::size_t>(i)][0] < points[static_cast<std::size_t>(j)][0];
    });
    return order;
}

double nn_tour_length(const std::vector<Eigen::VectorXd>& points,
                      const std::vector<int>& ordering, const ScalingVector& alpha) {
    const std::size_t n = points.size();
    if (ordering.size() != n)
        throw std::invalid_argument("nn_tour_length: ordering size != point count");
    std::vector<char> seen(n, 0);
    for (int idx : ordering) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= n || seen[static_cast<std::size_t>(idx)])
            throw std::invalid_argument("nn_tour_length: ordering is not a permutation");
        seen[static_cast<std::size_t>(idx)] = 1;
    }
    ScalingVector a = normalized_alpha(alpha);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k)
        total += alpha_dist(points[static_cast<std::size_t>(ordering[k])],
                            points[static_cast<std::size_t>(ordering[k + 1])], a);
    total += alpha_norm(points[static_cast<std::size_t>(ordering[n - 1])], a);  // t_{n+1} = 0
    return total;
}

std::vector<Cell> Covering::cells() const {
    double total = 1.0;
    for (double c : cells_per_axis) total *= c;
    if (total > 1e6) throw std::runtime_error("Covering::cells: too many cells to materialize");
    const int N = static_cast<int>(cells_per_axis.size());
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<long> idx(static_cast<std::size_t>(N), 0);
    for (;;) {
        Cell cell;
        cell.base.resize(N);
        cell.sides = sides;
        for (int i = 0; i < N; ++i)
            cell.base[i] = static_cast<double>(idx[static_cast<std::size_t>(i)]) * sides[i];
        out.push_back(std::move(cell));
        int axis = N - 1;
        while (axis >= 0) {
            if (++idx[static_cast<std::size_t>(axis)] <
                static_cast<long>(cells_per_axis[static_cast<std::size_t>(axis)]))
                break;
            idx[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

Covering grid_covering(int m, const ScalingVector& alpha) {
    if (m < 1) throw std::invalid_argument("grid_covering: m must be positive");
    ScalingVector a = normalized_alpha(alpha);
    const int N = a.size();
    Covering cov;
    cov.alpha = a;
    cov.sides.resize(N);
    cov.cells_per_axis.resize(static_cast<std::size_t>(N));
    cov.cardinality = 1.0;
    cov.diameter = 0.0;
    for (int i = 0; i < N; ++i) {
        double p = std::pow(static_cast<double>(m), a[i]);
        double count = std::ceil(p * (1.0 - 1e-12));
        cov.cells_per_axis[static_cast<std::size_t>(i)] = count;
        cov.cardinality *= count;
        cov.sides[i] = 1.0 / p;
        cov.diameter += std::pow(cov.sides[i], 1.0 / a[i]);
    }
    return cov;
}

double covering_bound(long n, const std::vector<Covering>& coverings, double ambient_diameter) {
    if (n < 1) throw std::invalid_argument("covering_bound: n must be positive");
    if (coverings.empty()) throw std::invalid_argument("covering_bound: no coverings");
    const double slack = 1e-12;
    if (ambient_diameter < coverings.front().diameter - slack)
        throw std::invalid_argument(
            "covering_bound: diameters must be nonincreasing from the ambient set on");
    for (std::size_t i = 0; i + 1 < coverings.size(); ++i)
        if (coverings[i + 1].diameter > coverings[i].diameter + slack)
            throw std::invalid_argument("covering_bound: covering diameters must be nonincreasing");

    double bound = static_cast<double>(n) * coverings.back().diameter;
    for (std::size_t mi = 1; mi < coverings.size(); ++mi)
        bound += coverings[mi].cardinality *
                 (coverings[mi - 1].diameter - coverings[mi].diameter);
    bound += coverings.front().cardinality * (ambient_diameter - coverings.front().diameter);
    return bound;
}

double grid_covering_bound(long n, const ScalingVector& alpha) {
    ScalingVector a = normalized_alpha(alpha);
    int M = static_cast<int>(
        std::ceil(std::pow(static_cast<double>(n), 1.0 / a.sum()) * (1.0 - 1e-12)));
    M = std::max(1, M);
    std::vector<Covering> coverings;
    coverings.reserve(static_cast<std::size_t>(M));
    for (int m = 1; m <= M; ++m) coverings.push_back(grid_covering(m, a));
    return covering_bound(n, coverings, static_cast<double>(a.size()));
}

namespace {

// tour objective: narrowing from the farthest point, toured in reversal
double narrowing_tour_objective(const std::vector<Eigen::VectorXd>& pts,
                                const ScalingVector& a) {
    std::vector<int> order = narrowing_order(pts, a);
    std::reverse(order.begin(), order.end());
    return nn_tour_length(pts, order, a);
}

bool collides(const std::vector<Eigen::VectorXd>& pts, std::size_t moved) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != moved && pts[i] == pts[moved]) return true;
    return false;
}

struct RestartResult {
    double length = -1.0;
    std::vector<Eigen::VectorXd> points;
};

}  // namespace

TourReport worst_case_search(long n, const ScalingVector& alpha, int restarts,
                             std::uint64_t seed) {
    if (n < 1 || n > 1024)
        throw std::invalid_argument("worst_case_search: n must lie in [1, 1024]");
    if (restarts < 1) throw std::invalid_argument("worst_case_search: restarts must be positive");
    ScalingVector a = normalized_alpha(alpha);
    const int N = a.size();

    TourReport report;
    report.alpha = a;
    report.n = n;
    report.restarts = restarts;
    report.seed = seed;
    report.bound = grid_covering_bound(n, a);

    if (n == 1) {
        // the objective ||t||_alpha is maximized coordinatewise at the far corner
        report.points = {Eigen::VectorXd::Ones(N)};
        report.ordering = {0};
        report.length = nn_tour_length(report.points, report.ordering, a);
        report.best_restart = 0;
        return report;
    }

    const int iters = 300;
    std::vector<RestartResult> results(static_cast<std::size_t>(restarts));
    parallel_chunks(static_cast<std::size_t>(restarts), 1,
                    [&](std::size_t r, std::size_t, std::size_t) {
                        RngStream rng(seed, r);
                        std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
                        for (auto& p : pts) {
                            p.resize(N);
                            for (int i = 0; i < N; ++i) p[i] = rng.next_unit();
                        }
                        double cur = narrowing_tour_objective(pts, a);
                        double step = 0.3;
                        for (int it = 0; it < iters; ++it) {
                            std::size_t pi = static_cast<std::size_t>(
                                rng.next_u64() % static_cast<std::uint64_t>(n));
                            int ci = static_cast<int>(rng.next_u64() %
                                                      static_cast<std::uint64_t>(N));
                            double old = pts[pi][ci];
                            double cand =
                                std::clamp(old + step * (2.0 * rng.next_unit() - 1.0), 0.0, 1.0);
                            pts[pi][ci] = cand;
                            if (collides(pts, pi)) {
                                pts[pi][ci] = old;
                            } else {
                                double val = narrowing_tour_objective(pts, a);
                                if (val > cur)
                                    cur = val;
                                else
                                    pts[pi][ci] = old;
                            }
                            step *= 0.99;
                        }
                        results[r].length = cur;
                        results[r].points = std::move(pts);
                    });

    int best = 0;
    for (int r = 1; r < restarts; ++r)
        if (results[static_cast<std::size_t>(r)].length >
            results[static_cast<std::size_t>(best)].length)
            best = r;
    report.best_restart = best;
    report.points = std::move(results[static_cast<std::size_t>(best)].points);
    std::vector<int> order = narrowing_order(report.points, a);
    std::reverse(order.begin(), order.end());
    report.ordering = std::move(order);
    report.length = nn_tour_length(report.points, report.ordering, a);

    if (report.length > report.bound + 1e-9)
        throw std::logic_error(
            "worst_case_search: tour length exceeded the covering bound - bound falsified");
    return report;
}

TourReport tour_exponent_sweep(const std::vector<long>& ns, const ScalingVector& alpha,
                               int restarts, std::uint64_t seed) {
    if (ns.empty()) throw std::invalid_argument("tour_exponent_sweep: no instance sizes");
    TourReport last;
    std::vector<long> sweep_n;
    std::vector<double> sweep_len;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        last = worst_case_search(ns[i], alpha, restarts, seed + i);
        sweep_n.push_back(ns[i]);
        sweep_len.push_back(last.length);
    }
    last.sweep_n = std::move(sweep_n);
    last.sweep_length = std::move(sweep_len);
    if (last.sweep_n.size() >= 2) {
        double mx = 0.0, my = 0.0;
        const double m = static_cast<double>(last.sweep_n.size());
        for (std::size_t i = 0; i < last.sweep_n.size(); ++i) {
            mx += std::log(static_cast<double>(last.sweep_n[i]));
            my += std::log(last.sweep_length[i]);
        }
        mx /= m;
        my /= m;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < last.sweep_n.size(); ++i) {
            double dx = std::log(static_cast<double>(last.sweep_n[i])) - mx;
            sxy += dx * (std::log(last.sweep_length[i]) - my);
            sxx += dx * dx;
        }
        last.sweep_slope = sxy / sxx;
    }
    return last;
}

}  // namespace loctail
