#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "ccvt/cylinder_table.hpp"
#include "ccvt/errors.hpp"
#include "ccvt/ifs_model.hpp"

namespace ccvt {

// Finite stand-in for the measure at truncation depth M: one weighted atom
// per cylinder, placed at the cylinder's conditional mean. For any partition
// into contiguous atom blocks,
//   partition_distortion = (weighted k-means cost on atoms) + within_cell_offset,
// the offset being the partition-independent sum of p_sigma s_sigma² V terms.
struct AtomMeasure {
    std::vector<double> positions;  // strictly increasing
    std::vector<double> weights;
    double within_cell_offset = 0;

    // prefix sums with a leading zero
    std::vector<double> acc_w, acc_wx, acc_wx2;

    int64_t size() const { return static_cast<int64_t>(positions.size()); }

    void build_prefix() {
        const int64_t n = size();
        acc_w.assign(n + 1, 0.0);
        acc_wx.assign(n + 1, 0.0);
        acc_wx2.assign(n + 1, 0.0);
        for (int64_t i = 0; i < n; ++i) {
            acc_w[i + 1] = acc_w[i] + weights[i];
            acc_wx[i + 1] = acc_wx[i] + weights[i] * positions[i];
            acc_wx2[i + 1] = acc_wx2[i] + weights[i] * positions[i] * positions[i];
        }
    }

    // 1-based inclusive atom range helpers.
    double range_weight(int64_t i, int64_t j) const { return acc_w[j] - acc_w[i - 1]; }
    double range_mean(int64_t i, int64_t j) const {
        return (acc_wx[j] - acc_wx[i - 1]) / (acc_w[j] - acc_w[i - 1]);
    }
    double range_sqcost(int64_t i, int64_t j, double center) const {
        return (acc_wx2[j] - acc_wx2[i - 1]) - 2 * center * (acc_wx[j] - acc_wx[i - 1]) +
               center * center * (acc_w[j] - acc_w[i - 1]);
    }
};

inline AtomMeasure discretize_from_levels(const LevelMaps<double>& levels, double tail_mean,
                                          double tail_variance, bool parallel = true,
                                          int64_t size_cap = int64_t(1) << kDefaultLevelCap) {
    const int64_t n_atoms = cylinder_count(levels, size_cap);
    AtomMeasure atoms;
    atoms.positions.resize(n_atoms);
    atoms.weights.resize(n_atoms);
    walk_cylinders(levels, parallel,
                   [&](int64_t idx, double scale, double offset, double weight) {
                       atoms.positions[idx] = scale * tail_mean + offset;
                       atoms.weights[idx] = weight;
                   });
    double mean_sq_scale = 1.0;
    for (const auto& family : levels) {
        double level_sum = 0.0;
        for (const MapEntry<double>& e : family) level_sum += e.prob * e.scale * e.scale;
        mean_sq_scale *= level_sum;
    }
    atoms.within_cell_offset = mean_sq_scale * tail_variance;
    atoms.build_prefix();
    return atoms;
}

inline AtomMeasure discretize(const IfsModel<double>& model, int truncation_level,
                              bool parallel = true, int level_cap = kDefaultLevelCap) {
    if (truncation_level < 1 || truncation_level > level_cap)
        throw LevelTooLarge("truncation level out of range");
    return discretize_from_levels(dyadic_levels(model, truncation_level), model.mean,
                                  model.variance, parallel, int64_t(1) << level_cap);
}

struct LloydResult {
    std::vector<double> centroids;
    std::vector<double> boundaries;    // Voronoi midpoints between centroids
    std::vector<int64_t> cell_splits;  // last atom index (1-based) of each cell but the final
    double cost = 0;                   // includes within_cell_offset
    int iterations = 0;
};

namespace detail {

// One assignment pass: midpoint boundaries, then atom ranges per cell.
inline std::vector<int64_t> assign_cells(const AtomMeasure& atoms,
                                         const std::vector<double>& centroids) {
    const int n = static_cast<int>(centroids.size());
    std::vector<int64_t> splits(n - 1);
    for (int k = 0; k + 1 < n; ++k) {
        const double boundary = 0.5 * (centroids[k] + centroids[k + 1]);
        // atoms with position <= boundary go left
        splits[k] = std::upper_bound(atoms.positions.begin(), atoms.positions.end(), boundary) -
                    atoms.positions.begin();
    }
    int64_t prev = 0;
    for (int k = 0; k < n; ++k) {
        const int64_t hi = (k + 1 < n) ? splits[k] : atoms.size();
        if (hi <= prev) throw EmptyCell("a Lloyd cell captured no atoms");
        prev = hi;
    }
    return splits;
}

inline double cells_cost(const AtomMeasure& atoms, const std::vector<double>& centroids,
                         const std::vector<int64_t>& splits) {
    const int n = static_cast<int>(centroids.size());
    double cost = atoms.within_cell_offset;
    int64_t lo = 1;
    for (int k = 0; k < n; ++k) {
        const int64_t hi = (k + 1 < n) ? splits[k] : atoms.size();
        cost += atoms.range_sqcost(lo, hi, centroids[k]);
        lo = hi + 1;
    }
    return cost;
}

}  // namespace detail

// Discrete Lloyd iteration on the atom measure: alternate midpoint
// assignment and centroid recomputation until movement drops below tol.
// The cost never increases between iterations; that is checked, not assumed.
inline LloydResult lloyd(const AtomMeasure& atoms, std::vector<double> centroids,
                         double tol = 1e-12, int max_iter = 10000) {
    const int n = static_cast<int>(centroids.size());
    if (n < 1) throw ParamOutOfRange("lloyd needs at least one centroid");
    for (int k = 0; k + 1 < n; ++k)
        if (!(centroids[k] < centroids[k + 1]))
            throw ParamOutOfRange("lloyd init must be strictly increasing");

    double prev_cost = std::numeric_limits<double>::infinity();
    std::vector<int64_t> splits;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        splits = detail::assign_cells(atoms, centroids);
        double movement = 0;
        int64_t lo = 1;
        for (int k = 0; k < n; ++k) {
            const int64_t hi = (k + 1 < n) ? splits[k] : atoms.size();
            const double next = atoms.range_mean(lo, hi);
            movement = std::max(movement, std::fabs(next - centroids[k]));
            centroids[k] = next;
            lo = hi + 1;
        }
        const double cost = detail::cells_cost(atoms, centroids, splits);
        if (cost > prev_cost + 1e-12 * (1 + std::fabs(prev_cost)))
            throw InternalError("Lloyd cost increased between iterations");
        prev_cost = cost;
        if (movement < tol) {
            ++iter;
            break;
        }
    }

    LloydResult result;
    result.centroids = std::move(centroids);
    result.cell_splits = detail::assign_cells(atoms, result.centroids);
    result.boundaries.resize(n - 1);
    for (int k = 0; k + 1 < n; ++k)
        result.boundaries[k] = 0.5 * (result.centroids[k] + result.centroids[k + 1]);
    result.cost = detail::cells_cost(atoms, result.centroids, result.cell_splits);
    result.iterations = iter;
    return result;
}

// n weighted-quantile positions, the default Lloyd start.
inline std::vector<double> quantile_init(const AtomMeasure& atoms, int n) {
    std::vector<double> init(n);
    for (int k = 0; k < n; ++k) {
        const double q = (k + 0.5) / n;
        const int64_t idx =
            std::lower_bound(atoms.acc_w.begin() + 1, atoms.acc_w.end(), q) -
            (atoms.acc_w.begin() + 1);
        init[k] = atoms.positions[std::min<int64_t>(idx, atoms.size() - 1)];
    }
    for (int k = 1; k < n; ++k)
        if (init[k] <= init[k - 1]) init[k] = std::nextafter(init[k - 1], 2.0);
    return init;
}

// Quantile start plus seeded jittered restarts; returns the cheapest
// converged run. Restarts that lose a cell are discarded.
inline LloydResult lloyd_best_of(const AtomMeasure& atoms, int n, int restarts = 8,
                                 double tol = 1e-12, int max_iter = 10000,
                                 uint64_t seed = 0x5eed) {
    if (n < 1 || n > atoms.size()) throw ParamOutOfRange("centroid count out of range");
    LloydResult best;
    bool have_best = false;
    for (int attempt = 0; attempt <= restarts; ++attempt) {
        std::vector<double> init = quantile_init(atoms, n);
        if (attempt > 0) {
            std::mt19937_64 rng(seed + attempt);
            std::uniform_real_distribution<double> jitter(-0.45, 0.45);
            const double spread = 1.0 / (2 * n);
            for (double& x : init) x = std::clamp(x + jitter(rng) * spread, 0.0, 1.0);
            std::sort(init.begin(), init.end());
            for (int k = 1; k < n; ++k)
                if (init[k] <= init[k - 1]) init[k] = std::nextafter(init[k - 1], 2.0);
        }
        try {
            LloydResult run = lloyd(atoms, std::move(init), tol, max_iter);
            if (!have_best || run.cost < best.cost) {
                best = std::move(run);
                have_best = true;
            }
        } catch (const EmptyCell&) {
            continue;
        }
    }
    if (!have_best) throw EmptyCell("every Lloyd restart lost a cell");
    return best;
}

// Exact minimum of partition_distortion over all partitions into n
// contiguous blocks, by dynamic programming on suffixes. Every CVT is such a
// partition, so this cost lower-bounds every CVT's distortion. Ties resolve
// to the lexicographically smallest boundary vector.
template <typename S>
std::pair<BlockPartition, S> dp_optimal_blocks(const CylinderTable<S>& table, int n,
                                               bool parallel = true, int dp_level_cap = 12) {
    const int64_t size = table.size();
    if (table.level > dp_level_cap)
        throw LevelTooLarge("table level exceeds the DP cap");
    if (n < 1) throw ParamOutOfRange("block count must be at least 1");
    if (n > size) throw NTooLarge("more blocks than cylinders");

    // suffix[l][i]: minimal cost of splitting cylinders i..size into l blocks.
    std::vector<std::vector<S>> suffix(n + 1, std::vector<S>(size + 2, S(0)));
    for (int64_t i = 1; i <= size; ++i) suffix[1][i] = table.distortion_at_centroid(i, size);
    for (int l = 2; l <= n; ++l) {
#pragma omp parallel for schedule(static) if (parallel)
        for (int64_t i = 1; i <= size - l + 1; ++i) {
            S best = table.distortion_at_centroid(i, i) + suffix[l - 1][i + 1];
            for (int64_t j = i + 1; j <= size - l + 1; ++j) {
                S cand = table.distortion_at_centroid(i, j) + suffix[l - 1][j + 1];
                if (cand < best) best = cand;
            }
            suffix[l][i] = best;
        }
    }

    std::vector<int64_t> boundaries;
    boundaries.reserve(n - 1);
    int64_t pos = 1;
    for (int l = n; l >= 2; --l) {
        for (int64_t j = pos; j <= size - l + 1; ++j) {
            S cand = table.distortion_at_centroid(pos, j) + suffix[l - 1][j + 1];
            if (cand == suffix[l][pos]) {  // same arithmetic as the min scan
                boundaries.push_back(j);
                pos = j + 1;
                break;
            }
        }
    }
    if (static_cast<int>(boundaries.size()) != n - 1)
        throw InternalError("DP reconstruction failed to recover the optimum");
    return {BlockPartition(table.level, size, std::move(boundaries)), suffix[n][1]};
}

struct TruncatedMoments {
    double e_est = 0;
    double m2_est = 0;
    double v_est = 0;
};

// Truncated-sum moment estimates using cylinder midpoints,
//   E_est = sum over |sigma|=M of p_sigma (S_sigma(0)+S_sigma(1))/2,
// deliberately not using S_sigma(E): this estimator knows nothing about the
// closed-form moments it is checking. Error decays like max_sigma s_sigma.
inline TruncatedMoments truncated_moments_from_levels(const LevelMaps<double>& levels,
                                                      bool parallel = true) {
    // fixed split depth, so partial-sum grouping (and rounding) never
    // depends on the thread count
    size_t split = 0;
    int64_t prefix_count = 1;
    while (split < levels.size() && prefix_count < 1024) {
        prefix_count *= static_cast<int64_t>(levels[split].size());
        ++split;
    }
    struct Prefix {
        double scale, offset, weight;
    };
    std::vector<Prefix> prefixes;
    prefixes.reserve(prefix_count);
    {
        LevelMaps<double> head(levels.begin(), levels.begin() + split);
        struct Collect {
            std::vector<Prefix>& out;
            void operator()(int64_t, double s, double o, double w) const {
                out.push_back({s, o, w});
            }
        } collect{prefixes};
        detail::LeafWalk<double, Collect> walker{head, collect};
        walker.descend(0, 0, 1.0, 0.0, 1.0);
    }

    struct Partial {
        double e = 0, m2 = 0;
    };
    std::vector<Partial> partials(prefixes.size());

    struct Accumulate {
        const LevelMaps<double>& levels;
        size_t split;
        Partial& sum;
        void descend(size_t depth, double scale, double offset, double weight) {
            if (depth == levels.size()) {
                const double mid = offset + 0.5 * scale;
                sum.e += weight * mid;
                sum.m2 += weight * mid * mid;
                return;
            }
            for (const MapEntry<double>& e : levels[depth])
                descend(depth + 1, scale * e.scale, scale * e.offset + offset,
                        weight * e.prob);
        }
    };

#pragma omp parallel for schedule(static) if (parallel)
    for (int64_t k = 0; k < static_cast<int64_t>(prefixes.size()); ++k) {
        Accumulate acc{levels, split, partials[k]};
        acc.descend(split, prefixes[k].scale, prefixes[k].offset, prefixes[k].weight);
    }

    TruncatedMoments out;
    for (const Partial& p : partials) {
        out.e_est += p.e;
        out.m2_est += p.m2;
    }
    out.v_est = out.m2_est - out.e_est * out.e_est;
    return out;
}

inline TruncatedMoments moments_by_truncation(const IfsModel<double>& model, int depth,
                                              bool parallel = true,
                                              int level_cap = kDefaultLevelCap) {
    if (depth < 1 || depth > level_cap) throw LevelTooLarge("truncation depth out of range");
    return truncated_moments_from_levels(dyadic_levels(model, depth), parallel);
}

}  // namespace ccvt
