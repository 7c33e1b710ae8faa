#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "ccvt/cylinder_table.hpp"
#include "ccvt/errors.hpp"
#include "ccvt/numeric.hpp"

namespace ccvt {

struct SearchConfig {
    double tolerance = 1e-12;      // slack for the gap inequalities (0 in rational mode)
    bool symmetry_pruning = false; // valid only for reflection-symmetric measures
    int m_start = 1;
    int m_max = 14;
    bool parallel = true;
    int level_cap = kDefaultLevelCap;
};

// A block partition that passed the gap condition at every boundary, with the
// data that makes it a CVT: block centroids (the generators) and the Voronoi
// midpoints separating them.
template <typename S>
struct CvtResult {
    BlockPartition partition;
    std::vector<S> centroids;
    std::vector<S> boundary_points;
    S distortion;
};

// The midpoint of two consecutive block centroids must fall in the closed gap
// after cylinder `boundary`: right(boundary) <= (c_left+c_right)/2 <= left(boundary+1).
// This is what makes the blocks a Voronoi partition P-almost surely.
template <typename S>
bool gap_condition(const CylinderTable<S>& table, const S& c_left, const S& c_right,
                   int64_t boundary, const S& eps) {
    if (boundary < 1 || boundary >= table.size())
        throw IndexOutOfRange("gap boundary out of range");
    S mid = (c_left + c_right) / S(2);
    return table.right[boundary - 1] - eps <= mid && mid <= table.left[boundary] + eps;
}

namespace detail {

template <typename S>
CvtResult<S> make_result(const CylinderTable<S>& table, int n,
                         const std::vector<int64_t>& boundaries) {
    BlockPartition partition(table.level, table.size(), boundaries);
    CvtResult<S> result{std::move(partition), {}, {}, S(0)};
    result.centroids.reserve(n);
    for (int l = 0; l < n; ++l) {
        auto [lo, hi] = result.partition.block(l);
        result.centroids.push_back(table.centroid(lo, hi));
        result.distortion = result.distortion + table.distortion_at_centroid(lo, hi);
    }
    result.boundary_points.reserve(n - 1);
    for (int l = 0; l + 1 < n; ++l)
        result.boundary_points.push_back((result.centroids[l] + result.centroids[l + 1]) / S(2));
    return result;
}

inline std::vector<int64_t> reflected_boundaries(const std::vector<int64_t>& b, int64_t size) {
    std::vector<int64_t> out(b.rbegin(), b.rend());
    for (int64_t& v : out) v = size - v;
    return out;
}

// Depth-first enumeration of boundary vectors with the early gap checks.
// When closing block l at [start, end], the boundary before it can be tested:
// its midpoint grows monotonically with end, so once the midpoint overshoots
// the gap no larger end can pass, and undershoots are skipped one comparison
// each. Bounds are local to the current prefix.
template <typename S>
struct BlockSearch {
    const CylinderTable<S>& table;
    int n;
    S eps;
    bool reflect_prune;
    std::vector<CvtResult<S>>& out;

    std::vector<int64_t> bvec;

    void run_first(int64_t b1) {
        bvec.assign(1, b1);
        S c1 = table.centroid(1, b1);
        choose(2, b1 + 1, c1);
    }

    void choose(int block, int64_t start, const S& prev_centroid) {
        const int64_t size = table.size();
        const S gap_lo = table.right[start - 2] - eps;  // right end of cylinder start-1
        const S gap_hi = table.left[start - 1] + eps;   // left end of cylinder start
        if (block == n) {
            S c = table.centroid(start, size);
            S mid = (prev_centroid + c) / S(2);
            if (gap_lo <= mid && mid <= gap_hi) emit();
            return;
        }
        const int64_t hi = size - (n - block);
        for (int64_t end = start; end <= hi; ++end) {
            S c = table.centroid(start, end);
            S mid = (prev_centroid + c) / S(2);
            if (mid < gap_lo) continue;  // all smaller end already failed
            if (mid > gap_hi) break;     // monotone in end: no larger end can pass
            bvec.push_back(end);
            choose(block + 1, end + 1, c);
            bvec.pop_back();
        }
    }

    void emit() {
        if (reflect_prune) {
            std::vector<int64_t> mirror = reflected_boundaries(bvec, table.size());
            if (std::lexicographical_compare(mirror.begin(), mirror.end(), bvec.begin(),
                                             bvec.end()))
                return;  // the reflected partition is enumerated instead
        }
        out.push_back(make_result(table, n, bvec));
    }
};

template <typename S>
bool table_is_symmetric(const CylinderTable<S>& table, const S& eps) {
    const int64_t size = table.size();
    for (int64_t i = 1; i <= size; ++i) {
        const int64_t j = size + 1 - i;
        if (scalar_ops<S>::abs(table.weight(i, i) - table.weight(j, j)) > eps) return false;
        if (scalar_ops<S>::abs(table.left[i - 1] - (S(1) - table.right[j - 1])) > eps)
            return false;
    }
    return true;
}

}  // namespace detail

// Enumerates C(n, size): every partition of the cylinder indices into n
// contiguous blocks whose centroid midpoints all satisfy the gap condition.
// Results are sorted lexicographically by boundary vector. Pruning (the
// monotone break above, and optional symmetry halving) never changes the
// output set. Parallel mode spreads the first boundary across threads.
template <typename S>
std::vector<CvtResult<S>> enumerate_cvts(const CylinderTable<S>& table, int n,
                                         const SearchConfig& config) {
    const int64_t size = table.size();
    if (n < 1) throw ParamOutOfRange("generator count n must be at least 1");
    if (n > size) throw NTooLarge("n exceeds the number of cylinders at this level");
    const S eps = scalar_ops<S>::tolerance(config.tolerance);
    if (config.symmetry_pruning && !detail::table_is_symmetric(table, eps))
        throw SymmetryPruningInvalid("symmetry pruning requires r1=r2 and p1=p2");

    std::vector<CvtResult<S>> results;
    if (n == 1) {
        results.push_back(detail::make_result(table, 1, {}));
        return results;
    }

    int64_t first_cap = size - (n - 1);
    if (config.symmetry_pruning) first_cap = std::min(first_cap, size / 2);

    std::vector<std::vector<CvtResult<S>>> per_first(first_cap);
#pragma omp parallel for schedule(dynamic, 4) if (config.parallel)
    for (int64_t b1 = 1; b1 <= first_cap; ++b1) {
        detail::BlockSearch<S> search{table, n, eps, config.symmetry_pruning,
                                      per_first[b1 - 1], {}};
        search.run_first(b1);
    }
    for (auto& chunk : per_first)
        for (auto& r : chunk) results.push_back(std::move(r));

    if (config.symmetry_pruning) {
        // Close under reflection; reflected results are recomputed from the
        // table so on/off runs produce identical values.
        const size_t kept = results.size();
        for (size_t k = 0; k < kept; ++k) {
            std::vector<int64_t> mirror =
                detail::reflected_boundaries(results[k].partition.boundaries(), size);
            if (mirror != results[k].partition.boundaries())
                results.push_back(detail::make_result(table, n, mirror));
        }
    }

    std::sort(results.begin(), results.end(),
              [](const CvtResult<S>& a, const CvtResult<S>& b) {
                  return a.partition.boundaries() < b.partition.boundaries();
              });
    return results;
}

// Unpruned reference: tries every combination of n-1 boundaries and checks
// all gap conditions after the fact. Exponentially slower; kept to validate
// the pruned search against.
template <typename S>
std::vector<CvtResult<S>> enumerate_cvts_naive(const CylinderTable<S>& table, int n,
                                               const SearchConfig& config) {
    const int64_t size = table.size();
    if (n < 1) throw ParamOutOfRange("generator count n must be at least 1");
    if (n > size) throw NTooLarge("n exceeds the number of cylinders at this level");
    const S eps = scalar_ops<S>::tolerance(config.tolerance);

    std::vector<CvtResult<S>> results;
    std::vector<int64_t> bvec;
    auto check_all = [&]() {
        std::vector<S> centroids;
        centroids.reserve(n);
        int64_t lo = 1;
        for (int l = 0; l < n; ++l) {
            const int64_t hi = (l == n - 1) ? size : bvec[l];
            centroids.push_back(table.centroid(lo, hi));
            lo = hi + 1;
        }
        for (int l = 0; l + 1 < n; ++l)
            if (!gap_condition(table, centroids[l], centroids[l + 1], bvec[l], eps)) return;
        results.push_back(detail::make_result(table, n, bvec));
    };
    auto recurse = [&](auto&& self, int64_t next_min, int remaining) -> void {
        if (remaining == 0) {
            check_all();
            return;
        }
        for (int64_t b = next_min; b <= size - remaining; ++b) {
            bvec.push_back(b);
            self(self, b + 1, remaining - 1);
            bvec.pop_back();
        }
    };
    if (n == 1)
        results.push_back(detail::make_result(table, 1, {}));
    else
        recurse(recurse, 1, n - 1);
    return results;
}

// Steps the level up from m_start until the enumeration is nonempty.
template <typename S>
std::pair<int, std::vector<CvtResult<S>>> find_cvts(const IfsModel<S>& model, int n,
                                                    const SearchConfig& config) {
    if (n < 1) throw ParamOutOfRange("generator count n must be at least 1");
    if (config.m_start < 1 || config.m_start > config.m_max || config.m_max > config.level_cap)
        throw ParamOutOfRange("require 1 <= m_start <= m_max <= level cap");
    int m = config.m_start;
    while ((int64_t(1) << m) < n) ++m;  // raise until n fits
    for (; m <= config.m_max; ++m) {
        CylinderTable<S> table = build_table(model, m, config.parallel, config.level_cap);
        std::vector<CvtResult<S>> results = enumerate_cvts(table, n, config);
        if (!results.empty()) return {m, std::move(results)};
    }
    throw NoCvtFoundUpToMMax(config.m_max);
}

// Minimum-distortion element; distortions within eps count as tied and the
// lexicographically smallest boundary vector wins.
template <typename S>
const CvtResult<S>& best_cvt(const std::vector<CvtResult<S>>& results,
                             const S& eps = scalar_ops<S>::tolerance(1e-12)) {
    if (results.empty()) throw EmptyList("best_cvt over an empty CVT list");
    const CvtResult<S>* best = &results.front();
    for (const CvtResult<S>& r : results)
        if (r.distortion < best->distortion - eps) best = &r;
    return *best;
}

// C(n, 2^m) ⊆ C(n, 2^{m+1}): refining every cylinder keeps the same blocks of
// the support, so boundary indices just scale by 2^extra.
inline BlockPartition lift_partition(const BlockPartition& partition, int extra_levels,
                                     int level_cap = kDefaultLevelCap) {
    if (extra_levels < 0 || partition.level() + extra_levels > level_cap)
        throw LevelTooLarge("lifted level exceeds the cap");
    const int64_t factor = int64_t(1) << extra_levels;
    std::vector<int64_t> boundaries = partition.boundaries();
    for (int64_t& b : boundaries) b *= factor;
    return BlockPartition(partition.level() + extra_levels, partition.size() * factor,
                          std::move(boundaries));
}

// Mirror image under x -> 1-x (meaningful for symmetric measures).
inline BlockPartition reflect_partition(const BlockPartition& partition) {
    std::vector<int64_t> boundaries(partition.boundaries().rbegin(),
                                    partition.boundaries().rend());
    for (int64_t& b : boundaries) b = partition.size() - b;
    return BlockPartition(partition.level(), partition.size(), std::move(boundaries));
}

}  // namespace ccvt
