#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ccvt/errors.hpp"
#include "ccvt/ifs_model.hpp"

namespace ccvt {

inline constexpr int kDefaultLevelCap = 26;

// n contiguous blocks [i_l+1, i_{l+1}] tiling the cylinder indices 1..size.
// Only the n-1 interior boundaries i_1 < ... < i_{n-1} are stored.
class BlockPartition {
  public:
    BlockPartition(int level, int64_t size, std::vector<int64_t> boundaries)
        : level_(level), size_(size), boundaries_(std::move(boundaries)) {
        if (size_ < 1) throw PartitionMismatch("partition over empty index range");
        int64_t prev = 0;
        for (int64_t b : boundaries_) {
            if (b <= prev || b >= size_)
                throw PartitionMismatch("boundaries must be strictly increasing in 1..size-1");
            prev = b;
        }
    }

    int level() const { return level_; }
    int64_t size() const { return size_; }
    int block_count() const { return static_cast<int>(boundaries_.size()) + 1; }
    const std::vector<int64_t>& boundaries() const { return boundaries_; }

    // 1-based inclusive index range of block l (0-based l).
    std::pair<int64_t, int64_t> block(int l) const {
        const int n = block_count();
        if (l < 0 || l >= n) throw IndexOutOfRange("block index out of range");
        const int64_t lo = (l == 0) ? 1 : boundaries_[l - 1] + 1;
        const int64_t hi = (l == n - 1) ? size_ : boundaries_[l];
        return {lo, hi};
    }

    bool operator==(const BlockPartition&) const = default;

  private:
    int level_;
    int64_t size_;
    std::vector<int64_t> boundaries_;
};

// Level-m cylinder geometry plus three prefix sums of the per-cylinder
// terms, giving O(1) conditional means and distortions for any contiguous
// index block:
//   acc_weight[i]  = sum of p_sigma                      (A)
//   acc_moment[i]  = sum of p_sigma * c_sigma            (B)
//   acc_quad[i]    = sum of p_sigma * (s_sigma² V + c_sigma²)  (C)
// where c_sigma = S_sigma(E) is the cylinder's conditional mean. Prefix
// arrays carry a leading zero. Immutable after construction.
template <typename S>
struct CylinderTable {
    int level = 0;
    std::vector<S> left;
    std::vector<S> right;
    std::vector<S> acc_weight;
    std::vector<S> acc_moment;
    std::vector<S> acc_quad;

    int64_t size() const { return static_cast<int64_t>(left.size()); }

    void check_range(int64_t i, int64_t j) const {
        if (i < 1 || j > size() || i > j) throw IndexOutOfRange("block [i,j] out of range");
    }

    S weight(int64_t i, int64_t j) const {
        check_range(i, j);
        return acc_weight[j] - acc_weight[i - 1];
    }

    // a[i,j] = E(X | X in J_i ∪ ... ∪ J_j) = B(i,j) / A(i,j).
    S centroid(int64_t i, int64_t j) const {
        check_range(i, j);
        return (acc_moment[j] - acc_moment[i - 1]) / (acc_weight[j] - acc_weight[i - 1]);
    }

    // Sum over the block of p_sigma (s_sigma² V + (c_sigma - x0)²),
    // expanded as C - 2 x0 B + x0² A.
    S distortion(int64_t i, int64_t j, const S& x0) const {
        check_range(i, j);
        S a = acc_weight[j] - acc_weight[i - 1];
        S b = acc_moment[j] - acc_moment[i - 1];
        S c = acc_quad[j] - acc_quad[i - 1];
        return c - S(2) * x0 * b + x0 * x0 * a;
    }

    // Same with x0 at the block centroid: C - B²/A.
    S distortion_at_centroid(int64_t i, int64_t j) const {
        check_range(i, j);
        S a = acc_weight[j] - acc_weight[i - 1];
        S b = acc_moment[j] - acc_moment[i - 1];
        S c = acc_quad[j] - acc_quad[i - 1];
        return c - b * b / a;
    }
};

template <typename S>
S block_centroid(const CylinderTable<S>& table, int64_t i, int64_t j) {
    return table.centroid(i, j);
}

template <typename S>
S block_distortion(const CylinderTable<S>& table, int64_t i, int64_t j, const S& x0) {
    return table.distortion(i, j, x0);
}

// V(P; centroids) of a block partition: each block costed at its own
// conditional mean.
template <typename S>
S partition_distortion(const CylinderTable<S>& table, const BlockPartition& partition) {
    if (partition.size() != table.size())
        throw PartitionMismatch("partition does not tile this table's index range");
    S total(0);
    for (int l = 0; l < partition.block_count(); ++l) {
        auto [lo, hi] = partition.block(l);
        total = total + table.distortion_at_centroid(lo, hi);
    }
    return total;
}

// One affine map of a level family, with its probability.
template <typename S>
struct MapEntry {
    S scale;
    S offset;
    S prob;
};

// Per-level map families; level k of the word picks from levels[k].
template <typename S>
using LevelMaps = std::vector<std::vector<MapEntry<S>>>;

template <typename S>
int64_t cylinder_count(const LevelMaps<S>& levels,
                       int64_t size_cap = int64_t(1) << kDefaultLevelCap) {
    if (levels.empty()) throw LevelTooLarge("level must be at least 1");
    int64_t n_cells = 1;
    for (const auto& family : levels) {
        if (family.empty()) throw SpecInvalid("empty map family");
        n_cells *= static_cast<int64_t>(family.size());
        if (n_cells > size_cap) throw LevelTooLarge("cylinder count exceeds the configured cap");
    }
    return n_cells;
}

namespace detail {

template <typename S, typename Emit>
struct LeafWalk {
    const LevelMaps<S>& levels;
    Emit& emit;

    void descend(size_t depth, int64_t idx, const S& scale, const S& offset,
                 const S& weight) const {
        if (depth == levels.size()) {
            emit(idx, scale, offset, weight);
            return;
        }
        const auto& family = levels[depth];
        for (size_t j = 0; j < family.size(); ++j) {
            const MapEntry<S>& e = family[j];
            S s = scale * e.scale;
            S o = scale * e.offset + offset;
            S w = weight * e.prob;
            descend(depth + 1, idx * static_cast<int64_t>(family.size()) + static_cast<int64_t>(j),
                    s, o, w);
        }
    }
};

}  // namespace detail

// Visits every level-|levels| cylinder, calling emit(index, scale, offset,
// weight) with the word's composed affine map and probability; indices run
// 0..N-1 in spatial order. In parallel mode the subtrees below a fixed split
// depth go to independent threads; per-leaf arithmetic is a left-to-right
// fold either way, so results do not depend on the thread count.
template <typename S, typename Emit>
void walk_cylinders(const LevelMaps<S>& levels, bool parallel, Emit emit) {
    detail::LeafWalk<S, Emit> walk{levels, emit};

    // Split the tree at the shallowest depth giving enough independent slices.
    size_t split = 0;
    int64_t prefix_count = 1;
    while (split < levels.size() && prefix_count < 64) {
        prefix_count *= static_cast<int64_t>(levels[split].size());
        ++split;
    }
    struct Prefix {
        int64_t idx;
        S scale, offset, weight;
    };
    std::vector<Prefix> prefixes;
    prefixes.reserve(prefix_count);
    struct Collect {
        std::vector<Prefix>& out;
        void operator()(int64_t idx, const S& scale, const S& offset, const S& weight) const {
            out.push_back({idx, scale, offset, weight});
        }
    } collect{prefixes};
    LevelMaps<S> head(levels.begin(), levels.begin() + split);
    detail::LeafWalk<S, Collect> head_walk{head, collect};
    head_walk.descend(0, 0, S(1), S(0), S(1));

#pragma omp parallel for schedule(static) if (parallel)
    for (int64_t k = 0; k < static_cast<int64_t>(prefixes.size()); ++k) {
        const Prefix& p = prefixes[k];
        walk.descend(split, p.idx, p.scale, p.offset, p.weight);
    }
}

// Builds the table by depth-first descent through the word tree. The prefix
// pass stays serial to keep one summation order regardless of threading.
template <typename S>
CylinderTable<S> build_table_from_levels(const LevelMaps<S>& levels, const S& tail_mean,
                                         const S& tail_variance, bool parallel = true,
                                         int64_t size_cap = int64_t(1) << kDefaultLevelCap) {
    const int64_t n_cells = cylinder_count(levels, size_cap);

    CylinderTable<S> table;
    table.level = static_cast<int>(levels.size());
    table.left.resize(n_cells);
    table.right.resize(n_cells);
    table.acc_weight.assign(n_cells + 1, S(0));
    table.acc_moment.assign(n_cells + 1, S(0));
    table.acc_quad.assign(n_cells + 1, S(0));

    walk_cylinders(levels, parallel,
                   [&](int64_t idx, const S& scale, const S& offset, const S& weight) {
                       S c = scale * tail_mean + offset;
                       table.left[idx] = offset;
                       table.right[idx] = scale + offset;
                       // prefix arrays hold the raw per-cylinder terms until the scan below
                       table.acc_weight[idx + 1] = weight;
                       table.acc_moment[idx + 1] = weight * c;
                       table.acc_quad[idx + 1] =
                           weight * (scale * scale * tail_variance + c * c);
                   });

    for (int64_t i = 1; i <= n_cells; ++i) {
        table.acc_weight[i] = table.acc_weight[i] + table.acc_weight[i - 1];
        table.acc_moment[i] = table.acc_moment[i] + table.acc_moment[i - 1];
        table.acc_quad[i] = table.acc_quad[i] + table.acc_quad[i - 1];
    }

    for (int64_t i = 0; i + 1 < n_cells; ++i) {
        if (!(table.right[i] <= table.left[i + 1]))
            throw InternalError("cylinder ordering violated during table build");
    }
    return table;
}

template <typename S>
LevelMaps<S> dyadic_levels(const IfsModel<S>& model, int m) {
    std::vector<MapEntry<S>> family{{model.r1, S(0), model.p1},
                                    {model.r2, S(1) - model.r2, model.p2}};
    return LevelMaps<S>(m, family);
}

template <typename S>
CylinderTable<S> build_table(const IfsModel<S>& model, int m, bool parallel = true,
                             int level_cap = kDefaultLevelCap) {
    if (m < 1 || m > level_cap) throw LevelTooLarge("level m must lie in 1..cap");
    return build_table_from_levels(dyadic_levels(model, m), model.mean, model.variance, parallel,
                                   int64_t(1) << level_cap);
}

// Naive per-index builder: decodes each word and folds it from scratch.
// Kept as the reference the fast builder is tested against.
template <typename S>
CylinderTable<S> build_table_reference(const IfsModel<S>& model, int m,
                                       int level_cap = kDefaultLevelCap) {
    if (m < 1 || m > level_cap) throw LevelTooLarge("level m must lie in 1..cap");
    const int64_t n_cells = int64_t(1) << m;
    CylinderTable<S> table;
    table.level = m;
    table.left.resize(n_cells);
    table.right.resize(n_cells);
    table.acc_weight.assign(n_cells + 1, S(0));
    table.acc_moment.assign(n_cells + 1, S(0));
    table.acc_quad.assign(n_cells + 1, S(0));
    for (int64_t i = 0; i < n_cells; ++i) {
        CylinderInfo<S> info = cylinder(model, word_from_index(m, i + 1));
        table.left[i] = info.left;
        table.right[i] = info.right;
        table.acc_weight[i + 1] = table.acc_weight[i] + info.weight;
        table.acc_moment[i + 1] = table.acc_moment[i] + info.weight * info.centroid;
        table.acc_quad[i + 1] =
            table.acc_quad[i] +
            info.weight * (info.scale * info.scale * model.variance + info.centroid * info.centroid);
    }
    return table;
}

}  // namespace ccvt
