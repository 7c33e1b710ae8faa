#pragma once

#include <cstdint>
#include <vector>

#include "ccvt/errors.hpp"
#include "ccvt/numeric.hpp"

namespace ccvt {

// A pair of affine contractions S1(x) = r1*x and S2(x) = r2*x + (1-r2) with
// probability weights (p1, p2), p1 + p2 = 1. The invariant measure satisfies
// P = p1 P∘S1⁻¹ + p2 P∘S2⁻¹ and is supported on the Cantor set the maps
// generate. Moments are derived once at validation.
template <typename S>
struct IfsModel {
    S r1, r2;
    S p1, p2;
    S mean;           // E(X)
    S second_moment;  // E(X²)
    S variance;       // V = E(X²) - E(X)²

    bool symmetric() const { return r1 == r2 && p1 == p2; }
    bool degenerate_gaps() const { return r1 + r2 == S(1); }
};

// E(X) = p2(1-r2) / (1 - p1 r1 - p2 r2).
template <typename S>
S expectation(const S& r1, const S& r2, const S& p1, const S& p2) {
    S num = p2 * (S(1) - r2);
    S den = S(1) - p1 * r1 - p2 * r2;
    return num / den;
}

// E(X²) = p2(r2-1)²(1 - p1 r1 + p2 r2) / ((p1 r1 + p2 r2 - 1)(p1 r1² + p2 r2² - 1)).
template <typename S>
S second_moment(const S& r1, const S& r2, const S& p1, const S& p2) {
    S a = r2 - S(1);
    S num = p2 * a * a * (S(1) - p1 * r1 + p2 * r2);
    S den = (p1 * r1 + p2 * r2 - S(1)) * (p1 * r1 * r1 + p2 * r2 * r2 - S(1));
    return num / den;
}

template <typename S>
S expectation(const IfsModel<S>& model) {
    return model.mean;
}
template <typename S>
S second_moment(const IfsModel<S>& model) {
    return model.second_moment;
}
// The variance is taken as E(X²) - E(X)², not from a separate closed form, so
// both moments stay mutually consistent by construction.
template <typename S>
S variance(const IfsModel<S>& model) {
    return model.variance;
}

// Checks all parameter constraints and populates the derived moments.
// r1 + r2 = 1 makes adjacent cylinders touch (every gap collapses to a
// point); allowed only when the caller opts in.
template <typename S>
IfsModel<S> validate_params(const S& r1, const S& r2, const S& p1,
                            bool allow_degenerate_gaps = false) {
    if (!(r1 > S(0) && r1 < S(1)) || !(r2 > S(0) && r2 < S(1)))
        throw ParamOutOfRange("contraction ratios must lie in (0,1)");
    if (!(p1 > S(0) && p1 < S(1)))
        throw ParamOutOfRange("p1 must lie in (0,1)");
    S sum = r1 + r2;
    if (sum > S(1))
        throw OverlappingCylinders("r1 + r2 > 1: cylinder images overlap");
    if (sum == S(1) && !allow_degenerate_gaps)
        throw OverlappingCylinders(
            "r1 + r2 = 1: cylinders touch (pass allow_degenerate_gaps to accept)");
    IfsModel<S> model;
    model.r1 = r1;
    model.r2 = r2;
    model.p1 = p1;
    model.p2 = S(1) - p1;
    model.mean = expectation(r1, r2, model.p1, model.p2);
    model.second_moment = second_moment(r1, r2, model.p1, model.p2);
    model.variance = model.second_moment - model.mean * model.mean;
    return model;
}

// A finite word over the alphabet {1,2}. Words of equal length are spatially
// ordered: sigma < tau implies S_sigma(x) < S_tau(x) pointwise.
struct Word {
    std::vector<uint8_t> digits;  // values 1 or 2

    int length() const { return static_cast<int>(digits.size()); }
    bool operator==(const Word&) const = default;
};

// Words of length m carry 1-based indices 1..2^m in spatial order; the word
// is the binary expansion of i-1 (most significant digit first, 0 -> map 1).
inline Word word_from_index(int m, uint64_t i) {
    if (m < 0 || m >= 63) throw LevelTooLarge("level out of range");
    const uint64_t count = uint64_t(1) << m;
    if (i < 1 || i > count) throw IndexOutOfRange("word index out of range");
    Word w;
    w.digits.resize(m);
    uint64_t bits = i - 1;
    for (int k = m - 1; k >= 0; --k) {
        w.digits[k] = static_cast<uint8_t>((bits & 1) + 1);
        bits >>= 1;
    }
    return w;
}

inline uint64_t index_from_word(const Word& w) {
    uint64_t bits = 0;
    for (uint8_t d : w.digits) {
        if (d != 1 && d != 2) throw IndexOutOfRange("word digit must be 1 or 2");
        bits = (bits << 1) | (d - 1);
    }
    return bits + 1;
}

// The composed similarity S_sigma as a single affine map x -> scale*x + offset.
template <typename S>
struct AffineMap {
    S scale;
    S offset;

    S operator()(const S& x) const { return scale * x + offset; }

    // Post-composition with one more letter: F := F ∘ S_digit.
    void extend(uint8_t digit, const IfsModel<S>& model) {
        if (digit == 1) {
            scale = scale * model.r1;
        } else {
            offset = scale * (S(1) - model.r2) + offset;
            scale = scale * model.r2;
        }
    }

    static AffineMap identity() { return {S(1), S(0)}; }
};

template <typename S>
struct CylinderInfo {
    S left;      // S_sigma(0)
    S right;     // S_sigma(1)
    S scale;     // s_sigma
    S weight;    // p_sigma
    S centroid;  // S_sigma(E(X)) = E(X | X in J_sigma)
};

// Folds the word's maps left to right into one affine map, then reads the
// cylinder J_sigma = S_sigma([0,1]) and its conditional mean off it.
template <typename S>
CylinderInfo<S> cylinder(const IfsModel<S>& model, const Word& word) {
    AffineMap<S> map = AffineMap<S>::identity();
    S weight(1);
    for (uint8_t d : word.digits) {
        map.extend(d, model);
        weight = weight * (d == 1 ? model.p1 : model.p2);
    }
    CylinderInfo<S> info;
    info.left = map.offset;
    info.right = map.scale + map.offset;
    info.scale = map.scale;
    info.weight = weight;
    info.centroid = map(model.mean);
    return info;
}

}  // namespace ccvt
