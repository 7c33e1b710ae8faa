#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ccvt/cvt_search.hpp"
#include "ccvt/cylinder_table.hpp"
#include "ccvt/errors.hpp"
#include "ccvt/numeric.hpp"

namespace ccvt {

// Cantor-like measure with a level-dependent map family: level k applies one
// of the maps S_kj(x) = c_kj x + b_kj chosen with probability p_kj. The
// sequence of families is a finite preamble followed by a repeating period,
// which is what makes exact tail moments computable.
template <typename S>
struct GeneralizedIfsSpec {
    LevelMaps<S> preamble;
    LevelMaps<S> period;  // nonempty
};

template <typename S>
struct Moments {
    S mean;
    S second_moment;
    S variance;
};

// Moments of the tail measure below each level. at(k) describes the
// renormalized measure generated by levels k+1, k+2, ...; at(0) is the whole
// measure. Positions past the preamble repeat with the period.
template <typename S>
struct TailMoments {
    std::vector<Moments<S>> preamble;  // entry k: tail after k levels, k < preamble size
    std::vector<Moments<S>> period;    // entry q: tail at period position q

    const Moments<S>& at(int64_t depth) const {
        const int64_t pre = static_cast<int64_t>(preamble.size());
        if (depth < 0) throw IndexOutOfRange("negative tail depth");
        if (depth < pre) return preamble[depth];
        return period[(depth - pre) % static_cast<int64_t>(period.size())];
    }
};

namespace detail {

// The map (E, M2) -> (E', M2') induced by prepending one level:
//   E'  = alpha E + e0
//   M2' = gamma E + beta M2 + m0
template <typename S>
struct MomentStep {
    S alpha, e0, gamma, beta, m0;

    static MomentStep identity() { return {S(1), S(0), S(0), S(1), S(0)}; }

    static MomentStep of_level(const std::vector<MapEntry<S>>& family) {
        MomentStep step{S(0), S(0), S(0), S(0), S(0)};
        for (const MapEntry<S>& e : family) {
            step.alpha = step.alpha + e.prob * e.scale;
            step.e0 = step.e0 + e.prob * e.offset;
            step.beta = step.beta + e.prob * e.scale * e.scale;
            step.gamma = step.gamma + S(2) * e.prob * e.scale * e.offset;
            step.m0 = step.m0 + e.prob * e.offset * e.offset;
        }
        return step;
    }

    Moments<S> apply(const Moments<S>& tail) const {
        Moments<S> out;
        out.mean = alpha * tail.mean + e0;
        out.second_moment = gamma * tail.mean + beta * tail.second_moment + m0;
        out.variance = out.second_moment - out.mean * out.mean;
        return out;
    }

    // this ∘ inner, i.e. apply inner first.
    MomentStep compose(const MomentStep& inner) const {
        MomentStep out;
        out.alpha = alpha * inner.alpha;
        out.e0 = alpha * inner.e0 + e0;
        out.gamma = gamma * inner.alpha + beta * inner.gamma;
        out.beta = beta * inner.beta;
        out.m0 = gamma * inner.e0 + beta * inner.m0 + m0;
        return out;
    }
};

}  // namespace detail

template <typename S>
void validate_spec(const GeneralizedIfsSpec<S>& spec) {
    if (spec.period.empty()) throw SpecInvalid("period must contain at least one level");
    auto check_level = [](const std::vector<MapEntry<S>>& family) {
        if (family.size() < 2) throw SpecInvalid("each level needs at least two maps");
        S prob_sum(0), scale_sum(0);
        S prev_right(0);
        bool first = true;
        for (const MapEntry<S>& e : family) {
            if (!(e.scale > S(0) && e.scale < S(1)))
                throw SpecInvalid("map scales must lie in (0,1)");
            if (!(e.prob > S(0) && e.prob < S(1)))
                throw SpecInvalid("map probabilities must lie in (0,1)");
            S lo = e.offset;
            S hi = e.scale + e.offset;
            if (lo < S(0) || hi > S(1))
                throw SpecInvalid("map image must lie inside [0,1]");
            if (!first && lo < prev_right)
                throw SpecInvalid("map images must be ordered and disjoint except at endpoints");
            prev_right = hi;
            first = false;
            prob_sum = prob_sum + e.prob;
            scale_sum = scale_sum + e.scale;
        }
        if (prob_sum != S(1)) {
            // float construction may not sum exactly; allow a hair of slack there
            if (scalar_ops<S>::exact || scalar_ops<S>::abs(prob_sum - S(1)) > S(1e-12))
                throw SpecInvalid("level probabilities must sum to 1");
        }
        if (!(scale_sum < S(1))) throw SpecInvalid("level contraction ratios must sum below 1");
    };
    for (const auto& family : spec.preamble) check_level(family);
    for (const auto& family : spec.period) check_level(family);
}

// Solves the per-level affine recursion on (E, M2): composing one full period
// is a contraction in both coordinates, so its fixed point gives the moments
// at period position 0, the rest follow level by level, and preamble levels
// come from back-substitution.
template <typename S>
TailMoments<S> tail_moments(const GeneralizedIfsSpec<S>& spec) {
    validate_spec(spec);
    using Step = detail::MomentStep<S>;

    const size_t period_len = spec.period.size();
    std::vector<Step> period_steps;
    period_steps.reserve(period_len);
    for (const auto& family : spec.period) period_steps.push_back(Step::of_level(family));

    Step full = Step::identity();
    for (const Step& step : period_steps) full = full.compose(step);

    TailMoments<S> tm;
    tm.period.resize(period_len);
    Moments<S>& fixed = tm.period[0];
    fixed.mean = full.e0 / (S(1) - full.alpha);
    fixed.second_moment = (full.gamma * fixed.mean + full.m0) / (S(1) - full.beta);
    fixed.variance = fixed.second_moment - fixed.mean * fixed.mean;
    for (size_t q = period_len; q-- > 1;) {
        const Moments<S>& next = tm.period[(q + 1) % period_len];
        tm.period[q] = period_steps[q].apply(next);
    }

    tm.preamble.resize(spec.preamble.size());
    for (size_t k = spec.preamble.size(); k-- > 0;) {
        const Moments<S>& next =
            (k + 1 < spec.preamble.size()) ? tm.preamble[k + 1] : tm.period[0];
        tm.preamble[k] = Step::of_level(spec.preamble[k]).apply(next);
    }
    return tm;
}

// Largest violation when the computed moments are substituted back into the
// recursion; exactly zero in rational mode.
template <typename S>
S tail_moment_residual(const GeneralizedIfsSpec<S>& spec, const TailMoments<S>& tm) {
    using Step = detail::MomentStep<S>;
    S worst(0);
    auto update = [&](const Moments<S>& have, const Moments<S>& expect) {
        S d1 = scalar_ops<S>::abs(have.mean - expect.mean);
        S d2 = scalar_ops<S>::abs(have.second_moment - expect.second_moment);
        if (d1 > worst) worst = d1;
        if (d2 > worst) worst = d2;
    };
    for (size_t k = 0; k < spec.preamble.size(); ++k) {
        const Moments<S>& next =
            (k + 1 < spec.preamble.size()) ? tm.preamble[k + 1] : tm.period[0];
        update(tm.preamble[k], Step::of_level(spec.preamble[k]).apply(next));
    }
    for (size_t q = 0; q < spec.period.size(); ++q) {
        const Moments<S>& next = tm.period[(q + 1) % spec.period.size()];
        update(tm.period[q], Step::of_level(spec.period[q]).apply(next));
    }
    return worst;
}

// The first m level families, preamble then repeating period.
template <typename S>
LevelMaps<S> expand_levels(const GeneralizedIfsSpec<S>& spec, int m) {
    if (m < 1) throw LevelTooLarge("level m must be at least 1");
    LevelMaps<S> levels;
    levels.reserve(m);
    for (int k = 0; k < m; ++k) {
        if (k < static_cast<int>(spec.preamble.size()))
            levels.push_back(spec.preamble[k]);
        else
            levels.push_back(
                spec.period[(k - spec.preamble.size()) % spec.period.size()]);
    }
    return levels;
}

// Mixed-radix analogue of build_table: indices 1..N_m in spatial order,
// cylinder centroids S_sigma(E_m) with the depth-m tail moments.
template <typename S>
CylinderTable<S> build_table_generalized(const GeneralizedIfsSpec<S>& spec, int m,
                                         bool parallel = true,
                                         int64_t size_cap = int64_t(1) << kDefaultLevelCap) {
    const TailMoments<S> tm = tail_moments(spec);
    const Moments<S>& tail = tm.at(m);
    return build_table_from_levels(expand_levels(spec, m), tail.mean, tail.variance, parallel,
                                   size_cap);
}

// Level escalation over the mixed-radix tables; same contract as find_cvts.
template <typename S>
std::pair<int, std::vector<CvtResult<S>>> find_cvts_generalized(
    const GeneralizedIfsSpec<S>& spec, int n, const SearchConfig& config) {
    if (n < 1) throw ParamOutOfRange("generator count n must be at least 1");
    if (config.m_start < 1 || config.m_start > config.m_max)
        throw ParamOutOfRange("require 1 <= m_start <= m_max");
    const TailMoments<S> tm = tail_moments(spec);
    const int64_t size_cap = int64_t(1) << config.level_cap;
    int m = config.m_start;
    while (m <= config.m_max &&
           cylinder_count(expand_levels(spec, m), size_cap) < n)
        ++m;
    for (; m <= config.m_max; ++m) {
        const Moments<S>& tail = tm.at(m);
        CylinderTable<S> table = build_table_from_levels(expand_levels(spec, m), tail.mean,
                                                         tail.variance, config.parallel,
                                                         size_cap);
        std::vector<CvtResult<S>> results = enumerate_cvts(table, n, config);
        if (!results.empty()) return {m, std::move(results)};
    }
    throw NoCvtFoundUpToMMax(config.m_max);
}

// A two-map model expressed as a constant-sequence spec; the generalized path
// must reproduce the dyadic one through this bridge.
template <typename S>
GeneralizedIfsSpec<S> constant_spec(const IfsModel<S>& model) {
    GeneralizedIfsSpec<S> spec;
    spec.period = LevelMaps<S>(1, {{model.r1, S(0), model.p1},
                                   {model.r2, S(1) - model.r2, model.p2}});
    return spec;
}

}  // namespace ccvt
