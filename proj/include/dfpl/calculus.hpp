#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "tensor.hpp"

namespace dfpl {

// Strictly increasing observation times t_1 < ... < t_K with horizon T > t_K.
struct ObservationTimes {
    std::vector<int> times;
    int horizon = 0;

    ObservationTimes() = default;
    ObservationTimes(std::vector<int> ts, int T) : times(std::move(ts)), horizon(T) {
        if (times.empty()) throw ShapeError("ObservationTimes: empty time list");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] <= 0) throw ShapeError("ObservationTimes: times must be positive");
            if (i > 0 && times[i] <= times[i - 1])
                throw ShapeError("ObservationTimes: times must be strictly increasing");
        }
        if (horizon <= times.back())
            throw ShapeError("ObservationTimes: horizon " + std::to_string(horizon) +
                             " must exceed last time " + std::to_string(times.back()));
    }

    int order() const { return static_cast<int>(times.size()); }
};

namespace detail {

inline void require_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ShapeError(std::string(what) + ": probability out of [0,1]: " + std::to_string(p));
}

} // namespace detail

// Total-probability factorization over the binary irreversible state:
//   p(diseased at T) = p(diseased now) + p(healthy now) * p(progresses by T).
// Result always dominates p_cur, matching the deterioration principle.
inline double combine_current_progression(double p_cur, double p_prog) {
    detail::require_prob(p_cur, "combine_current_progression(p_cur)");
    detail::require_prob(p_prog, "combine_current_progression(p_prog)");
    return p_cur + (1.0 - p_cur) * p_prog;
}

// High-order current-state estimate: 1/K average of the current predictor at
// t_K and the future predictor at t_1..t_{K-1}.
inline double current_high_order(double p_cur_at_tK, const std::vector<double>& p_fut_at_tj,
                                 int K) {
    if (K < 1) throw ShapeError("current_high_order: K must be >= 1");
    if (static_cast<int>(p_fut_at_tj.size()) != K - 1)
        throw ShapeError("current_high_order: expected " + std::to_string(K - 1) +
                         " future-predictor terms, got " + std::to_string(p_fut_at_tj.size()));
    detail::require_prob(p_cur_at_tK, "current_high_order(p_cur)");
    double s = p_cur_at_tK;
    for (double p : p_fut_at_tj) {
        detail::require_prob(p, "current_high_order(p_fut)");
        s += p;
    }
    return s / static_cast<double>(K);
}

// Same two-term total-probability form with the high-order current state.
inline double combine_high_order(double p_currentstate, double p_prog) {
    return combine_current_progression(p_currentstate, p_prog);
}

// Model-ensemble inference: arithmetic mean of the combined prediction, the
// current predictor on the generated future feature, and the K future-predictor
// outputs, i.e. K+2 terms.
inline double ensemble_predict(double p_combined, double p_cur_on_generated,
                               const std::vector<double>& p_fut_list) {
    detail::require_prob(p_combined, "ensemble_predict(p_combined)");
    detail::require_prob(p_cur_on_generated, "ensemble_predict(p_cur_on_generated)");
    if (p_fut_list.empty())
        throw ShapeError("ensemble_predict: future-predictor list must have K >= 1 entries");
    double s = p_combined + p_cur_on_generated;
    for (double p : p_fut_list) {
        detail::require_prob(p, "ensemble_predict(p_fut)");
        s += p;
    }
    return s / static_cast<double>(p_fut_list.size() + 2);
}

// ---------------------------------------------------------------------------
// residual stencils
// ---------------------------------------------------------------------------

// Ordered collection of order-1..K difference features. Canonical layout:
// all order-1 entries first (generated-minus-latest leading, then descending
// through the observed times), then order-2, and so on.
struct ResidualSet {
    int order = 0;
    struct Entry {
        int order_j;
        Tensor value;
    };
    std::vector<Entry> entries;

    std::vector<Tensor> tensors() const {
        std::vector<Tensor> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.value);
        return out;
    }

    int count_of_order(int j) const {
        int n = 0;
        for (const auto& e : entries)
            if (e.order_j == j) ++n;
        return n;
    }
};

// Index pairs defining one difference-of-differences entry. Index K+1 stands
// for the generated future feature; indices <= 0 are out of range.
struct StencilEntryIndices {
    int order_j;
    // value = (F[a1] - F[a2]) - (F[b1] - F[b2]); order-1 entries use only a1,a2
    int a1, a2, b1, b2;
};

// Enumerates the index tuples of every order-1..K entry, dropping any entry
// that references a time index < 1. Index K+1 denotes the generated feature.
inline std::vector<StencilEntryIndices> stencil_indices(int K) {
    if (K < 1) throw ShapeError("stencil_indices: K must be >= 1");
    std::vector<StencilEntryIndices> out;
    const int gen = K + 1;
    // order 1: generated - F_{t_K}, then F_{t_{K-i}} - F_{t_{K-i-1}} for i = 0..K-2
    out.push_back({1, gen, K, 0, 0});
    for (int i = 0; i <= K - 2; ++i) out.push_back({1, K - i, K - i - 1, 0, 0});
    // order j >= 2
    for (int j = 2; j <= K; ++j) {
        {
            const int a2 = K + 2 - j, b1 = K, b2 = K + 1 - j;
            if (a2 >= 1 && b2 >= 1) out.push_back({j, gen, a2, b1, b2});
        }
        for (int i = 0; i <= K - 2; ++i) {
            const int a1 = K - i, a2 = K - i + 1 - j, b1 = K - i - 1, b2 = K - i - j;
            if (a1 >= 1 && a2 >= 1 && b1 >= 1 && b2 >= 1) out.push_back({j, a1, a2, b1, b2});
        }
    }
    return out;
}

// Builds the order-1..K residual feature set from the K observed features and
// the generated future feature.
inline ResidualSet build_residual_set(const std::vector<Tensor>& F_observed,
                                      const Tensor& F_generated_T, int K) {
    if (K < 1) throw ShapeError("build_residual_set: K must be >= 1");
    if (static_cast<int>(F_observed.size()) != K)
        throw ShapeError("build_residual_set: expected " + std::to_string(K) +
                         " observed features, got " + std::to_string(F_observed.size()));
    const Shape& fs = F_generated_T.shape();
    for (const auto& F : F_observed)
        if (F.shape() != fs)
            throw ShapeError("build_residual_set: feature shape mismatch " +
                             shape_str(F.shape()) + " vs " + shape_str(fs));
    // F(1..K) are the observed features, F(K+1) the generated one
    auto feat = [&](int idx) -> const Tensor& {
        return idx == K + 1 ? F_generated_T : F_observed[static_cast<std::size_t>(idx - 1)];
    };
    ResidualSet rs;
    rs.order = K;
    for (const auto& e : stencil_indices(K)) {
        Tensor v = sub(feat(e.a1), feat(e.a2));
        if (e.order_j > 1) v = sub(v, sub(feat(e.b1), feat(e.b2)));
        rs.entries.push_back({e.order_j, std::move(v)});
    }
    return rs;
}

// Number of residual entries for a model configured at order K (needed to size
// the progression predictor's input).
inline int residual_entry_count(int K) {
    return static_cast<int>(stencil_indices(K).size());
}

} // namespace dfpl
