#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "cohort.hpp"
#include "errors.hpp"
#include "nets.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace dfpl {

// Parameter bundle for the whole forecasting pipeline: frozen encoder, the
// recurrent generative path (LSTM, generator, critic) and the three predictor
// heads.
struct DfplModel {
    NetDims dims;
    int order_K = 1;
    bool use_lstm = true;

    Encoder enc;
    LstmCell lstm;
    Generator gen;
    Critic critic;
    Predictor f_cur;  // features: feat_dim, attrs: 6
    Predictor f_prog; // features: residual stack, attrs: 6*K
    Predictor f_fut;  // features: feat_dim, attrs: 6
    Linear bypass;    // feat -> hidden, used in place of the LSTM when disabled

    DfplModel() = default;
    DfplModel(const NetDims& d, int K, std::uint64_t init_seed, bool with_lstm = true)
        : dims(d), order_K(K), use_lstm(with_lstm) {
        Rng rng(derive_seed(init_seed, "init"));
        enc = Encoder(d, rng);
        lstm = LstmCell(d.feat_dim + d.attr_dim, d.hidden_dim, rng);
        gen = Generator(d, rng);
        critic = Critic(d, rng);
        f_cur = Predictor(d.feat_dim, d.attr_dim, d.mlp_width, rng);
        f_prog = Predictor(residual_entry_count(K) * d.feat_dim,
                           d.attr_dim * K, d.mlp_width, rng);
        f_fut = Predictor(d.feat_dim, d.attr_dim, d.mlp_width, rng);
        bypass = Linear(d.feat_dim, d.hidden_dim, rng);
    }

    ParamMap all_params() const {
        ParamMap m;
        enc.collect(m);
        lstm.collect(m, "lstm");
        gen.collect(m);
        critic.collect(m);
        f_cur.collect(m, "f_cur");
        f_prog.collect(m, "f_prog");
        f_fut.collect(m, "f_fut");
        bypass.collect(m, "bypass");
        return m;
    }
    ParamMap generative_params() const {
        ParamMap m;
        lstm.collect(m, "lstm");
        gen.collect(m);
        bypass.collect(m, "bypass");
        return m;
    }
    ParamMap critic_params() const {
        ParamMap m;
        critic.collect(m);
        return m;
    }
    ParamMap head_params() const {
        ParamMap m;
        f_cur.collect(m, "f_cur");
        f_prog.collect(m, "f_prog");
        f_fut.collect(m, "f_fut");
        return m;
    }

    Tensor zero_attrs() const { return Tensor::zeros({dims.attr_dim}); }
};

// One training/inference window: K consecutive observed visits of a subject,
// forecast horizon at the subject's final visit.
struct Window {
    const SubjectTrajectory* subject = nullptr;
    std::vector<int> obs_index; // indices into subject's visit arrays, length K
    int horizon = 0;            // forecast time T
    int horizon_index = 0;      // visit index of T

    int t(int k) const { return subject->times[static_cast<std::size_t>(obs_index[static_cast<std::size_t>(k)])]; }
    int t_last() const { return t(static_cast<int>(obs_index.size()) - 1); }
    int delta_t() const { return horizon - t_last(); }
    int label_T() const { return subject->y[static_cast<std::size_t>(horizon_index)]; }
};

// All length-K windows of consecutive observed visits ending before the final
// visit; the final visit is the forecast target.
inline std::vector<Window> enumerate_windows(const SubjectTrajectory& s, int K) {
    std::vector<Window> out;
    const int n = static_cast<int>(s.times.size());
    if (n < K + 1) return out;
    for (int end = K - 1; end < n - 1; ++end) {
        Window w;
        w.subject = &s;
        for (int k = end - K + 1; k <= end; ++k) w.obs_index.push_back(k);
        w.horizon_index = n - 1;
        w.horizon = s.times[static_cast<std::size_t>(n - 1)];
        out.push_back(w);
    }
    return out;
}

inline std::vector<Window> enumerate_windows(const Cohort& cohort, int K) {
    std::vector<Window> out;
    for (const auto& s : cohort) {
        auto ws = enumerate_windows(s, K);
        out.insert(out.end(), ws.begin(), ws.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// rollout
// ---------------------------------------------------------------------------

struct RolloutResult {
    // generated features indexed by time t_1+1 .. T (in order)
    std::vector<int> times;
    std::vector<Tensor> generated;
    std::vector<Tensor> hiddens;

    const Tensor& at_time(int t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (times[i] == t) return generated[i];
        throw ShapeError("rollout: no generated feature at time " + std::to_string(t));
    }
    const Tensor& final_feature() const { return generated.back(); }
};

using NoiseSource = std::function<Tensor()>;

inline NoiseSource seeded_noise(std::int64_t dim, std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [rng, dim]() {
        std::vector<double> z(static_cast<std::size_t>(dim));
        for (auto& v : z) v = rng->normal();
        return Tensor::vector(std::move(z));
    };
}

// Closed-loop rollout from the observed feature sequence to the horizon:
// observed features are fed at observed times, generated features are fed back
// at unobserved times; the most recent observed attributes condition each step.
inline RolloutResult lstm_rollout(const DfplModel& model,
                                  const std::vector<int>& obs_times,
                                  const std::vector<Tensor>& obs_features,
                                  const std::vector<Tensor>& obs_attrs,
                                  int horizon, const NoiseSource& noise) {
    if (obs_times.empty() || obs_times.size() != obs_features.size() ||
        obs_times.size() != obs_attrs.size())
        throw ShapeError("lstm_rollout: observed time/feature/attr lists disagree");
    for (std::size_t i = 1; i < obs_times.size(); ++i)
        if (obs_times[i] <= obs_times[i - 1])
            throw ShapeError("lstm_rollout: times must be strictly increasing");
    if (horizon <= obs_times.back())
        throw ShapeError("lstm_rollout: horizon " + std::to_string(horizon) +
                         " must exceed last observed time " + std::to_string(obs_times.back()));

    RolloutResult out;
    if (!model.use_lstm) {
        // ablation: direct generation from the latest observed feature
        Tensor cond = model.bypass(obs_features.back());
        Tensor f = model.gen(cond, obs_attrs.back(), noise());
        out.times.push_back(horizon);
        out.generated.push_back(f);
        out.hiddens.push_back(cond);
        return out;
    }

    LstmState state = LstmState::zero(model.dims.hidden_dim);
    std::size_t oi = 0;
    Tensor prev_generated;
    for (int t = obs_times.front(); t < horizon; ++t) {
        Tensor f_in;
        if (oi < obs_times.size() && obs_times[oi] == t) {
            f_in = obs_features[oi];
            ++oi;
        } else {
            f_in = prev_generated;
        }
        const Tensor& a_in = obs_attrs[std::min(oi, obs_attrs.size()) - 1];
        state = model.lstm.step(state, concat({f_in, a_in}));
        prev_generated = model.gen(state.hidden, a_in, noise());
        out.times.push_back(t + 1);
        out.generated.push_back(prev_generated);
        out.hiddens.push_back(state.hidden);
    }
    return out;
}

// ---------------------------------------------------------------------------
// inference
// ---------------------------------------------------------------------------

struct Prediction {
    double p_combined = 0.0;      // factorized current + progression prediction
    double p_ensemble = 0.0;      // model-average over K+2 terms
    double p_cur_generated = 0.0; // current predictor on the generated future feature
    double p_cur_only = 0.0;      // current predictor path alone
    double p_prog_only = 0.0;     // progression predictor path alone
    std::vector<double> p_fut;    // future predictor at each observed time
};

inline Prediction predict_window(const DfplModel& model, const Window& w,
                                 const NoiseSource& noise) {
    const auto& s = *w.subject;
    const int K = static_cast<int>(w.obs_index.size());
    if (K != model.order_K)
        throw ShapeError("predict_window: window order " + std::to_string(K) +
                         " vs model order " + std::to_string(model.order_K));

    std::vector<int> times;
    std::vector<Tensor> feats, attrs;
    for (int k = 0; k < K; ++k) {
        const auto i = static_cast<std::size_t>(w.obs_index[static_cast<std::size_t>(k)]);
        times.push_back(s.times[i]);
        feats.push_back(model.enc(Tensor::vector(s.x[i])));
        attrs.push_back(Tensor::vector(s.a[i]));
    }
    auto roll = lstm_rollout(model, times, feats, attrs, w.horizon, noise);
    const Tensor& f_gen_T = roll.final_feature();

    Prediction p;
    const double p_cur_tK = model.f_cur(feats.back(), attrs.back()).item();
    std::vector<double> p_fut_hist; // at t_1..t_{K-1}
    for (int k = 0; k < K; ++k)
        p.p_fut.push_back(model.f_fut(feats[static_cast<std::size_t>(k)],
                                      attrs[static_cast<std::size_t>(k)]).item());
    for (int k = 0; k + 1 < K; ++k) p_fut_hist.push_back(p.p_fut[static_cast<std::size_t>(k)]);

    const double p_state = K == 1 ? p_cur_tK : current_high_order(p_cur_tK, p_fut_hist, K);

    auto rs = build_residual_set(feats, f_gen_T, K);
    auto parts = rs.tensors();
    const double p_prog = model.f_prog(concat(parts), concat(attrs)).item();

    p.p_combined = K == 1 ? combine_current_progression(p_state, p_prog)
                          : combine_high_order(p_state, p_prog);
    p.p_cur_generated = model.f_cur(f_gen_T, model.zero_attrs()).item();
    p.p_ensemble = ensemble_predict(p.p_combined, p.p_cur_generated, p.p_fut);
    p.p_cur_only = p.p_cur_generated;
    p.p_prog_only = p_prog;
    return p;
}

} // namespace dfpl
