#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "cohort.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "nets.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace dfpl {

struct TrainConfig {
    double lambda1 = 0.1;  // weight of the current-predictor loss
    double lambda2 = 1.0;  // weight of the factorized cross-entropy
    double lambda3 = 1.0;  // weight of the future-predictor loss (order > 1)
    double alpha = 0.1;    // weight of the deterioration margin regularizer
    double theta = 0.05;   // soft margin
    double clip_c = 0.01;  // critic weight-clipping bound
    int epochs = 120;
    int lr_decay_every = 60;
    double lr_decay = 0.2;
    int batch_size = 20;
    int critic_steps_per_gen = 5;
    int pretrain_epochs = 30;
    double rms_lr = 1e-4;
    double rms_wd = 1e-4;
    double sgd_lr = 0.02;
    double sgd_wd = 1e-4;
    std::uint64_t seed = 0;
    int order_K = 1;
};

struct LossBreakdown {
    double gen = 0.0;
    double cur = 0.0; // erm + alpha * margin
    double ce = 0.0;
    double fut = 0.0;
    double total = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    LossBreakdown loss;
    double val_acc = 0.0;
    double val_auc = 0.0;
};

enum class TrainVariant { Full, CurOnly, ProgOnly };

enum class ScoreKind { Combined, Ensemble, CurOnly, ProgOnly };

// ---------------------------------------------------------------------------
// probability algebra on the tape
// ---------------------------------------------------------------------------

inline constexpr double kLogClamp = 1e-12;

inline Tensor nll_of(const Tensor& p, int label) {
    Tensor q = label == 1 ? p : sub(Tensor::scalar(1.0), p);
    return neg(vlog(clamp(q, kLogClamp, 1.0 - kLogClamp)));
}

inline Tensor combine_t(const Tensor& p_cur, const Tensor& p_prog) {
    return add(p_cur, mul(sub(Tensor::scalar(1.0), p_cur), p_prog));
}

// ---------------------------------------------------------------------------
// per-window forward pass (training graph)
// ---------------------------------------------------------------------------

namespace detail_train {

struct WindowGraph {
    std::vector<int> times;
    std::vector<Tensor> feats; // encoder outputs at the window times
    std::vector<Tensor> attrs;
    RolloutResult roll;
    int y_T = 0;
};

inline WindowGraph forward_window(const DfplModel& model, const Window& w,
                                  const NoiseSource& noise) {
    const auto& s = *w.subject;
    WindowGraph g;
    for (int idx : w.obs_index) {
        const auto i = static_cast<std::size_t>(idx);
        g.times.push_back(s.times[i]);
        g.feats.push_back(model.enc(Tensor::vector(s.x[i])));
        g.attrs.push_back(Tensor::vector(s.a[i]));
    }
    g.roll = lstm_rollout(model, g.times, g.feats, g.attrs, w.horizon, noise);
    g.y_T = w.label_T();
    return g;
}

// matched (generated, real) feature pairs: at T only for 1-order, at every
// generated time with an observed real visit for higher orders
inline std::vector<std::pair<Tensor, Tensor>> matched_pairs(const DfplModel& model,
                                                            const Window& w,
                                                            const WindowGraph& g) {
    const auto& s = *w.subject;
    std::vector<std::pair<Tensor, Tensor>> pairs;
    for (std::size_t i = 0; i < g.roll.times.size(); ++i) {
        const int t = g.roll.times[i];
        if (model.order_K == 1 && t != w.horizon) continue;
        const int vi = s.index_of_time(t);
        if (vi < 0) continue;
        Tensor real = model.enc(Tensor::vector(s.x[static_cast<std::size_t>(vi)]));
        pairs.emplace_back(g.roll.generated[i], real);
    }
    if (pairs.empty())
        throw ShapeError("loss_generative: no matched real feature for any generated time");
    return pairs;
}

} // namespace detail_train

// ---------------------------------------------------------------------------
// losses (sums over the supplied windows)
// ---------------------------------------------------------------------------

// ERM of the current predictor: labeled real visits at t=1 and T with
// attributes, plus the generated future feature with zero attributes.
// Gradients flow into the generator and LSTM through the generated feature.
inline Tensor loss_erm_current(const DfplModel& model,
                               const std::vector<detail_train::WindowGraph>& graphs,
                               const std::vector<Window>& windows) {
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const auto& w = windows[wi];
        const auto& g = graphs[wi];
        const auto& s = *w.subject;
        for (int t : {1, w.horizon}) {
            const int vi = s.index_of_time(t);
            if (vi < 0 || !s.label_visible[static_cast<std::size_t>(vi)]) continue;
            Tensor F = model.enc(Tensor::vector(s.x[static_cast<std::size_t>(vi)]));
            Tensor p = model.f_cur(F, Tensor::vector(s.a[static_cast<std::size_t>(vi)]));
            total = add(total, nll_of(p, s.y[static_cast<std::size_t>(vi)]));
        }
        Tensor p_gen = model.f_cur(g.roll.final_feature(), model.zero_attrs());
        total = add(total, nll_of(p_gen, g.y_T));
    }
    return total;
}

// Soft-margin deterioration regularizer: hinge on p(diseased at t_1)
// exceeding p(diseased at T), with margin theta.
inline Tensor loss_deterioration_margin(const DfplModel& model,
                                        const std::vector<detail_train::WindowGraph>& graphs,
                                        const std::vector<Window>& windows, double theta) {
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const auto& w = windows[wi];
        const auto& g = graphs[wi];
        const auto& s = *w.subject;
        const int vT = s.index_of_time(w.horizon);
        Tensor F_T = model.enc(Tensor::vector(s.x[static_cast<std::size_t>(vT)]));
        Tensor p1 = model.f_cur(g.feats.front(), model.zero_attrs());
        Tensor pT = model.f_cur(F_T, model.zero_attrs());
        total = add(total, max_with(add_scalar(sub(p1, pT), theta), 0.0));
    }
    return total;
}

inline Tensor loss_current_total(const DfplModel& model,
                                 const std::vector<detail_train::WindowGraph>& graphs,
                                 const std::vector<Window>& windows, const TrainConfig& cfg) {
    Tensor erm = loss_erm_current(model, graphs, windows);
    if (cfg.alpha == 0.0) return erm;
    return add(erm, smul(loss_deterioration_margin(model, graphs, windows, cfg.theta), cfg.alpha));
}

// factorized current/progression prediction on the tape
inline Tensor combined_probability(const DfplModel& model,
                                   const detail_train::WindowGraph& g) {
    const int K = model.order_K;
    Tensor p_cur = model.f_cur(g.feats.back(), g.attrs.back());
    Tensor p_state = p_cur;
    if (K > 1) {
        Tensor acc = p_cur;
        for (int k = 0; k + 1 < K; ++k)
            acc = add(acc, model.f_fut(g.feats[static_cast<std::size_t>(k)],
                                       g.attrs[static_cast<std::size_t>(k)]));
        p_state = smul(acc, 1.0 / static_cast<double>(K));
    }
    auto rs = build_residual_set(g.feats, g.roll.final_feature(), K);
    Tensor p_prog = model.f_prog(concat(rs.tensors()), concat(g.attrs));
    return combine_t(p_state, p_prog);
}

inline Tensor loss_progression_ce(const DfplModel& model,
                                  const std::vector<detail_train::WindowGraph>& graphs) {
    Tensor total = Tensor::scalar(0.0);
    for (const auto& g : graphs)
        total = add(total, nll_of(combined_probability(model, g), g.y_T));
    return total;
}

inline Tensor loss_future(const DfplModel& model,
                          const std::vector<detail_train::WindowGraph>& graphs) {
    Tensor total = Tensor::scalar(0.0);
    for (const auto& g : graphs)
        for (std::size_t k = 0; k < g.feats.size(); ++k) {
            Tensor p = model.f_fut(g.feats[k], g.attrs[k]);
            total = add(total, nll_of(p, g.y_T));
        }
    return total;
}

// Wasserstein pair: critic maximizes real-vs-generated separation, generator
// chases the critic score.
struct GenLosses {
    Tensor critic_loss; // mean D(gen) - mean D(real), generated detached
    Tensor gen_loss;    // -mean D(gen), gradients into G/LSTM
};

inline GenLosses loss_generative(const DfplModel& model,
                                 const std::vector<detail_train::WindowGraph>& graphs,
                                 const std::vector<Window>& windows) {
    std::vector<Tensor> d_gen_detached, d_gen, d_real;
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        for (const auto& [gen_f, real_f] :
             detail_train::matched_pairs(model, windows[wi], graphs[wi])) {
            d_gen_detached.push_back(model.critic(gen_f.detach()));
            d_gen.push_back(model.critic(gen_f));
            d_real.push_back(model.critic(real_f.detach()));
        }
    }
    // assemble means from scalar scores
    auto mean_of = [](std::vector<Tensor>& xs) {
        Tensor acc = Tensor::scalar(0.0);
        for (auto& x : xs) acc = add(acc, x);
        return smul(acc, 1.0 / static_cast<double>(xs.size()));
    };
    GenLosses out;
    out.critic_loss = sub(mean_of(d_gen_detached), mean_of(d_real));
    out.gen_loss = neg(mean_of(d_gen));
    return out;
}

// ---------------------------------------------------------------------------
// encoder pre-training
// ---------------------------------------------------------------------------

// Trains a throwaway two-head classifier (current-status head on labeled
// visits, progression head predicting the final label from earlier visits) and
// keeps only the bottom layers as the frozen encoder.
inline void pretrain_encoder(DfplModel& model, const Cohort& train, const TrainConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, "pretrain/init"));
    Mlp head_cur(model.dims.feat_dim, model.dims.mlp_width, 1, rng);
    Mlp head_fut(model.dims.feat_dim, model.dims.mlp_width, 1, rng);

    struct Sample {
        const std::vector<double>* x;
        int label;
        bool current_task;
    };
    std::vector<Sample> samples;
    for (const auto& s : train) {
        const int last = static_cast<int>(s.times.size()) - 1;
        for (int i = 0; i <= last; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (s.label_visible[ui]) samples.push_back({&s.x[ui], s.y[ui], true});
            if (i < last) samples.push_back({&s.x[ui], s.y.back(), false});
        }
    }

    ParamMap params;
    model.enc.collect(params);
    head_cur.collect(params, "head_cur");
    head_fut.collect(params, "head_fut");
    Optimizer opt(OptRule::PlainSgd, cfg.sgd_lr, cfg.sgd_wd);

    Rng shuffle_rng(derive_seed(cfg.seed, "pretrain/shuffle"));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            zero_grads(params);
            Tensor loss = Tensor::scalar(0.0);
            const auto hi = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            for (std::size_t i = b; i < hi; ++i) {
                const auto& smp = samples[order[i]];
                Tensor F = model.enc(Tensor::vector(*smp.x));
                const Mlp& head = smp.current_task ? head_cur : head_fut;
                Tensor p = clamp(sigmoid(sum(head(F))), kProbEps, 1.0 - kProbEps);
                loss = add(loss, nll_of(p, smp.label));
            }
            backward(loss);
            opt.step(params);
        }
    }
    model.enc.freeze();
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

inline double score_of(const Prediction& p, ScoreKind kind) {
    switch (kind) {
        case ScoreKind::Combined: return p.p_combined;
        case ScoreKind::Ensemble: return p.p_ensemble;
        case ScoreKind::CurOnly: return p.p_cur_only;
        case ScoreKind::ProgOnly: return p.p_prog_only;
    }
    return p.p_combined;
}

inline std::vector<PredictionRecord> predict_records(const DfplModel& model,
                                                     const Cohort& cohort, ScoreKind kind,
                                                     std::uint64_t eval_seed) {
    std::vector<PredictionRecord> records;
    for (const auto& s : cohort) {
        auto windows = enumerate_windows(s, model.order_K);
        for (std::size_t wi = 0; wi < windows.size(); ++wi) {
            auto noise = seeded_noise(
                model.dims.noise_dim,
                derive_seed(eval_seed, "eval/noise",
                            static_cast<std::uint64_t>(s.subject_id) * 101 + wi));
            auto p = predict_window(model, windows[wi], noise);
            records.push_back({score_of(p, kind), windows[wi].label_T(), windows[wi].delta_t()});
        }
    }
    return records;
}

// Per-delta_t and pooled metrics on a frozen model; pure given the seed.
inline MetricsReport evaluate_model(const DfplModel& model, const Cohort& cohort,
                                    ScoreKind kind, std::uint64_t eval_seed) {
    return assemble_report(predict_records(model, cohort, kind, eval_seed),
                           model.order_K, eval_seed);
}

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

struct TrainHooks {
    // called after every critic optimizer step (post-clipping)
    std::function<void(const DfplModel&)> after_critic_step;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_acc = 0.0;
};

namespace detail_train {

inline std::map<std::string, std::vector<double>> snapshot(const ParamMap& params) {
    std::map<std::string, std::vector<double>> s;
    for (const auto& [name, t] : params) s[name] = t.values();
    return s;
}

inline void restore(ParamMap& params, const std::map<std::string, std::vector<double>>& s) {
    for (auto& [name, t] : params) t.values() = s.at(name);
}

} // namespace detail_train

// End-to-end training: alternating critic updates (clipped after each step)
// and joint updates of generator, LSTM and predictor heads; model selection by
// validation accuracy of the combined prediction.
inline TrainResult train(DfplModel& model, const Cohort& train_cohort, const Cohort& val_cohort,
                         const TrainConfig& cfg, TrainVariant variant = TrainVariant::Full,
                         const TrainHooks& hooks = {}) {
    auto windows = enumerate_windows(train_cohort, cfg.order_K);
    if (windows.empty()) throw ShapeError("train: no training windows for order K");

    ParamMap gen_params = model.generative_params();
    ParamMap critic_params = model.critic_params();
    ParamMap head_params = model.head_params();
    ParamMap all_params = model.all_params();

    Optimizer opt_gen(OptRule::AdaptiveRms, cfg.rms_lr, cfg.rms_wd);
    Optimizer opt_critic(OptRule::AdaptiveRms, cfg.rms_lr, cfg.rms_wd);
    Optimizer opt_heads(OptRule::PlainSgd, cfg.sgd_lr, cfg.sgd_wd);

    Rng shuffle_rng(derive_seed(cfg.seed, "train/shuffle"));
    std::uint64_t noise_counter = 0;
    auto fresh_noise = [&]() {
        return seeded_noise(model.dims.noise_dim,
                            derive_seed(cfg.seed, "train/noise", noise_counter++));
    };

    TrainResult result;
    auto best = detail_train::snapshot(all_params);
    double best_acc = -1.0;
    int best_epoch = 0;

    const ScoreKind val_kind = variant == TrainVariant::CurOnly    ? ScoreKind::CurOnly
                               : variant == TrainVariant::ProgOnly ? ScoreKind::ProgOnly
                                                                   : ScoreKind::Combined;

    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % cfg.lr_decay_every == 0) {
            opt_gen.lr *= cfg.lr_decay;
            opt_critic.lr *= cfg.lr_decay;
            opt_heads.lr *= cfg.lr_decay;
        }
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        LossBreakdown epoch_loss;
        int n_batches = 0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const auto hi = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Window> batch;
            for (std::size_t i = b; i < hi; ++i) batch.push_back(windows[order[i]]);

            // critic updates
            for (int cs = 0; cs < cfg.critic_steps_per_gen; ++cs) {
                auto noise = fresh_noise();
                std::vector<detail_train::WindowGraph> graphs;
                for (const auto& w : batch)
                    graphs.push_back(detail_train::forward_window(model, w, noise));
                auto gl = loss_generative(model, graphs, batch);
                zero_grads(critic_params);
                backward(gl.critic_loss);
                opt_critic.step(critic_params);
                clip_weights(critic_params, cfg.clip_c);
                if (hooks.after_critic_step) hooks.after_critic_step(model);
            }

            // joint update
            auto noise = fresh_noise();
            std::vector<detail_train::WindowGraph> graphs;
            for (const auto& w : batch)
                graphs.push_back(detail_train::forward_window(model, w, noise));
            auto gl = loss_generative(model, graphs, batch);

            LossBreakdown bl;
            Tensor total = gl.gen_loss;
            bl.gen = gl.gen_loss.item();
            if (variant != TrainVariant::ProgOnly && cfg.lambda1 > 0.0) {
                Tensor cur = loss_current_total(model, graphs, batch, cfg);
                bl.cur = cur.item();
                total = add(total, smul(cur, cfg.lambda1));
            }
            if (variant == TrainVariant::Full && cfg.lambda2 > 0.0) {
                Tensor ce = loss_progression_ce(model, graphs);
                bl.ce = ce.item();
                total = add(total, smul(ce, cfg.lambda2));
            } else if (variant == TrainVariant::ProgOnly && cfg.lambda2 > 0.0) {
                // progression head alone on the first-order residual
                Tensor ce = Tensor::scalar(0.0);
                for (const auto& g : graphs) {
                    auto rs = build_residual_set(g.feats, g.roll.final_feature(), model.order_K);
                    Tensor p = model.f_prog(concat(rs.tensors()), concat(g.attrs));
                    ce = add(ce, nll_of(p, g.y_T));
                }
                bl.ce = ce.item();
                total = add(total, smul(ce, cfg.lambda2));
            }
            if (variant == TrainVariant::Full && cfg.order_K > 1 && cfg.lambda3 > 0.0) {
                Tensor fut = loss_future(model, graphs);
                bl.fut = fut.item();
                total = add(total, smul(fut, cfg.lambda3));
            }
            bl.total = total.item();
            if (!std::isfinite(bl.total))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(n_batches));

            zero_grads(gen_params);
            zero_grads(head_params);
            zero_grads(critic_params);
            backward(total);
            opt_gen.step(gen_params);
            opt_heads.step(head_params);

            // the ensemble needs f_fut at 1-order too; train it as a detached
            // auxiliary head (outside the Eq-8 total, which has no future term)
            if (variant == TrainVariant::Full && cfg.order_K == 1) {
                ParamMap fut_params;
                model.f_fut.collect(fut_params, "f_fut");
                zero_grads(fut_params);
                Tensor fut = loss_future(model, graphs);
                bl.fut = fut.item();
                backward(fut);
                opt_heads.step(fut_params);
            }

            epoch_loss.gen += bl.gen;
            epoch_loss.cur += bl.cur;
            epoch_loss.ce += bl.ce;
            epoch_loss.fut += bl.fut;
            epoch_loss.total += bl.total;
            ++n_batches;
        }
        epoch_loss.gen /= n_batches;
        epoch_loss.cur /= n_batches;
        epoch_loss.ce /= n_batches;
        epoch_loss.fut /= n_batches;
        epoch_loss.total /= n_batches;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = epoch_loss;
        if (!val_cohort.empty()) {
            auto rep = evaluate_model(model, val_cohort, val_kind,
                                      derive_seed(cfg.seed, "val", static_cast<std::uint64_t>(epoch)));
            const auto& pooled = pooled_row(rep);
            rec.val_acc = pooled.acc;
            rec.val_auc = pooled.auc_value;
            if (pooled.acc > best_acc) {
                best_acc = pooled.acc;
                best_epoch = epoch;
                best = detail_train::snapshot(all_params);
            }
        }
        result.history.push_back(rec);
    }

    if (best_acc >= 0.0) detail_train::restore(all_params, best);
    result.best_epoch = best_epoch;
    result.best_val_acc = best_acc;
    check_params_finite(all_params, "train");
    return result;
}

// ---------------------------------------------------------------------------
// direct baseline: one predictor from (F_{t_1}, a_{t_1}) to y_T on the same
// frozen encoder
// ---------------------------------------------------------------------------

struct BaselineModel {
    Encoder enc; // shared frozen encoder
    Predictor head;
    NetDims dims;
};

inline BaselineModel train_baseline(const Encoder& frozen_enc, const NetDims& dims,
                                    const Cohort& train_cohort, const Cohort& val_cohort,
                                    const TrainConfig& cfg) {
    BaselineModel bm;
    bm.enc = frozen_enc;
    bm.dims = dims;
    Rng rng(derive_seed(cfg.seed, "baseline/init"));
    bm.head = Predictor(dims.feat_dim, dims.attr_dim, dims.mlp_width, rng);

    auto windows = enumerate_windows(train_cohort, 1);
    ParamMap params;
    bm.head.collect(params, "baseline");
    Optimizer opt(OptRule::PlainSgd, cfg.sgd_lr, cfg.sgd_wd);

    auto predict = [&](const Window& w) {
        const auto& s = *w.subject;
        const auto i = static_cast<std::size_t>(w.obs_index[0]);
        Tensor F = bm.enc(Tensor::vector(s.x[i]));
        return bm.head(F, Tensor::vector(s.a[i]));
    };

    Rng shuffle_rng(derive_seed(cfg.seed, "baseline/shuffle"));
    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto best = detail_train::snapshot(params);
    double best_acc = -1.0;
    double lr0 = opt.lr;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % cfg.lr_decay_every == 0)
            opt.lr *= cfg.lr_decay;
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const auto hi = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            zero_grads(params);
            Tensor loss = Tensor::scalar(0.0);
            for (std::size_t i = b; i < hi; ++i)
                loss = add(loss, nll_of(predict(windows[order[i]]), windows[order[i]].label_T()));
            backward(loss);
            opt.step(params);
        }
        if (!val_cohort.empty()) {
            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& w : enumerate_windows(val_cohort, 1)) {
                scores.push_back(predict(w).item());
                labels.push_back(w.label_T());
            }
            const double acc = accuracy(scores, labels);
            if (acc > best_acc) {
                best_acc = acc;
                best = detail_train::snapshot(params);
            }
        }
    }
    (void)lr0;
    if (best_acc >= 0.0) detail_train::restore(params, best);
    return bm;
}

inline MetricsReport evaluate_baseline(const BaselineModel& bm, const Cohort& cohort,
                                       std::uint64_t eval_seed) {
    std::vector<PredictionRecord> records;
    for (const auto& w : enumerate_windows(cohort, 1)) {
        const auto& s = *w.subject;
        const auto i = static_cast<std::size_t>(w.obs_index[0]);
        Tensor F = bm.enc(Tensor::vector(s.x[i]));
        const double p = bm.head(F, Tensor::vector(s.a[i])).item();
        records.push_back({p, w.label_T(), w.delta_t()});
    }
    return assemble_report(records, 1, eval_seed);
}

} // namespace dfpl
