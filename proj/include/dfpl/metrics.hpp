#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cohort.hpp"
#include "errors.hpp"

namespace dfpl {

inline double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                       double threshold = 0.5) {
    if (scores.size() != labels.size() || scores.empty())
        throw ShapeError("accuracy: score/label length mismatch or empty");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= threshold ? 1 : 0) == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(scores.size());
}

// Rank-based AUC, ties counted as half concordance (Mann-Whitney convention).
// Agrees exactly with O(n^2) pairwise counting: all intermediate quantities
// are sums of halves, exactly representable.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ShapeError("auc: score/label length mismatch or empty");
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DomainError("auc: undefined for single-class labels");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // midranks over tie groups
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1) pos_rank_sum += midrank;
        i = j;
    }
    const double u = pos_rank_sum -
                     0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ---------------------------------------------------------------------------
// report assembly
// ---------------------------------------------------------------------------

struct PredictionRecord {
    double score = 0.0;
    int label = 0;
    int delta_t = 0; // horizon minus latest observed input time
};

struct MetricsRow {
    int delta_t = 0; // 0 = average over all records
    double acc = 0.0;
    double auc_value = 0.0;
    std::int64_t n = 0;
};

struct MetricsReport {
    int order_K = 1;
    std::uint64_t seed = 0;
    std::vector<MetricsRow> rows; // per delta_t, plus the pooled row (delta_t 0)
};

inline MetricsReport assemble_report(const std::vector<PredictionRecord>& records,
                                     int order_K, std::uint64_t seed) {
    if (records.empty()) throw ShapeError("assemble_report: no prediction records");
    MetricsReport rep;
    rep.order_K = order_K;
    rep.seed = seed;
    std::map<int, std::vector<std::size_t>> by_dt;
    for (std::size_t i = 0; i < records.size(); ++i) by_dt[records[i].delta_t].push_back(i);
    auto row_for = [&](int dt, const std::vector<std::size_t>& sel) {
        std::vector<double> s;
        std::vector<int> y;
        for (auto i : sel) {
            s.push_back(records[i].score);
            y.push_back(records[i].label);
        }
        MetricsRow row;
        row.delta_t = dt;
        row.n = static_cast<std::int64_t>(sel.size());
        row.acc = accuracy(s, y);
        row.auc_value = auc(s, y);
        return row;
    };
    for (const auto& [dt, sel] : by_dt) rep.rows.push_back(row_for(dt, sel));
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), 0);
    rep.rows.push_back(row_for(0, all));
    return rep;
}

inline const MetricsRow& pooled_row(const MetricsReport& rep) {
    for (const auto& r : rep.rows)
        if (r.delta_t == 0) return r;
    throw ShapeError("report has no pooled row");
}

// ---------------------------------------------------------------------------
// Bayes oracle
// ---------------------------------------------------------------------------

// Exact posterior P(y_T = 1 | x, a at the condition times) under the known
// synthetic generative process, by quadrature over the rate latent and
// severity-grid filtering over the nonnegative increment noise.
class BayesOracle {
  public:
    explicit BayesOracle(const CohortSpec& spec, int xi_points = 41, int s_cells = 400)
        : spec_(spec), xi_points_(xi_points), s_cells_(s_cells) {
        // severity grid wide enough for the bulk of the rate prior over T-1 steps
        const double max_rate = std::exp(spec.rate_log_mean + 3.5 * spec.rate_log_sd);
        s_hi_ = std::max(spec.threshold * 2.0,
                         (spec.t_max - 1) * (max_rate + 4.0 * spec.step_noise));
        ds_ = s_hi_ / static_cast<double>(s_cells_);
        w_ = detail_cohort::severity_weights(spec.obs_dim);
    }

    double posterior(const SubjectTrajectory& subj, const std::vector<int>& condition_times) const {
        std::vector<int> cts;
        for (int t : condition_times)
            if (subj.index_of_time(t) >= 0) cts.push_back(t);
        if (cts.empty())
            throw ShapeError("bayes oracle: subject observes none of the condition times");
        std::sort(cts.begin(), cts.end());

        double num = 0.0, den = 0.0;
        for (int q = 0; q < xi_points_; ++q) {
            const double xi = -4.0 + 8.0 * (q + 0.5) / xi_points_;
            const double prior_w = std::exp(-0.5 * xi * xi);
            const double rate = std::exp(spec_.rate_log_mean + spec_.rate_log_sd * xi);
            const double attr_lik = attr_likelihood(subj, cts.front(), xi);
            auto [p_dis, evidence] = filter(subj, cts, rate);
            num += prior_w * attr_lik * evidence * p_dis;
            den += prior_w * attr_lik * evidence;
        }
        if (den <= 0.0) return 0.5; // no evidence retained; fall back to indifference
        return num / den;
    }

  private:
    // likelihood of the informative attributes given the rate latent
    double attr_likelihood(const SubjectTrajectory& subj, int t, double xi) const {
        if (spec_.attr_effect == 0.0) return 1.0;
        const int i = subj.index_of_time(t);
        const double drift0 = 0.05 * t * std::sin(0.3 * 1);
        const double drift1 = 0.05 * t * std::sin(0.3 * 2);
        const double r0 = subj.a[static_cast<std::size_t>(i)][0] - drift0 - spec_.attr_effect * xi;
        const double r1 = subj.a[static_cast<std::size_t>(i)][1] - drift1 + spec_.attr_effect * xi;
        const double v = spec_.attr_noise * spec_.attr_noise;
        return std::exp(-0.5 * (r0 * r0 + r1 * r1) / v);
    }

    // log-likelihood of observation x given severity s, up to an s-independent constant
    double obs_loglik(const std::vector<double>& xt, double s) const {
        // x_d = c * w_d * s + N(0, sigma^2); quadratic in s
        double ll = 0.0;
        const double inv2v = 0.5 / (spec_.noise_scale * spec_.noise_scale);
        for (std::size_t d = 0; d < xt.size(); ++d) {
            const double r = xt[d] - spec_.obs_coupling * w_[d] * s;
            ll -= inv2v * r * r;
        }
        return ll;
    }

    // Forward filtering of the severity distribution over times 1..T.
    // Returns (P(s_T >= threshold | rate, obs), evidence mass).
    std::pair<double, double> filter(const SubjectTrajectory& subj,
                                     const std::vector<int>& cts, double rate) const {
        const auto n = static_cast<std::size_t>(s_cells_);
        std::vector<double> dist(n, 0.0);
        dist[0] = 1.0; // s_1 = 0

        // one-step increment kernel: rate + step_noise * |N(0,1)|
        std::vector<double> kernel;
        const int off = static_cast<int>(std::floor(rate / ds_));
        {
            const int width = std::max(
                2, static_cast<int>(std::ceil(4.0 * spec_.step_noise / ds_)) + 1);
            double total = 0.0;
            for (int k = 0; k <= width; ++k) {
                const double u = (off + k + 0.5) * ds_ - rate;
                double p = 0.0;
                if (u >= 0.0 && spec_.step_noise > 0.0) {
                    const double z = u / spec_.step_noise;
                    p = std::exp(-0.5 * z * z);
                } else if (k == 0 || (off + k) * ds_ <= rate) {
                    p = 1.0; // degenerate / sub-cell noise: mass at the rate offset
                }
                kernel.push_back(p);
                total += p;
            }
            if (total <= 0.0) {
                kernel.assign(1, 1.0);
                total = 1.0;
            }
            for (auto& p : kernel) p /= total;
        }

        double log_scale = 0.0; // running log of factored-out likelihood mass
        auto apply_obs = [&](int t) {
            const int i = subj.index_of_time(t);
            const auto& xt = subj.x[static_cast<std::size_t>(i)];
            if (spec_.obs_coupling == 0.0) return;
            // multiply by exp(loglik) with max factored out for stability
            double best = -1e300;
            std::vector<double> ll(n);
            for (std::size_t c = 0; c < n; ++c) {
                if (dist[c] == 0.0) {
                    ll[c] = -1e300;
                    continue;
                }
                ll[c] = obs_loglik(xt, (static_cast<double>(c) + 0.5) * ds_);
                best = std::max(best, ll[c]);
            }
            // special-case cell 0 holding the exact s=0 atom at t=1
            if (t == 1) {
                ll[0] = obs_loglik(xt, 0.0);
                best = std::max(best, ll[0]);
            }
            for (std::size_t c = 0; c < n; ++c)
                dist[c] = dist[c] == 0.0 ? 0.0 : dist[c] * std::exp(ll[c] - best);
            log_scale += best;
        };

        std::size_t ci = 0;
        if (!cts.empty() && cts[0] == 1) {
            apply_obs(1);
            ++ci;
        }
        double tail_mass = 0.0; // absorbed mass beyond the grid (severity very high)
        for (int t = 2; t <= subj.t_max; ++t) {
            std::vector<double> next(n, 0.0);
            for (std::size_t c = 0; c < n; ++c) {
                if (dist[c] == 0.0) continue;
                for (std::size_t k = 0; k < kernel.size(); ++k) {
                    const std::size_t tgt = c + static_cast<std::size_t>(off) + k;
                    if (tgt < n)
                        next[tgt] += dist[c] * kernel[k];
                    else
                        tail_mass += dist[c] * kernel[k];
                }
            }
            dist.swap(next);
            if (ci < cts.size() && cts[ci] == t) {
                apply_obs(t);
                ++ci;
            }
        }
        double total = tail_mass, diseased = tail_mass;
        for (std::size_t c = 0; c < n; ++c) {
            total += dist[c];
            if ((static_cast<double>(c) + 0.5) * ds_ >= spec_.threshold) diseased += dist[c];
        }
        if (total <= 0.0) return {0.5, 0.0};
        return {diseased / total, total * std::exp(log_scale)};
    }

    CohortSpec spec_;
    int xi_points_;
    int s_cells_;
    double s_hi_ = 0.0;
    double ds_ = 0.0;
    std::vector<double> w_;
};

// AUC of the exact posteriors over the cohort; the learnability ceiling.
inline double bayes_oracle_auc(const Cohort& cohort, const CohortSpec& spec,
                               const std::vector<int>& condition_times) {
    BayesOracle oracle(spec);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : cohort) {
        scores.push_back(oracle.posterior(s, condition_times));
        labels.push_back(s.final_label());
    }
    return auc(scores, labels);
}

} // namespace dfpl
