#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace dfpl {

inline constexpr int kAttrDim = 6;

// One subject: observations x_t, attributes a_t and labels y_t over discrete
// times 1..T_max, with a per-time presence mask (some visits are missing) and
// a label-visibility mask (labels usable only at t=1 and t=T in paper-faithful
// mode).
struct SubjectTrajectory {
    std::int64_t subject_id = 0;
    int t_max = 6;
    std::vector<int> times;                      // observed visit times, sorted
    std::vector<std::vector<double>> x;          // per observed time, obs_dim
    std::vector<std::vector<double>> a;          // per observed time, 6
    std::vector<int> y;                          // per observed time, {0,1}
    std::vector<bool> label_visible;             // per observed time

    int index_of_time(int t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (times[i] == t) return static_cast<int>(i);
        return -1;
    }
    int final_label() const { return y.back(); }
};

using Cohort = std::vector<SubjectTrajectory>;

// Latent process: per-subject progression rate, severity accumulating the rate
// plus nonnegative noise each step, disease once severity crosses a threshold.
struct CohortSpec {
    std::int64_t n_subjects = 500;
    int obs_dim = 32;
    int t_max = 6;
    double noise_scale = 1.0;      // stddev of observation noise on x
    double rate_log_mean = -1.45;  // log-normal latent progression rate
    double rate_log_sd = 0.8;
    double step_noise = 0.05;      // scale of nonnegative severity increments
    double threshold = 1.0;        // severity level at which disease manifests
    double attr_effect = 0.8;      // coupling of informative attributes to the rate latent
    double attr_noise = 0.5;       // readout noise on informative attributes
    double obs_coupling = 1.0;     // scale of the severity signal inside x
    double missing_rate = 0.25;    // chance an interior visit is absent
    std::uint64_t seed = 0;
};

namespace detail_cohort {

// Fixed embedding direction for severity inside the observation vector: unit
// pattern derived from the dimension only, so the generative process is fully
// known to the Bayes oracle.
inline std::vector<double> severity_weights(int obs_dim) {
    std::vector<double> w(static_cast<std::size_t>(obs_dim));
    double norm = 0.0;
    for (int d = 0; d < obs_dim; ++d) {
        w[static_cast<std::size_t>(d)] = std::cos(0.7 * (d + 1)) / std::sqrt(static_cast<double>(obs_dim));
        norm += w[static_cast<std::size_t>(d)] * w[static_cast<std::size_t>(d)];
    }
    norm = std::sqrt(norm);
    for (auto& v : w) v /= norm;
    return w;
}

} // namespace detail_cohort

inline SubjectTrajectory generate_subject(const CohortSpec& spec, std::int64_t subject_id) {
    Rng rng(derive_seed(spec.seed, "cohort/subject", static_cast<std::uint64_t>(subject_id)));
    SubjectTrajectory s;
    s.subject_id = subject_id;
    s.t_max = spec.t_max;

    const double xi = rng.normal();
    const double rate = std::exp(spec.rate_log_mean + spec.rate_log_sd * xi);
    const auto w = detail_cohort::severity_weights(spec.obs_dim);

    // informative attribute baselines read out the rate latent
    std::array<double, kAttrDim> attr{};
    attr[0] = spec.attr_effect * xi + rng.normal(0.0, spec.attr_noise);
    attr[1] = -spec.attr_effect * xi + rng.normal(0.0, spec.attr_noise);
    for (int d = 2; d < kAttrDim; ++d) attr[static_cast<std::size_t>(d)] = rng.normal();

    double severity = 0.0;
    for (int t = 1; t <= spec.t_max; ++t) {
        if (t > 1) severity += rate + spec.step_noise * std::abs(rng.normal());
        // attributes drift slowly
        std::array<double, kAttrDim> at = attr;
        for (int d = 0; d < kAttrDim; ++d)
            at[static_cast<std::size_t>(d)] += 0.05 * t * std::sin(0.3 * (d + 1));

        std::vector<double> xt(static_cast<std::size_t>(spec.obs_dim));
        for (int d = 0; d < spec.obs_dim; ++d)
            xt[static_cast<std::size_t>(d)] =
                spec.obs_coupling * w[static_cast<std::size_t>(d)] * severity +
                rng.normal(0.0, spec.noise_scale);

        // interior visits may be missing; t=1 and t=T_max are always kept
        const bool missing =
            t > 1 && t < spec.t_max && rng.uniform() < spec.missing_rate;
        if (!missing) {
            s.times.push_back(t);
            s.x.push_back(std::move(xt));
            s.a.emplace_back(at.begin(), at.end());
            s.y.push_back(severity >= spec.threshold ? 1 : 0);
            s.label_visible.push_back(true);
        }
    }
    return s;
}

// Deterministic under seed; subjects are independent given derived seeds.
inline Cohort generate_cohort(const CohortSpec& spec) {
    if (spec.n_subjects <= 0) throw ShapeError("generate_cohort: n_subjects must be positive");
    Cohort cohort;
    cohort.reserve(static_cast<std::size_t>(spec.n_subjects));
    for (std::int64_t i = 0; i < spec.n_subjects; ++i)
        cohort.push_back(generate_subject(spec, i));
    return cohort;
}

// Subject-level 60/20/20 (or custom) split, deterministic under seed.
struct SplitRatios {
    double train = 0.6, val = 0.2, test = 0.2;
};

struct CohortSplit {
    Cohort train, val, test;
};

inline CohortSplit split_dataset(const Cohort& cohort, const SplitRatios& r,
                                 std::uint64_t seed = 0) {
    if (!(r.train > 0 && r.val >= 0 && r.test >= 0) ||
        std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
        throw ShapeError("split_dataset: ratios must be nonnegative and sum to 1");
    std::vector<std::size_t> idx(cohort.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(derive_seed(seed, "split"));
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const auto n = cohort.size();
    const auto n_train = static_cast<std::size_t>(std::llround(r.train * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(r.val * static_cast<double>(n)));
    CohortSplit out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = cohort[idx[i]];
        if (i < n_train)
            out.train.push_back(s);
        else if (i < n_train + n_val)
            out.val.push_back(s);
        else
            out.test.push_back(s);
    }
    auto by_id = [](const SubjectTrajectory& a, const SubjectTrajectory& b) {
        return a.subject_id < b.subject_id;
    };
    std::sort(out.train.begin(), out.train.end(), by_id);
    std::sort(out.val.begin(), out.val.end(), by_id);
    std::sort(out.test.begin(), out.test.end(), by_id);
    return out;
}

// Paper-faithful labeling: labels visible only at t=1 and t=T_max. Idempotent.
inline Cohort mask_labels(Cohort cohort) {
    for (auto& s : cohort)
        for (std::size_t i = 0; i < s.times.size(); ++i)
            s.label_visible[i] = s.times[i] == 1 || s.times[i] == s.t_max;
    return cohort;
}

// ---------------------------------------------------------------------------
// JSON-lines persistence; one subject per line
// ---------------------------------------------------------------------------

inline nlohmann::json subject_to_json(const SubjectTrajectory& s) {
    nlohmann::json j;
    j["subject_id"] = s.subject_id;
    j["t_max"] = s.t_max;
    j["times"] = s.times;
    j["x"] = s.x;
    j["a"] = s.a;
    j["y"] = s.y;
    j["label_visible"] = std::vector<int>(s.label_visible.begin(), s.label_visible.end());
    return j;
}

inline SubjectTrajectory subject_from_json(const nlohmann::json& j) {
    SubjectTrajectory s;
    s.subject_id = j.at("subject_id").get<std::int64_t>();
    s.t_max = j.at("t_max").get<int>();
    s.times = j.at("times").get<std::vector<int>>();
    s.x = j.at("x").get<std::vector<std::vector<double>>>();
    s.a = j.at("a").get<std::vector<std::vector<double>>>();
    s.y = j.at("y").get<std::vector<int>>();
    auto vis = j.at("label_visible").get<std::vector<int>>();
    s.label_visible.assign(vis.begin(), vis.end());
    return s;
}

inline void save_cohort(const Cohort& cohort, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open cohort file for writing: " + path);
    for (const auto& s : cohort) out << subject_to_json(s).dump() << '\n';
}

inline Cohort load_cohort(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cohort file: " + path);
    Cohort cohort;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            cohort.push_back(subject_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
        }
    }
    return cohort;
}

} // namespace dfpl
