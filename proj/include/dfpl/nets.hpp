#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "tensor.hpp"

namespace dfpl {

// Named parameter map shared by every network block.
using ParamMap = std::map<std::string, Tensor>;

inline void check_params_finite(const ParamMap& params, const std::string& what) {
    for (const auto& [name, t] : params)
        if (!t.all_finite())
            throw NumericError(what + ": non-finite parameter " + name);
}

// ---------------------------------------------------------------------------
// blocks
// ---------------------------------------------------------------------------

struct Linear {
    Tensor W; // [out, in]
    Tensor b; // [out]

    Linear() = default;
    Linear(std::int64_t in, std::int64_t out, Rng& rng) {
        // scaled uniform init
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::vector<double> w(static_cast<std::size_t>(in * out));
        for (auto& v : w) v = rng.uniform(-bound, bound);
        W = Tensor::from({out, in}, std::move(w), true);
        b = Tensor::zeros({out}, true);
    }

    Tensor operator()(const Tensor& x) const { return add(matmul(W, x), b); }

    void collect(ParamMap& m, const std::string& prefix) const {
        m[prefix + ".W"] = W;
        m[prefix + ".b"] = b;
    }
};

// Two-layer perceptron, relu hidden, linear output.
struct Mlp {
    Linear l1, l2;

    Mlp() = default;
    Mlp(std::int64_t in, std::int64_t hidden, std::int64_t out, Rng& rng)
        : l1(in, hidden, rng), l2(hidden, out, rng) {}

    Tensor operator()(const Tensor& x) const { return l2(relu(l1(x))); }

    void collect(ParamMap& m, const std::string& prefix) const {
        l1.collect(m, prefix + ".l1");
        l2.collect(m, prefix + ".l2");
    }
};

struct LstmState {
    Tensor hidden; // [H]
    Tensor cell;   // [H]

    static LstmState zero(std::int64_t h) {
        return {Tensor::zeros({h}), Tensor::zeros({h})};
    }
};

// Standard gated cell; gate rows ordered input, forget, candidate, output.
struct LstmCell {
    std::int64_t input_dim = 0, hidden_dim = 0;
    Tensor Wx; // [4H, in]
    Tensor Wh; // [4H, H]
    Tensor b;  // [4H]

    LstmCell() = default;
    LstmCell(std::int64_t in, std::int64_t h, Rng& rng) : input_dim(in), hidden_dim(h) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(h));
        auto init = [&](std::int64_t rows, std::int64_t cols) {
            std::vector<double> w(static_cast<std::size_t>(rows * cols));
            for (auto& v : w) v = rng.uniform(-bound, bound);
            return Tensor::from({rows, cols}, std::move(w), true);
        };
        Wx = init(4 * h, in);
        Wh = init(4 * h, h);
        b = Tensor::zeros({4 * h}, true);
    }

    LstmState step(const LstmState& s, const Tensor& x) const {
        if (x.shape() != Shape{input_dim})
            throw ShapeError("lstm_step: input shape " + shape_str(x.shape()) +
                             " vs expected [" + std::to_string(input_dim) + "]");
        if (s.hidden.shape() != Shape{hidden_dim} || s.cell.shape() != Shape{hidden_dim})
            throw ShapeError("lstm_step: state dim mismatch");
        Tensor gates = add(add(matmul(Wx, x), matmul(Wh, s.hidden)), b);
        auto slice = [&](std::int64_t k) {
            std::vector<double> v(gates.values().begin() + k * hidden_dim,
                                  gates.values().begin() + (k + 1) * hidden_dim);
            auto off = k * hidden_dim;
            auto pg = gates.node_ptr();
            return detail::make_op({hidden_dim}, std::move(v), {gates},
                                   [pg, off](detail::Node& self) {
                                       pg->ensure_grad();
                                       for (std::int64_t i = 0; i < self.size(); ++i)
                                           pg->grad[static_cast<std::size_t>(off + i)] +=
                                               self.grad[static_cast<std::size_t>(i)];
                                   });
        };
        Tensor i = sigmoid(slice(0));
        Tensor f = sigmoid(slice(1));
        Tensor g = vtanh(slice(2));
        Tensor o = sigmoid(slice(3));
        Tensor c = add(mul(f, s.cell), mul(i, g));
        Tensor h = mul(o, vtanh(c));
        return {h, c};
    }

    void collect(ParamMap& m, const std::string& prefix) const {
        m[prefix + ".Wx"] = Wx;
        m[prefix + ".Wh"] = Wh;
        m[prefix + ".b"] = b;
    }
};

// ---------------------------------------------------------------------------
// model-specific blocks
// ---------------------------------------------------------------------------

struct NetDims {
    std::int64_t obs_dim = 32;
    std::int64_t feat_dim = 16;
    std::int64_t attr_dim = 6;
    std::int64_t hidden_dim = 32; // LSTM hidden / generator conditioning
    std::int64_t noise_dim = 8;
    std::int64_t mlp_width = 32;
};

struct Encoder {
    Mlp net;
    std::int64_t obs_dim = 0;

    Encoder() = default;
    Encoder(const NetDims& d, Rng& rng)
        : net(d.obs_dim, d.mlp_width, d.feat_dim, rng), obs_dim(d.obs_dim) {}

    Tensor operator()(const Tensor& x) const {
        if (x.shape() != Shape{obs_dim})
            throw ShapeError("enc_forward: observation shape " + shape_str(x.shape()) +
                             " vs expected [" + std::to_string(obs_dim) + "]");
        return net(x);
    }

    void collect(ParamMap& m) const { net.collect(m, "enc"); }

    void freeze() {
        net.l1.W.set_requires_grad(false);
        net.l1.b.set_requires_grad(false);
        net.l2.W.set_requires_grad(false);
        net.l2.b.set_requires_grad(false);
    }
};

struct Generator {
    Mlp net;
    std::int64_t cond_dim = 0, attr_dim = 0, noise_dim = 0;

    Generator() = default;
    Generator(const NetDims& d, Rng& rng)
        : net(d.hidden_dim + d.attr_dim + d.noise_dim, d.mlp_width, d.feat_dim, rng),
          cond_dim(d.hidden_dim), attr_dim(d.attr_dim), noise_dim(d.noise_dim) {}

    Tensor operator()(const Tensor& hidden, const Tensor& attrs, const Tensor& noise) const {
        if (hidden.shape() != Shape{cond_dim} || attrs.shape() != Shape{attr_dim} ||
            noise.shape() != Shape{noise_dim})
            throw ShapeError("generator_forward: input shapes " + shape_str(hidden.shape()) +
                             "," + shape_str(attrs.shape()) + "," + shape_str(noise.shape()));
        return net(concat({hidden, attrs, noise}));
    }

    void collect(ParamMap& m) const { net.collect(m, "gen"); }
};

struct Critic {
    Mlp net;
    std::int64_t feat_dim = 0;

    Critic() = default;
    Critic(const NetDims& d, Rng& rng) : net(d.feat_dim, d.mlp_width, 1, rng), feat_dim(d.feat_dim) {}

    // unbounded real score (no sigmoid)
    Tensor operator()(const Tensor& F) const {
        if (F.shape() != Shape{feat_dim})
            throw ShapeError("critic_forward: feature shape " + shape_str(F.shape()) +
                             " vs expected [" + std::to_string(feat_dim) + "]");
        return sum(net(F));
    }

    void collect(ParamMap& m) const { net.collect(m, "critic"); }
};

// Probabilities kept strictly inside (0,1) before any downstream log.
inline constexpr double kProbEps = 1e-7;

struct Predictor {
    Mlp net;
    std::int64_t feature_dim = 0, attr_dim = 0;

    Predictor() = default;
    Predictor(std::int64_t feature_dim_, std::int64_t attr_dim_, std::int64_t width, Rng& rng)
        : net(feature_dim_ + attr_dim_, width, 1, rng),
          feature_dim(feature_dim_), attr_dim(attr_dim_) {}

    // attrs: pass a zero vector when attributes are unavailable
    Tensor operator()(const Tensor& features, const Tensor& attrs) const {
        if (features.shape() != Shape{feature_dim} || attrs.shape() != Shape{attr_dim})
            throw ShapeError("predictor_forward: input shapes " + shape_str(features.shape()) +
                             "," + shape_str(attrs.shape()) + " vs expected [" +
                             std::to_string(feature_dim) + "],[" + std::to_string(attr_dim) + "]");
        return clamp(sigmoid(sum(net(concat({features, attrs})))), kProbEps, 1.0 - kProbEps);
    }

    void collect(ParamMap& m, const std::string& prefix) const { net.collect(m, prefix); }
};

// ---------------------------------------------------------------------------
// optimizers
// ---------------------------------------------------------------------------

enum class OptRule { AdaptiveRms, PlainSgd };

// AdaptiveRms: running squared-grad average, decay 0.99, epsilon 1e-8.
// Weight decay applied as L2 shrinkage in both rules.
struct Optimizer {
    OptRule rule = OptRule::PlainSgd;
    double lr = 0.01;
    double weight_decay = 0.0;
    double decay = 0.99;
    double eps = 1e-8;
    std::map<std::string, std::vector<double>> acc; // adaptive-rms only

    Optimizer() = default;
    Optimizer(OptRule r, double lr_, double wd) : rule(r), lr(lr_), weight_decay(wd) {}

    void step(ParamMap& params) {
        // validate before touching anything
        for (auto& [name, t] : params) {
            if (!t.requires_grad()) continue;
            if (!t.has_grad()) continue;
            for (double g : t.grad())
                if (!std::isfinite(g))
                    throw NumericError("optimizer_step: non-finite grad in " + name);
        }
        for (auto& [name, t] : params) {
            if (!t.requires_grad() || !t.has_grad()) continue;
            auto& v = t.values();
            const auto& g = t.grad();
            if (rule == OptRule::PlainSgd) {
                for (std::size_t i = 0; i < v.size(); ++i)
                    v[i] -= lr * (g[i] + weight_decay * v[i]);
            } else {
                auto& a = acc[name];
                if (a.size() != v.size()) a.assign(v.size(), 0.0);
                for (std::size_t i = 0; i < v.size(); ++i) {
                    a[i] = decay * a[i] + (1.0 - decay) * g[i] * g[i];
                    v[i] -= lr * (g[i] / (std::sqrt(a[i]) + eps) + weight_decay * v[i]);
                }
            }
        }
    }
};

inline void zero_grads(ParamMap& params) {
    for (auto& [name, t] : params) t.zero_grad();
}

// Clamp every parameter in the map to [-c, c] (Wasserstein critic clipping).
inline void clip_weights(ParamMap& params, double c) {
    if (!(c > 0.0)) throw ShapeError("clip_weights: bound must be positive");
    for (auto& [name, t] : params)
        for (auto& v : t.values()) v = std::min(c, std::max(-c, v));
}

inline double max_abs_param(const ParamMap& params) {
    double m = 0.0;
    for (const auto& [name, t] : params)
        for (double v : t.values()) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// checkpoints: JSON, name -> { shape, data as hex-float strings }
// ---------------------------------------------------------------------------

inline nlohmann::json params_to_json(const ParamMap& params) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, t] : params) {
        j[name] = {{"shape", t.shape()}, {"data", doubles_to_hex(t.values())}};
    }
    return j;
}

// Loads values into an existing map; shapes must match.
inline void params_from_json(const nlohmann::json& j, ParamMap& params) {
    for (auto& [name, t] : params) {
        if (!j.contains(name)) throw IoError("checkpoint missing parameter " + name);
        Shape shape = j.at(name).at("shape").get<Shape>();
        if (shape != t.shape())
            throw IoError("checkpoint shape mismatch for " + name + ": " +
                          shape_str(shape) + " vs " + shape_str(t.shape()));
        auto data = hex_to_doubles(j.at(name).at("data").get<std::vector<std::string>>());
        t.values() = std::move(data);
    }
}

inline void save_checkpoint(const ParamMap& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << params_to_json(params).dump() << '\n';
}

inline void load_checkpoint(ParamMap& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    params_from_json(j, params);
}

} // namespace dfpl
