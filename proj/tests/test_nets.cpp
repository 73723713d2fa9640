#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dfpl/model.hpp"
#include "dfpl/nets.hpp"
#include "dfpl/rng.hpp"

using namespace dfpl;

static NetDims small_dims() {
    NetDims d;
    d.obs_dim = 6;
    d.feat_dim = 4;
    d.hidden_dim = 5;
    d.noise_dim = 3;
    d.mlp_width = 8;
    return d;
}

TEST_CASE("encoder: zero final layer gives the bias vector") {
    Rng rng(1);
    NetDims d = small_dims();
    Encoder enc(d, rng);
    for (auto& v : enc.net.l2.W.values()) v = 0.0;
    enc.net.l2.b.values() = {1.0, -2.0, 3.0, 4.0};
    std::vector<double> x(static_cast<std::size_t>(d.obs_dim), 0.7);
    Tensor F = enc(Tensor::vector(x));
    CHECK(F.values() == std::vector<double>{1.0, -2.0, 3.0, 4.0});
}

TEST_CASE("encoder: deterministic under fixed seed") {
    auto run = [] {
        Rng rng(7);
        Encoder enc(small_dims(), rng);
        return enc(Tensor::vector({0.1, 0.2, 0.3, 0.4, 0.5, 0.6})).values();
    };
    CHECK(run() == run());
}

TEST_CASE("encoder rejects wrong observation dim") {
    Rng rng(1);
    Encoder enc(small_dims(), rng);
    CHECK_THROWS_AS(enc(Tensor::vector({1.0, 2.0})), ShapeError);
}

TEST_CASE("lstm: zero parameters and state give zero hidden") {
    NetDims d = small_dims();
    Rng rng(1);
    LstmCell cell(d.feat_dim + d.attr_dim, d.hidden_dim, rng);
    for (auto& v : cell.Wx.values()) v = 0.0;
    for (auto& v : cell.Wh.values()) v = 0.0;
    auto st = cell.step(LstmState::zero(d.hidden_dim),
                        Tensor::zeros({d.feat_dim + d.attr_dim}));
    for (double h : st.hidden.values()) CHECK(h == 0.0);
}

TEST_CASE("lstm: hidden bounded by tanh envelope") {
    Rng rng(11);
    LstmCell cell(4, 6, rng);
    LstmState st = LstmState::zero(6);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> x(4);
        for (auto& v : x) v = rng.normal(0, 5);
        st = cell.step(st, Tensor::vector(x));
        for (double h : st.hidden.values()) CHECK(std::abs(h) <= 1.0);
    }
}

TEST_CASE("lstm: state evolves across identical inputs") {
    Rng rng(13);
    LstmCell cell(4, 6, rng);
    Tensor x = Tensor::vector({0.5, -0.5, 0.25, 1.0});
    auto s1 = cell.step(LstmState::zero(6), x);
    auto s2 = cell.step(s1, x);
    bool differs = false;
    for (int i = 0; i < 6; ++i) differs = differs || s1.hidden.at(i) != s2.hidden.at(i);
    CHECK(differs);
}

TEST_CASE("generator output matches encoder feature shape; noise matters") {
    Rng rng(17);
    NetDims d = small_dims();
    Encoder enc(d, rng);
    Generator gen(d, rng);
    Tensor h = Tensor::zeros({d.hidden_dim});
    Tensor a = Tensor::zeros({d.attr_dim});
    Tensor f1 = gen(h, a, Tensor::zeros({d.noise_dim}));
    CHECK(f1.shape() == enc(Tensor::zeros({d.obs_dim})).shape());
    Tensor f2 = gen(h, a, Tensor::vector({1.0, -1.0, 0.5}));
    bool differs = false;
    for (int i = 0; i < d.feat_dim; ++i) differs = differs || f1.at(i) != f2.at(i);
    CHECK(differs);
    // zero final layer -> bias
    for (auto& v : gen.net.l2.W.values()) v = 0.0;
    gen.net.l2.b.values() = {9, 8, 7, 6};
    CHECK(gen(h, a, Tensor::zeros({d.noise_dim})).values() == std::vector<double>{9, 8, 7, 6});
}

TEST_CASE("critic: zero params score zero; Lipschitz bound from clipped weights") {
    Rng rng(19);
    NetDims d = small_dims();
    Critic critic(d, rng);
    {
        Critic zeroed = critic;
        Rng r2(20);
        zeroed = Critic(d, r2);
        for (auto& v : zeroed.net.l1.W.values()) v = 0.0;
        for (auto& v : zeroed.net.l1.b.values()) v = 0.0;
        for (auto& v : zeroed.net.l2.W.values()) v = 0.0;
        for (auto& v : zeroed.net.l2.b.values()) v = 0.0;
        CHECK(zeroed(Tensor::zeros({d.feat_dim})).item() == 0.0);
    }
    const double c = 0.01;
    ParamMap cp;
    critic.collect(cp);
    clip_weights(cp, c);
    // operator-norm bound of each clipped layer: c * sqrt(rows*cols) is an
    // upper bound on the spectral norm; relu is 1-Lipschitz
    auto frob = [&](const Tensor& W) {
        double s = 0;
        for (double v : W.values()) s += v * v;
        return std::sqrt(s);
    };
    const double L = frob(critic.net.l1.W) * frob(critic.net.l2.W);
    Rng r3(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(d.feat_dim)), b(a.size());
        for (auto& v : a) v = r3.normal();
        for (auto& v : b) v = r3.normal();
        double da = critic(Tensor::vector(a)).item();
        double db = critic(Tensor::vector(b)).item();
        double dist = 0;
        for (std::size_t i = 0; i < a.size(); ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
        dist = std::sqrt(dist);
        CHECK(std::abs(da - db) <= L * dist + 1e-12);
    }
}

TEST_CASE("predictor: zero final layer gives 0.5; output strictly in (0,1)") {
    Rng rng(29);
    NetDims d = small_dims();
    Predictor p(d.feat_dim, d.attr_dim, d.mlp_width, rng);
    {
        Predictor z = p;
        for (auto& v : z.net.l2.W.values()) v = 0.0;
        for (auto& v : z.net.l2.b.values()) v = 0.0;
        CHECK(z(Tensor::zeros({d.feat_dim}), Tensor::zeros({d.attr_dim})).item() == 0.5);
    }
    Rng r2(31);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> f(static_cast<std::size_t>(d.feat_dim)),
            a(static_cast<std::size_t>(d.attr_dim));
        for (auto& v : f) v = r2.normal(0, 10);
        for (auto& v : a) v = r2.normal(0, 10);
        const double out = p(Tensor::vector(f), Tensor::vector(a)).item();
        CHECK(out > 0.0);
        CHECK(out < 1.0);
    }
}

TEST_CASE("optimizer: plain sgd definition and zero-grad fixed point") {
    Tensor w = Tensor::vector({1.0, 1.0}, true);
    ParamMap m{{"w", w}};
    Optimizer opt(OptRule::PlainSgd, 0.1, 0.0);
    w.zero_grad();
    w.grad() = {1.0, -2.0};
    opt.step(m);
    CHECK(w.values()[0] == doctest::Approx(0.9));
    CHECK(w.values()[1] == doctest::Approx(1.2));
    w.grad() = {0.0, 0.0};
    auto before = w.values();
    opt.step(m);
    CHECK(w.values() == before);
}

TEST_CASE("optimizer: adaptive-rms matches a 10-step scalar hand simulation") {
    Tensor w = Tensor::scalar(0.0, true);
    ParamMap m{{"w", w}};
    Optimizer opt(OptRule::AdaptiveRms, 0.01, 0.0);
    const double g = 0.5;
    double ref = 0.0, acc = 0.0;
    for (int i = 0; i < 10; ++i) {
        w.zero_grad();
        w.grad() = {g};
        opt.step(m);
        acc = 0.99 * acc + 0.01 * g * g;
        ref -= 0.01 * g / (std::sqrt(acc) + 1e-8);
        CHECK(w.values()[0] == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("optimizer rejects non-finite grads") {
    Tensor w = Tensor::scalar(1.0, true);
    ParamMap m{{"w", w}};
    w.zero_grad();
    w.grad() = {std::nan("")};
    Optimizer opt(OptRule::PlainSgd, 0.1, 0.0);
    CHECK_THROWS_AS(opt.step(m), NumericError);
    CHECK(w.values()[0] == 1.0); // step aborted before mutation
}

TEST_CASE("clip_weights clamps exactly to the bound") {
    Tensor w = Tensor::vector({0.5, -0.003, -0.5}, true);
    ParamMap m{{"w", w}};
    clip_weights(m, 0.01);
    CHECK(w.values()[0] == 0.01);
    CHECK(w.values()[1] == -0.003);
    CHECK(w.values()[2] == -0.01);
}

TEST_CASE("network blocks pass grad_check") {
    NetDims d = small_dims();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(seed, "blocks"));
        Encoder enc(d, rng);
        Critic critic(d, rng);
        Predictor pred(d.feat_dim, d.attr_dim, d.mlp_width, rng);
        std::vector<double> x(static_cast<std::size_t>(d.obs_dim));
        for (auto& v : x) v = rng.normal();
        CHECK(grad_check([&](const Tensor& t) { return sum(enc(t)); }, Tensor::vector(x)) <= 1e-4);
        std::vector<double> f(static_cast<std::size_t>(d.feat_dim));
        for (auto& v : f) v = rng.normal();
        CHECK(grad_check([&](const Tensor& t) { return critic(t); }, Tensor::vector(f)) <= 1e-4);
        CHECK(grad_check([&](const Tensor& t) {
                  return pred(t, Tensor::zeros({d.attr_dim}));
              }, Tensor::vector(f)) <= 1e-4);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Rng rng(101);
    NetDims d = small_dims();
    DfplModel model(d, 2, 5);
    auto params = model.all_params();
    // perturb to irrational-looking values
    for (auto& [name, t] : params)
        for (auto& v : t.values()) v = rng.normal() * 1e-3 + v;
    const std::string path = "ckpt_roundtrip_test.json";
    save_checkpoint(params, path);
    DfplModel other(d, 2, 99);
    auto params2 = other.all_params();
    load_checkpoint(params2, path);
    for (auto& [name, t] : params) {
        const auto& u = params2.at(name);
        REQUIRE(u.shape() == t.shape());
        for (std::size_t i = 0; i < t.values().size(); ++i)
            CHECK(u.values()[i] == t.values()[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("rollout: minimal horizon gives one step") {
    NetDims d = small_dims();
    DfplModel model(d, 1, 3);
    Tensor f = Tensor::zeros({d.feat_dim});
    Tensor a = Tensor::zeros({d.attr_dim});
    auto noise = seeded_noise(d.noise_dim, 1);
    auto r = lstm_rollout(model, {1}, {f}, {a}, 2, noise);
    CHECK(r.times == std::vector<int>{2});
    CHECK(r.generated.size() == 1);
}

TEST_CASE("rollout: five closed-loop steps from one observation") {
    NetDims d = small_dims();
    DfplModel model(d, 1, 3);
    auto noise = seeded_noise(d.noise_dim, 1);
    auto r = lstm_rollout(model, {1}, {Tensor::zeros({d.feat_dim})},
                          {Tensor::zeros({d.attr_dim})}, 6, noise);
    CHECK(r.times == std::vector<int>{2, 3, 4, 5, 6});
}

TEST_CASE("rollout: observed features reused at observed times") {
    NetDims d = small_dims();
    DfplModel model(d, 3, 3);
    auto noise = seeded_noise(d.noise_dim, 1);
    std::vector<Tensor> feats{Tensor::filled({d.feat_dim}, 1.0),
                              Tensor::filled({d.feat_dim}, 2.0),
                              Tensor::filled({d.feat_dim}, 3.0)};
    std::vector<Tensor> attrs(3, Tensor::zeros({d.attr_dim}));
    auto r = lstm_rollout(model, {1, 2, 3}, feats, attrs, 5, noise);
    CHECK(r.times == std::vector<int>{2, 3, 4, 5});
}

TEST_CASE("rollout rejects bad time structure") {
    NetDims d = small_dims();
    DfplModel model(d, 2, 3);
    auto noise = seeded_noise(d.noise_dim, 1);
    std::vector<Tensor> feats(2, Tensor::zeros({d.feat_dim}));
    std::vector<Tensor> attrs(2, Tensor::zeros({d.attr_dim}));
    CHECK_THROWS_AS(lstm_rollout(model, {2, 1}, feats, attrs, 5, noise), ShapeError);
    CHECK_THROWS_AS(lstm_rollout(model, {1, 3}, feats, attrs, 3, noise), ShapeError);
}
