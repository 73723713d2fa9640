#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dfpl/calculus.hpp"
#include "dfpl/rng.hpp"

using namespace dfpl;

// Independent oracle: exact enumeration of all monotone {0,1} paths of an
// irreversible two-state chain with start probability c and per-step
// progression probabilities q.
static double enumerate_chain(double c, const std::vector<double>& q) {
    const int steps = static_cast<int>(q.size());
    double p_diseased_T = 0.0;
    // enumerate the step at which the subject first becomes diseased
    // (start diseased, or progress at step k, or never)
    p_diseased_T += c;
    double healthy = 1.0 - c;
    for (int k = 0; k < steps; ++k) {
        p_diseased_T += healthy * q[static_cast<std::size_t>(k)];
        healthy *= 1.0 - q[static_cast<std::size_t>(k)];
    }
    return p_diseased_T;
}

TEST_CASE("combine: trivial endpoints") {
    CHECK(combine_current_progression(1.0, 0.3) == 1.0);
    CHECK(combine_current_progression(1.0, 0.0) == 1.0);
    CHECK(combine_current_progression(0.7, 0.0) == 0.7);
    CHECK(combine_current_progression(0.0, 0.4) == doctest::Approx(0.4));
}

TEST_CASE("combine: two-state total probability example") {
    // transition matrix [[0.5,0.5],[0,1]] from a healthy-with-prob-0.7 start
    CHECK(combine_current_progression(0.3, 0.5) == doctest::Approx(0.65).epsilon(1e-15));
}

TEST_CASE("combine: contract violations") {
    CHECK_THROWS_AS(combine_current_progression(-0.1, 0.5), ShapeError);
    CHECK_THROWS_AS(combine_current_progression(0.5, 1.1), ShapeError);
}

TEST_CASE("oracle equivalence over random irreversible chains") {
    Rng rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const int steps = static_cast<int>(rng.integer(1, 8));
        const double c = rng.uniform();
        std::vector<double> q;
        for (int k = 0; k < steps; ++k) q.push_back(rng.uniform());
        double prog = 1.0;
        for (double qi : q) prog *= 1.0 - qi;
        prog = 1.0 - prog; // P(progressed by T | healthy now)
        const double expected = enumerate_chain(c, q);
        CHECK(std::abs(combine_current_progression(c, prog) - expected) <= 1e-12);
    }
}

TEST_CASE("monotone dominance grid") {
    int violations = 0;
    for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j) {
            const double pc = i / 200.0, pp = j / 200.0;
            if (combine_current_progression(pc, pp) < pc) ++violations;
        }
    CHECK(violations == 0);
}

TEST_CASE("current_high_order") {
    CHECK(current_high_order(0.4, {}, 1) == doctest::Approx(0.4));
    CHECK(current_high_order(0.6, {0.2}, 2) == doctest::Approx(0.4));
    CHECK(current_high_order(0.3, {0.3, 0.3}, 3) == doctest::Approx(0.3));
    CHECK_THROWS_AS(current_high_order(0.5, {0.5}, 1), ShapeError);
}

TEST_CASE("combine_high_order endpoints") {
    CHECK(combine_high_order(0.0, 0.7) == doctest::Approx(0.7));
    CHECK(combine_high_order(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(combine_high_order(0.25, 0.8) == doctest::Approx(0.85));
}

TEST_CASE("ensemble_predict") {
    CHECK(ensemble_predict(0.6, 0.5, {0.4}) == doctest::Approx(0.5));
    CHECK(ensemble_predict(0.3, 0.3, {0.3, 0.3}) == doctest::Approx(0.3));
    CHECK(ensemble_predict(1.0, 1.0, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ensemble_predict(0.5, 0.5, {}), ShapeError);
}

// ---------------------------------------------------------------------------
// stencils
// ---------------------------------------------------------------------------

static Tensor feat(double v) { return Tensor::vector({v, 10 * v}); }

static bool entry_equals(const ResidualSet::Entry& e, double expect0) {
    return e.value.values()[0] == doctest::Approx(expect0).epsilon(1e-12);
}

TEST_CASE("residual set K=1") {
    auto rs = build_residual_set({feat(1)}, feat(9), 1);
    REQUIRE(rs.entries.size() == 1);
    CHECK(rs.entries[0].order_j == 1);
    CHECK(entry_equals(rs.entries[0], 9 - 1));
}

TEST_CASE("residual set K=2") {
    auto rs = build_residual_set({feat(1), feat(2)}, feat(9), 2);
    REQUIRE(rs.entries.size() == 3);
    // order-1: gen - F2, F2 - F1
    CHECK(rs.entries[0].order_j == 1);
    CHECK(entry_equals(rs.entries[0], 9 - 2));
    CHECK(entry_equals(rs.entries[1], 2 - 1));
    // order-2: (gen - F2) - (F2 - F1)
    CHECK(rs.entries[2].order_j == 2);
    CHECK(entry_equals(rs.entries[2], (9 - 2) - (2 - 1)));
}

TEST_CASE("residual set K=3 matches the hand expansion") {
    auto rs = build_residual_set({feat(1), feat(2), feat(4)}, feat(9), 3);
    REQUIRE(rs.entries.size() == 6);
    // order-1: gen-F3, F3-F2, F2-F1
    CHECK(entry_equals(rs.entries[0], 9 - 4));
    CHECK(entry_equals(rs.entries[1], 4 - 2));
    CHECK(entry_equals(rs.entries[2], 2 - 1));
    // order-2: (gen-F3)-(F3-F2), (F3-F2)-(F2-F1)
    CHECK(rs.entries[3].order_j == 2);
    CHECK(entry_equals(rs.entries[3], (9 - 4) - (4 - 2)));
    CHECK(entry_equals(rs.entries[4], (4 - 2) - (2 - 1)));
    // order-3: (gen-F2)-(F3-F1)
    CHECK(rs.entries[5].order_j == 3);
    CHECK(entry_equals(rs.entries[5], (9 - 2) - (4 - 1)));
}

// independent brute-force index enumeration straight from the defining
// formulas, with the underflow-drop rule
static std::vector<std::array<int, 5>> brute_force_indices(int K) {
    std::vector<std::array<int, 5>> out; // {order, a1, a2, b1, b2}; K+1 = generated
    out.push_back({1, K + 1, K, 0, 0});
    for (int i = 0; i <= K - 2; ++i) out.push_back({1, K - i, K - i - 1, 0, 0});
    for (int j = 2; j <= K; ++j) {
        if (K + 2 - j >= 1 && K + 1 - j >= 1)
            out.push_back({j, K + 1, K + 2 - j, K, K + 1 - j});
        for (int i = 0; i <= K - 2; ++i) {
            int idx[4] = {K - i, K - i + 1 - j, K - i - 1, K - i - j};
            bool ok = true;
            for (int v : idx) ok = ok && v >= 1;
            if (ok) out.push_back({j, idx[0], idx[1], idx[2], idx[3]});
        }
    }
    return out;
}

TEST_CASE("stencil indices match the brute-force enumeration for K <= 5") {
    for (int K = 1; K <= 5; ++K) {
        auto got = stencil_indices(K);
        auto want = brute_force_indices(K);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].order_j == want[i][0]);
            CHECK(got[i].a1 == want[i][1]);
            CHECK(got[i].a2 == want[i][2]);
            if (got[i].order_j > 1) {
                CHECK(got[i].b1 == want[i][3]);
                CHECK(got[i].b2 == want[i][4]);
            }
        }
    }
}

TEST_CASE("stencil cardinality: K entries at order 1, K-j+1 at order j") {
    for (int K = 1; K <= 5; ++K) {
        auto rs_idx = stencil_indices(K);
        std::vector<int> counts(static_cast<std::size_t>(K + 1), 0);
        for (const auto& e : rs_idx) ++counts[static_cast<std::size_t>(e.order_j)];
        CHECK(counts[1] == K);
        for (int j = 2; j <= K; ++j)
            CHECK(counts[static_cast<std::size_t>(j)] == std::max(1, K - j + 1));
    }
}

TEST_CASE("residual set rejects bad input") {
    CHECK_THROWS_AS(build_residual_set({}, feat(1), 0), ShapeError);
    CHECK_THROWS_AS(build_residual_set({feat(1)}, Tensor::vector({1.0}), 1), ShapeError);
    CHECK_THROWS_AS(build_residual_set({feat(1)}, feat(2), 2), ShapeError);
}

TEST_CASE("observation times invariants") {
    CHECK_THROWS_AS(ObservationTimes({3, 2}, 5), ShapeError);
    CHECK_THROWS_AS(ObservationTimes({1, 2}, 2), ShapeError);
    CHECK_THROWS_AS(ObservationTimes({0}, 2), ShapeError);
    ObservationTimes ok({1, 3, 4}, 6);
    CHECK(ok.order() == 3);
}
