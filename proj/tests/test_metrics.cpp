#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "voltgraph/metrics.hpp"
#include "voltgraph/model.hpp"
#include "voltgraph/rng.hpp"

using namespace voltgraph;

TEST_CASE("acc_at_k counts predictions within range/K of the truth") {
    // Range 3, K=4 → tolerance 0.75; errors 0.1, 0.4, 0, 2.0 → 3 of 4 inside.
    std::vector<double> y = {0.0, 1.0, 2.0, 3.0};
    std::vector<double> y_hat = {0.1, 1.4, 2.0, 5.0};
    CHECK(acc_at_k(y, y_hat, 4) == doctest::Approx(0.75));
    // An error exactly at the tolerance still counts (inclusive boundary).
    CHECK(acc_at_k({0.0, 2.0}, {1.0, 2.0}, 2) == 1.0);
    // K=1 admits everything within the full range.
    CHECK(acc_at_k(y, {3.0, 2.0, 1.0, 0.0}, 1) == 1.0);
}

TEST_CASE("acc_at_k rejects bad input") {
    CHECK_THROWS_AS(acc_at_k({}, {}, 10), std::invalid_argument);
    CHECK_THROWS_AS(acc_at_k({1.0, 2.0}, {1.0}, 10), std::invalid_argument);
    CHECK_THROWS_AS(acc_at_k({1.0, 2.0}, {1.0, 2.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(acc_at_k({5.0, 5.0, 5.0}, {5.0, 5.0, 5.0}, 10), std::invalid_argument);
}

TEST_CASE("acc_at_k matches the analytic rate for uniform noise") {
    // y ~ U[0,1], prediction error ~ U[-1,1]: P(|err| <= range/K) ≈ 1/K for
    // K=2 → 0.5.
    Rng rng(2024);
    const int n = 100000;
    std::vector<double> y(n), y_hat(n);
    for (int i = 0; i < n; ++i) {
        y[i] = rng.uniform();
        y_hat[i] = y[i] + rng.uniform(-1.0, 1.0);
    }
    CHECK(acc_at_k(y, y_hat, 2) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("acc_at_k is monotone in the tolerance") {
    Rng rng(5);
    std::vector<double> y(500), y_hat(500);
    for (size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.uniform();
        y_hat[i] = y[i] + rng.normal(0.0, 0.1);
    }
    double prev = 1.0;
    for (int k : {1, 2, 5, 10, 50, 1000}) {
        double acc = acc_at_k(y, y_hat, k);
        CHECK(acc <= prev);
        prev = acc;
    }
}

TEST_CASE("make_report aggregates the requested thresholds") {
    std::vector<double> y = {0.0, 1.0, 2.0, 3.0};
    std::vector<double> y_hat = {0.1, 1.4, 2.0, 5.0};
    MetricReport r = make_report(y, y_hat, {1, 4});
    CHECK(r.n_examples == 4);
    CHECK(r.range_min == 0.0);
    CHECK(r.range_max == 3.0);
    CHECK(r.acc_at_k.size() == 2);
    CHECK(r.acc_at_k.at(4) == doctest::Approx(0.75));
    double mse = (0.01 + 0.16 + 0.0 + 4.0) / 4.0;
    CHECK(r.mse == doctest::Approx(mse));
}

TEST_CASE("predict_all is independent of the evaluation batch size") {
    auto records = testing::solved_ladder_records(7, 33);
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.hidden_dim = 8;
    cfg.head_hidden = 8;
    GnnModel model(cfg, 3);
    std::vector<double> small = predict_all(model, records, 2);
    std::vector<double> big = predict_all(model, records, 100);
    REQUIRE(small.size() == big.size());
    for (size_t i = 0; i < small.size(); ++i)
        CHECK(small[i] == doctest::Approx(big[i]).epsilon(1e-9));
}

TEST_CASE("evaluate_model lines predictions up with the right targets") {
    auto records = testing::solved_ladder_records(5, 44);
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.hidden_dim = 8;
    cfg.head_hidden = 8;

    SUBCASE("node-level task concatenates record targets") {
        GnnModel model(cfg, 6);
        MetricReport r = evaluate_model(model, records, {10, 100}, 3);
        size_t n_outputs = 0;
        for (const auto& rec : records) n_outputs += rec.targets.size();
        CHECK(r.n_examples == static_cast<int64_t>(n_outputs));

        std::vector<double> y;
        for (const auto& rec : records)
            y.insert(y.end(), rec.targets.begin(), rec.targets.end());
        std::vector<double> y_hat = predict_all(model, records, 3);
        CHECK(r.mse == doctest::Approx(make_report(y, y_hat, {10}).mse));
        CHECK(r.acc_at_k.at(10) == acc_at_k(y, y_hat, 10));
    }
    SUBCASE("graph-level task reads graph_target and insists on it") {
        ModelConfig pool_cfg = cfg;
        pool_cfg.with_pool_head = true;
        pool_cfg.latent_rows = 2;
        pool_cfg.latent_dim = 4;
        pool_cfg.n_cross_layers = 1;
        pool_cfg.n_heads = 2;
        GnnModel model(pool_cfg, 6);

        auto labeled = records;
        for (size_t i = 0; i < labeled.size(); ++i)
            labeled[i].graph_target = 0.1 * static_cast<double>(i);
        MetricReport r = evaluate_model(model, labeled, {10}, 2);
        CHECK(r.n_examples == static_cast<int64_t>(labeled.size()));
        CHECK(r.range_max == doctest::Approx(0.4));

        labeled[2].graph_target.reset();
        CHECK_THROWS_AS(evaluate_model(model, labeled, {10}, 2), std::invalid_argument);
    }
}
