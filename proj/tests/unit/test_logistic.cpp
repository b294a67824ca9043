#include <gtest/gtest.h>

#include "healthprompt/ml/logistic.hpp"
#include "healthprompt/ml/mlp.hpp"
#include "support/oracles.hpp"

using namespace healthprompt;
using namespace healthprompt::ml;

namespace {

struct Problem {
    Matrix x;
    std::vector<int> y;
};

Problem noisy_linear(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    Problem p;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        double z = 0.3;
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = normal01(rng);
            z += (j % 2 ? -1.0 : 1.5) * row[j];
        }
        p.x.push_back(std::move(row));
        p.y.push_back(uniform01(rng) < sigmoid(z) ? 1 : 0);
    }
    return p;
}

}  // namespace

TEST(Sigmoid, StableAtExtremes) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_GT(sigmoid(800.0), 0.999);
    EXPECT_LT(sigmoid(-800.0), 1e-300);
    EXPECT_TRUE(std::isfinite(softplus(800.0)));
    EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
}

// Analytic gradient against central differences at 50 random points, with
// and without the L2 term.
TEST(LogisticObjective, GradientMatchesFiniteDifferences) {
    Rng rng = make_rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto prob = noisy_linear(30, 4, static_cast<std::uint64_t>(trial));
        LogisticParams lp;
        lp.C = uniform_real(rng, 0.05, 10.0);
        lp.penalty = trial % 2 ? Penalty::l2 : Penalty::none;
        const auto obj = LogisticObjective::make(prob.x, prob.y, lp);
        std::vector<double> theta(5);
        for (auto& v : theta) v = uniform_real(rng, -3.0, 3.0);
        const auto g = obj.gradient(theta);
        const auto fd = test_support::central_difference([&](const std::vector<double>& p) { return obj.loss(p); }, theta);
        for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(g[j] - fd[j]));
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(LogisticRegression, GradientDescentNeverIncreasesLoss) {
    const auto prob = noisy_linear(200, 5, 1);
    LogisticParams p;
    p.max_iter = 300;
    LogisticRegression lr;
    lr.fit(prob.x, prob.y, p);
    const auto& h = lr.loss_history();
    ASSERT_GT(h.size(), 2u);
    for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-15);
}

TEST(LogisticRegression, ConvergesToStationaryPoint) {
    const auto prob = noisy_linear(300, 3, 2);
    for (auto solver : {LogisticSolver::gd, LogisticSolver::nesterov}) {
        LogisticParams p;
        p.solver = solver;
        p.max_iter = 20000;
        p.tol = 1e-7;
        LogisticRegression lr;
        lr.fit(prob.x, prob.y, p);
        EXPECT_TRUE(lr.converged());
        std::vector<double> theta(lr.coef());
        theta.push_back(lr.intercept());
        for (double g : LogisticObjective::make(prob.x, prob.y, p).gradient(theta)) EXPECT_LT(std::abs(g), 1e-6);
        EXPECT_GT(lr.coef()[0], 0.5);  // recovers the sign of the generating weights
        EXPECT_LT(lr.coef()[1], -0.3);
    }
}

TEST(LogisticRegression, NesterovNeedsFewerIterations) {
    const auto prob = noisy_linear(300, 6, 3);
    LogisticParams p;
    p.max_iter = 50000;
    LogisticRegression gd, nag;
    gd.fit(prob.x, prob.y, p);
    p.solver = LogisticSolver::nesterov;
    nag.fit(prob.x, prob.y, p);
    ASSERT_TRUE(gd.converged());
    ASSERT_TRUE(nag.converged());
    EXPECT_LT(nag.n_iter(), gd.n_iter());
}

TEST(LogisticRegression, IterationCapReportsNotConverged) {
    const auto prob = noisy_linear(100, 3, 4);
    LogisticParams p;
    p.max_iter = 3;
    LogisticRegression lr;
    lr.fit(prob.x, prob.y, p);
    EXPECT_FALSE(lr.converged());
    EXPECT_EQ(lr.n_iter(), 3u);
}

TEST(LogisticRegression, InvalidInputs) {
    LogisticRegression lr;
    LogisticParams p;
    p.C = 0.0;
    EXPECT_THROW(lr.fit({{1.0}}, std::vector<int>{1}, p), ValidationError);
    EXPECT_THROW(lr.fit({}, std::vector<int>{}, {}), ValidationError);
    const LogisticRegression fixed({1.0, 2.0}, 0.0);
    EXPECT_THROW(fixed.predict(std::vector<double>{1.0}), ValidationError);
}

TEST(LogisticRegression, JsonRoundTrip) {
    const auto prob = noisy_linear(50, 3, 5);
    LogisticRegression lr;
    lr.fit(prob.x, prob.y, {});
    const auto back = LogisticRegression::from_json(lr.to_json());
    for (const auto& r : prob.x) EXPECT_EQ(back.predict_proba(r), lr.predict_proba(r));
}

TEST(Mlp, LearnsLinearBoundaryDeterministically) {
    const auto train = noisy_linear(400, 4, 6);
    const auto test = noisy_linear(400, 4, 7);
    MlpParams p;
    p.hidden_layer_sizes = {16};
    p.max_iter = 100;
    Mlp a, b;
    a.fit(train.x, train.y, p, 9);
    b.fit(train.x, train.y, p, 9);
    EXPECT_EQ(a.to_json(), b.to_json());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < test.x.size(); ++i) hit += a.predict(test.x[i]) == test.y[i];
    EXPECT_GT(static_cast<double>(hit) / 400.0, 0.75);
    const auto back = Mlp::from_json(a.to_json());
    for (const auto& r : test.x) EXPECT_EQ(back.predict_proba(r), a.predict_proba(r));
}

TEST(Mlp, SgdLossDecreasesOverall) {
    const auto train = noisy_linear(300, 3, 8);
    MlpParams p;
    p.solver = MlpSolver::sgd;
    p.learning_rate_init = 0.05;
    p.hidden_layer_sizes = {8, 4};
    p.activation = Activation::tanh;
    p.max_iter = 60;
    Mlp m;
    m.fit(train.x, train.y, p, 1);
    ASSERT_GE(m.loss_history().size(), 2u);
    EXPECT_LT(m.loss_history().back(), m.loss_history().front());
}
