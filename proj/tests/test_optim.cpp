#include <doctest.h>

#include <cmath>
#include <numeric>

#include "drcf/error.hpp"
#include "drcf/optim.hpp"
#include "test_support.hpp"

using namespace drcf;

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

// f(x) = 0.5 * sum_i a_i x_i^2
ValueAndGradient diagonal_quadratic(std::vector<double> a) {
    return [a = std::move(a)](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            f += 0.5 * a[i] * x[i] * x[i];
            g[i] = a[i] * x[i];
        }
        return f;
    };
}

// Claims slope -1 everywhere but its value only rises away from the origin.
ValueAndGradient liar() {
    return [](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            f += std::abs(x[i]);
            g[i] = 1.0;
        }
        return 1.0 + f;
    };
}

}  // namespace

TEST_CASE("empty history gives steepest descent") {
    LbfgsState state(5);
    const std::vector<double> g = {1.5, -2.0, 0.25};
    CHECK(two_loop_direction(state, g) == std::vector<double>{-1.5, 2.0, -0.25});
    const std::vector<double> bad = {1.0, NAN};
    CHECK_THROWS_AS(two_loop_direction(state, bad), InvalidArgument);
}

TEST_CASE("one pair solves a 1-D quadratic") {
    // f = 1.5 x^2: from x = 2 to x = 1 gives s = -1, y = -3.
    LbfgsState state(3);
    CHECK(state.push({-1.0}, {-3.0}));
    const std::vector<double> g = {3.0};  // gradient at x = 1
    const auto d = two_loop_direction(state, g);
    CHECK(d[0] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("two-loop direction is a descent direction") {
    Rng rng = make_rng({21});
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 6);
        // y = A s with A = B B^T + 0.1 I keeps the curvature condition.
        std::vector<double> B(n * n);
        for (double& v : B) v = uniform(rng, -1, 1);
        LbfgsState state(1 + uniform_index(rng, 5));
        const std::size_t pairs = uniform_index(rng, 8);
        for (std::size_t k = 0; k < pairs; ++k) {
            std::vector<double> s(n), t(n, 0.0), y(n, 0.0);
            for (double& v : s) v = uniform(rng, -1, 1);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) t[i] += B[j * n + i] * s[j];
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) y[i] += B[i * n + j] * t[j];
                y[i] += 0.1 * s[i];
            }
            state.push(s, y);
        }
        CHECK(state.size() <= state.capacity());
        std::vector<double> g(n);
        for (double& v : g) v = uniform(rng, -1, 1);
        const auto d = two_loop_direction(state, g);
        CHECK(std::inner_product(d.begin(), d.end(), g.begin(), 0.0) < 0.0);
        for (const auto& p : state.pairs()) {
            CHECK(std::inner_product(p.s.begin(), p.s.end(), p.y.begin(), 0.0) >
                  curvature_floor_factor * norm(p.s) * norm(p.y));
        }
    }
}

TEST_CASE("history rejects flat or negative curvature and evicts oldest") {
    LbfgsState state(2);
    CHECK_FALSE(state.push({1.0, 0.0}, {0.0, 1.0}));
    CHECK_FALSE(state.push({1.0}, {-1.0}));
    CHECK(state.push({1.0}, {1.0}));
    CHECK(state.push({2.0}, {1.0}));
    CHECK(state.push({3.0}, {1.0}));
    CHECK(state.size() == 2);
    CHECK(state.pairs().front().s[0] == 2.0);
    LbfgsState none(0);
    CHECK_FALSE(none.push({1.0}, {1.0}));
}

TEST_CASE("wolfe search finds the exact minimizer of x^2") {
    const auto fg = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2.0 * x[0];
        return x[0] * x[0];
    };
    const std::vector<double> x0 = {1.0}, g0 = {2.0}, d = {-2.0};
    const LineSearchResult r = wolfe_line_search(fg, x0, 1.0, g0, d);
    CHECK(r.step == 0.5);
    CHECK(r.f_new == 0.0);
    CHECK(r.strong_wolfe);
    CHECK(r.f_new <= 1.0 + 1e-4 * r.step * -4.0);
    CHECK(std::abs(r.g_new[0] * d[0]) <= 0.9 * 4.0);

    const std::vector<double> up = {2.0};
    CHECK_THROWS_AS(wolfe_line_search(fg, x0, 1.0, g0, up), InvalidArgument);
}

TEST_CASE("wolfe search result satisfies Armijo on assorted functions") {
    // Rosenbrock in 2-D from random starts along steepest descent.
    const ValueAndGradient rosen = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    Rng rng = make_rng({22});
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x = {uniform(rng, -2, 2), uniform(rng, -1, 3)};
        std::vector<double> g(2);
        const double f0 = rosen(x, g);
        std::vector<double> d = {-g[0], -g[1]};
        const double slope = -(g[0] * g[0] + g[1] * g[1]);
        if (slope == 0.0) continue;
        LineSearchOptions opts;
        opts.initial_step = 1.0 / std::sqrt(-slope);
        const auto r = wolfe_line_search(rosen, x, f0, g, d, opts);
        CHECK(r.step > 0.0);
        CHECK(r.f_new <= f0 + 1e-4 * r.step * slope);
        CHECK(r.evals <= 20);
    }
}

TEST_CASE("wolfe search reports failure when no decrease exists") {
    const std::vector<double> x0 = {0.0}, g0 = {1.0}, d = {-1.0};
    CHECK_THROWS_WITH_AS(wolfe_line_search(liar(), x0, 1.0, g0, d), "line search failed", Error);
}

TEST_CASE("lbfgs reaches the minimum of half |x|^2 within three steps") {
    Rng rng = make_rng({23});
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(8);
        for (double& v : x) v = uniform(rng, -10, 10);
        LbfgsState state(10);
        const auto fg = diagonal_quadratic(std::vector<double>(8, 1.0));
        for (int step = 0; step < 3; ++step) lbfgs_step(state, x, fg);
        CHECK(norm(x) < 1e-8);
    }
}

TEST_CASE("lbfgs on the pure penalty shrinks |x| monotonically to zero") {
    // lambda * |x|^2 with lambda = 0.05.
    Rng rng = make_rng({24});
    std::vector<double> x(20);
    for (double& v : x) v = uniform(rng, -3, 3);
    for (std::size_t m : {std::size_t{0}, std::size_t{5}}) {
        std::vector<double> xi = x;
        LbfgsState state(m);
        const auto fg = diagonal_quadratic(std::vector<double>(20, 0.1));
        double prev = norm(xi);
        for (int step = 0; step < 5; ++step) {
            const StepResult r = lbfgs_step(state, xi, fg);
            CHECK(r.f_new <= r.f_old);
            CHECK(norm(xi) <= prev);
            prev = norm(xi);
            if (m == 0) CHECK(state.empty());
        }
        if (m > 0) CHECK(prev < 1e-8);
        if (m == 0) CHECK(prev < norm(x));
    }
}

TEST_CASE("lbfgs on an ill-conditioned quadratic") {
    Rng rng = make_rng({25});
    std::vector<double> a(20), x(20);
    for (double& v : a) v = uniform(rng, 0.01, 5.0);
    for (double& v : x) v = uniform(rng, -3, 3);
    for (std::size_t m : {std::size_t{0}, std::size_t{5}}) {
        std::vector<double> xi = x;
        LbfgsState state(m);
        const auto fg = diagonal_quadratic(a);
        std::vector<double> g(20);
        double f = fg(xi, g);
        const double f_start = f;
        for (int step = 0; step < 200 && f > 1e-20; ++step) {
            const StepResult r = lbfgs_step(state, xi, f, g, fg);
            CHECK(r.f_new < r.f_old);
        }
        // Plain gradient descent is slow at condition number 500; L-BFGS is not.
        CHECK(f < (m == 0 ? 1e-3 * f_start : 1e-12));
    }
}

TEST_CASE("failed line search resets history and leaves x alone") {
    LbfgsState state(4);
    state.push({1.0}, {1.0});
    std::vector<double> x = {0.0};
    const StepResult r = lbfgs_step(state, x, liar());
    CHECK(r.line_search_failed);
    CHECK(r.stalled);
    CHECK(x[0] == 0.0);
    CHECK(r.f_new == r.f_old);
    CHECK(state.empty());
}

TEST_CASE("epoch batching") {
    const auto one = epoch_batches(50, 50, 1, 0);
    REQUIRE(one.size() == 1);
    CHECK(one[0].size() == 50);
    CHECK(std::is_sorted(one[0].begin(), one[0].end()));
    CHECK(epoch_batches(50, 1000, 1, 3).size() == 1);

    const auto many = epoch_batches(23, 5, 9, 2);
    REQUIRE(many.size() == 5);
    CHECK(many.back().size() == 3);
    std::vector<std::size_t> all;
    for (const auto& b : many) all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 23; ++i) CHECK(all[i] == i);
    CHECK(many == epoch_batches(23, 5, 9, 2));
    CHECK_FALSE(many == epoch_batches(23, 5, 9, 3));
}

TEST_CASE("full-batch epochs never increase the objective and are reproducible") {
    const Dataset ds = testing::toy_dataset(50, 8, 8, 31);
    Hyperparams hp;
    hp.d = 4;
    hp.h = 6;
    hp.lambda = 1e-3;
    hp.batch_size = 1000;
    auto run = [&] {
        ModelParams p = init_params(ds.users.size(), ds.items.size(), ds.k_max, hp);
        LbfgsState state(hp.lbfgs_history);
        std::vector<double> objs;
        for (std::size_t e = 0; e < 30; ++e) objs.push_back(run_epoch(p, ds, hp, state, e));
        return std::make_pair(p, objs);
    };
    const auto [p1, o1] = run();
    const auto [p2, o2] = run();
    CHECK(p1 == p2);
    CHECK(o1 == o2);
    for (std::size_t e = 1; e < o1.size(); ++e) CHECK(o1[e] <= o1[e - 1]);
}

TEST_CASE("mini-batch epochs run and bias freezing holds biases at zero") {
    const Dataset ds = testing::toy_dataset(200, 12, 10, 32);
    Hyperparams hp;
    hp.d = 3;
    hp.h = 4;
    hp.batch_size = 30;
    hp.lbfgs_inner_iters = 2;
    hp.freeze_biases = true;
    ModelParams p = init_params(ds.users.size(), ds.items.size(), ds.k_max, hp);
    LbfgsState state(hp.lbfgs_history);
    const double first = run_epoch(p, ds, hp, state, 0);
    double last = first;
    for (std::size_t e = 1; e < 10; ++e) last = run_epoch(p, ds, hp, state, e);
    CHECK(std::isfinite(last));
    CHECK(last < first);
    for (double b : p.b_l1()) CHECK(b == 0.0);
    CHECK(p.b_l2() == 0.0);
}
