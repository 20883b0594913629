#include "drcf/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "drcf/error.hpp"
#include "drcf/random.hpp"

namespace drcf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Minimizer of the cubic matching phi and phi' at a and b; NaN when the fit
// has no interior minimum.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return b - (b - a) * (db + d2 - d1) / denom;
}

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;  // phi'(alpha)
    std::vector<double> g;
};

}  // namespace

bool LbfgsState::push(std::vector<double> s, std::vector<double> y) {
    const double sy = dot(s, y);
    const double floor = curvature_floor_factor * norm(s) * norm(y);
    if (!(sy > floor) || capacity_ == 0) return false;
    if (pairs_.size() == capacity_) pairs_.pop_front();
    pairs_.push_back({std::move(s), std::move(y), 1.0 / sy});
    return true;
}

std::vector<double> two_loop_direction(const LbfgsState& state, std::span<const double> g) {
    if (!all_finite(g)) throw InvalidArgument("non-finite gradient");
    std::vector<double> q(g.begin(), g.end());
    const auto& pairs = state.pairs();
    std::vector<double> alpha(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
        const auto& p = pairs[k];
        alpha[k] = p.rho * dot(p.s, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * p.y[i];
    }
    double gamma = 1.0;
    if (!pairs.empty()) {
        const auto& last = pairs.back();
        gamma = dot(last.s, last.y) / dot(last.y, last.y);
    }
    for (double& v : q) v *= gamma;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& p = pairs[k];
        const double beta = p.rho * dot(p.y, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * p.s[i];
    }
    for (double& v : q) v = -v;
    return q;
}

LineSearchResult wolfe_line_search(const ValueAndGradient& fg, std::span<const double> x0, double f0,
                                   std::span<const double> g0, std::span<const double> direction,
                                   const LineSearchOptions& options) {
    const double slope0 = dot(g0, direction);
    if (!(slope0 < 0.0)) throw InvalidArgument("line search needs a descent direction");

    std::vector<double> x(x0.size());
    std::size_t evals = 0;
    auto probe = [&](double alpha) {
        Probe p;
        p.alpha = alpha;
        p.g.assign(x0.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + alpha * direction[i];
        p.f = fg(x, p.g);
        p.slope = dot(p.g, direction);
        if (!std::isfinite(p.f) || !std::isfinite(p.slope)) {
            p.f = std::numeric_limits<double>::infinity();
            p.slope = std::numeric_limits<double>::quiet_NaN();
        }
        ++evals;
        return p;
    };
    auto armijo = [&](const Probe& p) { return p.f <= f0 + options.c1 * p.alpha * slope0; };
    auto curvature = [&](const Probe& p) { return std::abs(p.slope) <= -options.c2 * slope0; };

    std::optional<Probe> best;  // lowest Armijo-satisfying point so far
    auto remember = [&](const Probe& p) {
        if (armijo(p) && (!best || p.f < best->f)) best = p;
    };
    auto finish = [&](Probe p, bool strong) {
        return LineSearchResult{p.alpha, p.f, std::move(p.g), evals, strong};
    };

    // Zoom on the bracket [lo, hi]; lo always satisfies Armijo with lo.f < hi.f.
    auto zoom = [&](Probe lo, Probe hi) -> std::optional<LineSearchResult> {
        while (evals < options.max_evals) {
            const double width = hi.alpha - lo.alpha;
            if (std::abs(width) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
            double trial = std::numeric_limits<double>::quiet_NaN();
            if (std::isfinite(hi.f) && std::isfinite(hi.slope)) {
                trial = cubic_minimizer(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope);
            }
            const double a = std::min(lo.alpha, hi.alpha);
            const double b = std::max(lo.alpha, hi.alpha);
            const double margin = 0.1 * (b - a);
            if (!std::isfinite(trial) || trial < a + margin || trial > b - margin) trial = 0.5 * (a + b);

            Probe p = probe(trial);
            remember(p);
            if (!armijo(p) || p.f >= lo.f) {
                hi = std::move(p);
            } else {
                if (curvature(p)) return finish(std::move(p), true);
                if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(p);
            }
        }
        return std::nullopt;
    };

    Probe prev{0.0, f0, slope0, std::vector<double>(g0.begin(), g0.end())};
    double alpha = options.initial_step;
    std::optional<LineSearchResult> done;
    while (evals < options.max_evals && !done) {
        Probe p = probe(alpha);
        remember(p);
        if (!armijo(p) || (evals > 1 && p.f >= prev.f)) {
            done = zoom(prev, std::move(p));
            break;
        }
        if (curvature(p)) return finish(std::move(p), true);
        if (p.slope >= 0.0) {
            done = zoom(std::move(p), prev);
            break;
        }
        prev = std::move(p);
        alpha *= 2.0;
    }
    if (done) return std::move(*done);
    if (best) return finish(std::move(*best), false);
    throw Error("line search failed");
}

StepResult lbfgs_step(LbfgsState& state, std::vector<double>& x, double& f, std::vector<double>& g,
                      const ValueAndGradient& fg, const LineSearchOptions& options) {
    StepResult result;
    result.f_old = f;
    result.f_new = f;
    state.tick();
    if (norm(g) == 0.0) return result;

    std::vector<double> direction = two_loop_direction(state, g);
    if (!(dot(direction, g) < 0.0)) {
        state.reset();
        direction = two_loop_direction(state, g);
    }

    LineSearchOptions opts = options;
    if (state.empty()) opts.initial_step = options.initial_step / norm(direction);

    try {
        LineSearchResult ls = wolfe_line_search(fg, x, f, g, direction, opts);
        std::vector<double> s(x.size());
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            s[i] = ls.step * direction[i];
            x[i] += s[i];
            y[i] = ls.g_new[i] - g[i];
        }
        state.push(std::move(s), std::move(y));
        f = ls.f_new;
        g = std::move(ls.g_new);
        result.f_new = f;
        result.step = ls.step;
        return result;
    } catch (const InvalidArgument&) {
        throw;
    } catch (const Error&) {
        result.line_search_failed = true;
    }

    // Fallback: forget curvature and backtrack along -g.
    state.reset();
    const double gg = dot(g, g);
    std::vector<double> trial(x.size());
    std::vector<double> trial_g(x.size());
    double alpha = 1.0;
    for (int halvings = 0; halvings <= 30; ++halvings, alpha *= 0.5) {
        for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - alpha * g[i];
        const double ft = fg(trial, trial_g);
        if (std::isfinite(ft) && ft <= f - options.c1 * alpha * gg) {
            x.swap(trial);
            g.swap(trial_g);
            f = ft;
            result.f_new = f;
            result.step = alpha;
            return result;
        }
    }
    result.stalled = true;
    return result;
}

StepResult lbfgs_step(LbfgsState& state, std::vector<double>& x, const ValueAndGradient& fg,
                      const LineSearchOptions& options) {
    std::vector<double> g(x.size());
    double f = fg(x, g);
    return lbfgs_step(state, x, f, g, fg, options);
}

ValueAndGradient batch_objective(const ModelParams& like, const Batch& batch, double lambda, const Hyperparams& hp) {
    auto scratch = std::make_shared<ModelParams>(like);
    auto grad = std::make_shared<std::vector<double>>();
    const bool freeze = hp.freeze_biases;
    const std::size_t threads = hp.threads;
    return [scratch, grad, &batch, lambda, freeze, threads](std::span<const double> x, std::span<double> out) {
        std::copy(x.begin(), x.end(), scratch->values().begin());
        const double f = objective_and_gradient(*scratch, batch, lambda, *grad, threads);
        std::copy(grad->begin(), grad->end(), out.begin());
        if (freeze) {
            for (Group gr : {Group::b_l1, Group::b_l2}) {
                const auto& slot = scratch->layout().slot(gr);
                std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(slot.offset), slot.size(), 0.0);
            }
        }
        return f;
    };
}

StepResult lbfgs_step(LbfgsState& state, ModelParams& params, const Batch& batch, double lambda,
                      const Hyperparams& hp) {
    const auto fg = batch_objective(params, batch, lambda, hp);
    std::vector<double> x(params.values().begin(), params.values().end());
    StepResult r = lbfgs_step(state, x, fg);
    std::copy(x.begin(), x.end(), params.values().begin());
    return r;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch) {
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng({seed, 0xe70c, epoch});
    shuffle(std::span<std::size_t>(order), rng);

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(b.begin(), b.end());
        batches.push_back(std::move(b));
    }
    return batches;
}

double run_epoch(ModelParams& params, const Dataset& train, const Hyperparams& hp, LbfgsState& state,
                 std::size_t epoch) {
    if (train.empty()) throw InvalidArgument("empty training set");
    hp.validate();
    const auto batches = epoch_batches(train.size(), hp.batch_size, hp.seed, epoch);
    std::vector<double> x(params.values().begin(), params.values().end());
    std::vector<double> g(x.size());
    double total = 0.0;
    for (const auto& positions : batches) {
        const Batch batch = make_batch(train, positions);
        const auto fg = batch_objective(params, batch, hp.lambda, hp);
        double f = fg(x, g);
        for (std::size_t it = 0; it < hp.lbfgs_inner_iters; ++it) lbfgs_step(state, x, f, g, fg);
        total += f;
    }
    std::copy(x.begin(), x.end(), params.values().begin());
    return total / static_cast<double>(batches.size());
}

}  // namespace drcf
