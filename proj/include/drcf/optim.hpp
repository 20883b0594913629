#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "drcf/dataio.hpp"
#include "drcf/grad.hpp"
#include "drcf/model.hpp"

namespace drcf {

/// Objective evaluator: returns f(x) and writes grad f(x) into `grad`
/// (already sized like x).
using ValueAndGradient = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct CurvaturePair {
    std::vector<double> s;  // x_{k+1} - x_k
    std::vector<double> y;  // g_{k+1} - g_k
    double rho = 0.0;       // 1 / (y.s)
};

/// Limited-memory history for the two-loop recursion.
class LbfgsState {
public:
    explicit LbfgsState(std::size_t history = 10) : capacity_(history) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }
    const std::deque<CurvaturePair>& pairs() const { return pairs_; }
    std::size_t iter() const { return iter_; }

    /// Stores (s, y) if y.s > 1e-10 * |s| * |y|, evicting the oldest pair at
    /// capacity. Returns whether the pair was kept.
    bool push(std::vector<double> s, std::vector<double> y);
    void reset() { pairs_.clear(); }
    void tick() { ++iter_; }

private:
    std::size_t capacity_;
    std::deque<CurvaturePair> pairs_;
    std::size_t iter_ = 0;
};

/// Relative curvature floor used by LbfgsState::push.
inline constexpr double curvature_floor_factor = 1e-10;

/// -H g from the two-loop recursion, H0 = gamma I with
/// gamma = s.y / y.y of the newest pair (1 when the history is empty).
std::vector<double> two_loop_direction(const LbfgsState& state, std::span<const double> g);

struct LineSearchOptions {
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_evals = 20;
    double initial_step = 1.0;
};

struct LineSearchResult {
    double step = 0.0;
    double f_new = 0.0;
    std::vector<double> g_new;
    std::size_t evals = 0;
    /// False when only the Armijo condition could be met within max_evals.
    bool strong_wolfe = false;
};

/// Strong-Wolfe line search (bracketing, then zoom with cubic interpolation).
/// Throws InvalidArgument for a non-descent direction and Error("line search
/// failed") when no Armijo step turns up within max_evals.
LineSearchResult wolfe_line_search(const ValueAndGradient& fg, std::span<const double> x0, double f0,
                                   std::span<const double> g0, std::span<const double> direction,
                                   const LineSearchOptions& options = {});

struct StepResult {
    double f_old = 0.0;
    double f_new = 0.0;
    double step = 0.0;
    bool line_search_failed = false;
    /// True when the fallback could not find any decrease and x was left alone.
    bool stalled = false;
};

/// One L-BFGS iteration on `x` in place.
///
/// On line-search failure the history is dropped and a halving backtrack
/// along -g is tried (up to 30 halvings); if that also fails x is unchanged
/// and f_new == f_old.
StepResult lbfgs_step(LbfgsState& state, std::vector<double>& x, const ValueAndGradient& fg,
                      const LineSearchOptions& options = {});

/// Same step when f and g at x are already known; updates them to the values
/// at the new x.
StepResult lbfgs_step(LbfgsState& state, std::vector<double>& x, double& f, std::vector<double>& g,
                      const ValueAndGradient& fg, const LineSearchOptions& options = {});

/// Objective and gradient of `batch` as a function of the flat parameter
/// vector of a model shaped like `like`. Bias gradients are zeroed when
/// hp.freeze_biases is set. `batch` must outlive the returned callable.
ValueAndGradient batch_objective(const ModelParams& like, const Batch& batch, double lambda, const Hyperparams& hp);

/// lbfgs_step on the model objective over one batch.
StepResult lbfgs_step(LbfgsState& state, ModelParams& params, const Batch& batch, double lambda,
                      const Hyperparams& hp);

/// One pass of mini-batched L-BFGS over `train`: seeded shuffle, batches of
/// hp.batch_size, hp.lbfgs_inner_iters steps per batch. Returns the mean of the
/// per-batch final objectives.
double run_epoch(ModelParams& params, const Dataset& train, const Hyperparams& hp, LbfgsState& state,
                 std::size_t epoch);

/// Batch membership for one epoch. Positions inside each batch are sorted so
/// a batch's objective depends only on which ratings it holds.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch);

}  // namespace drcf
