#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drcf/dataio.hpp"
#include "drcf/model.hpp"

namespace drcf {

/// A parameter-shaped vector (values or gradient) with its layout.
struct FlatView {
    std::vector<double> values;
    ParamLayout layout;
};

FlatView flatten(const ModelParams& params);
/// Inverse of flatten. Throws ShapeError if the value count does not match the layout.
ModelParams unflatten(const FlatView& flat, double k_max);

struct Example {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    double target = 0.0;  // rating / k_max
};

struct Batch {
    std::vector<Example> examples;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

/// Batch over all ratings of `data`, or over `positions` when given.
Batch make_batch(const Dataset& data);
Batch make_batch(const Dataset& data, std::span<const std::size_t> positions);

/// Mean half squared error of the sigmoid output against normalized targets
/// plus lambda * (sum of squared non-bias weights).
double objective(const ModelParams& params, const Batch& batch, double lambda, std::size_t threads = 1);

/// Backprop gradient of `objective`.
FlatView gradient(const ModelParams& params, const Batch& batch, double lambda, std::size_t threads = 1);

/// Objective and gradient from one pass over the batch. Writes the gradient
/// into `grad` (resized to the parameter count) and returns the objective.
///
/// The batch is reduced in fixed-size chunks combined in index order, so the
/// result is bitwise identical for every thread count.
double objective_and_gradient(const ModelParams& params, const Batch& batch, double lambda,
                              std::vector<double>& grad, std::size_t threads = 1);

/// Central finite differences of `objective`, one coordinate at a time.
/// Meant for checking `gradient`; cost is two objectives per parameter.
FlatView fd_gradient(const ModelParams& params, const Batch& batch, double lambda, double epsilon);

}  // namespace drcf
