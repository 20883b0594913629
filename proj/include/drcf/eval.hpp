#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drcf/dataio.hpp"
#include "drcf/model.hpp"

namespace drcf {

/// A trained network together with what is needed to serve raw IDs.
struct TrainedModel {
    ModelParams params;
    Vocab users;
    Vocab items;
    /// Mean training rating, the cold-start answer.
    double global_mean = 0.0;
    /// L2 weight used in training (informational).
    double lambda = 0.0;

    bool operator==(const TrainedModel&) const = default;
};

/// sqrt(mean((pred - truth)^2)). Throws InvalidArgument on empty or mismatched input.
double rmse(std::span<const double> predictions, std::span<const double> truths);

/// Rating prediction for dense (user, item) indices on the original scale.
using Predictor = std::function<double(std::uint32_t user, std::uint32_t item)>;

/// RMSE of `predict` over every rating in `test`. Predictions may run on
/// `threads` workers; the squared errors are summed in test order.
double evaluate(const Predictor& predict, const Dataset& test, std::size_t threads = 1);

/// Network prediction when both IDs are known, otherwise the training mean
/// clamped to [0, k_max].
double predict_with_fallback(const TrainedModel& model, const std::string& user_raw, const std::string& item_raw);

Predictor model_predictor(const ModelParams& params);

struct ItemRating {
    std::uint32_t item = 0;
    double rating = 0.0;
};

/// Weighted Slope One over dense item indices.
class SlopeOneModel {
public:
    SlopeOneModel() = default;

    static SlopeOneModel fit(const Dataset& train);

    /// Mean of (r_a - r_b) over users who rated both; empty if none or a == b.
    std::optional<double> deviation(std::uint32_t a, std::uint32_t b) const;
    std::uint32_t count(std::uint32_t a, std::uint32_t b) const;
    std::optional<double> item_mean(std::uint32_t item) const;
    double global_mean() const { return global_mean_; }
    std::size_t item_count() const { return item_count_; }
    double k_max() const { return k_max_; }

    /// Count-weighted prediction of `target` from a user's own ratings; falls
    /// back to the item mean, then the global mean; clamped to [0, k_max].
    double predict(std::span<const ItemRating> user_ratings, std::uint32_t target) const;

private:
    std::size_t pair_index(std::uint32_t lo, std::uint32_t hi) const;

    std::size_t item_count_ = 0;
    double k_max_ = 5.0;
    double global_mean_ = 0.0;
    // Upper triangle (a < b): sum of (r_a - r_b) and co-rating count.
    std::vector<double> diff_sum_;
    std::vector<std::uint32_t> pair_count_;
    std::vector<double> item_sum_;
    std::vector<std::uint32_t> item_n_;
};

enum class Baseline { global_mean, item_mean, slopeone };

Baseline parse_baseline(std::string_view name);

/// Predictor for a baseline fitted on `train`. SlopeOne queries use each
/// user's training ratings as the profile.
Predictor make_baseline(Baseline kind, const Dataset& train);

}  // namespace drcf
