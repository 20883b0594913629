#include "drcf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "drcf/error.hpp"
#include "drcf/parallel.hpp"

namespace drcf {

double rmse(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size()) throw InvalidArgument("rmse: length mismatch");
    if (predictions.empty()) throw InvalidArgument("rmse: no values");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - truths[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double evaluate(const Predictor& predict, const Dataset& test, std::size_t threads) {
    if (test.empty()) throw InvalidArgument("evaluate: empty test set");
    const std::size_t n = test.size();
    std::vector<double> preds(n);
    std::vector<double> truths(n);
    constexpr std::size_t block = 4096;
    parallel_tasks((n + block - 1) / block, threads, [&](std::size_t t) {
        const std::size_t end = std::min(n, (t + 1) * block);
        for (std::size_t i = t * block; i < end; ++i) {
            const auto& r = test.ratings[i];
            preds[i] = predict(r.user, r.item);
            truths[i] = r.rating;
        }
    });
    return rmse(preds, truths);
}

Predictor model_predictor(const ModelParams& params) {
    return [&params](std::uint32_t user, std::uint32_t item) {
        if (user >= params.shape().users || item >= params.shape().items) {
            throw InvalidArgument("prediction index outside model vocab");
        }
        std::vector<double> a1(params.shape().h);
        return params.k_max() * forward_into(params, user, item, a1);
    };
}

double predict_with_fallback(const TrainedModel& model, const std::string& user_raw, const std::string& item_raw) {
    const auto u = model.users.find(user_raw);
    const auto i = model.items.find(item_raw);
    if (u && i) return predict_rating(model.params, *u, *i);
    return std::clamp(model.global_mean, 0.0, model.params.k_max());
}

std::size_t SlopeOneModel::pair_index(std::uint32_t lo, std::uint32_t hi) const {
    // Row-major upper triangle without the diagonal.
    const std::size_t n = item_count_;
    const std::size_t a = lo;
    return a * (2 * n - a - 1) / 2 + (hi - a - 1);
}

SlopeOneModel SlopeOneModel::fit(const Dataset& train) {
    if (train.empty()) throw InvalidArgument("slope one: empty training set");
    SlopeOneModel m;
    m.item_count_ = train.items.size();
    m.k_max_ = train.k_max;
    const std::size_t n = m.item_count_;
    m.diff_sum_.assign(n * (n - 1) / 2, 0.0);
    m.pair_count_.assign(n * (n - 1) / 2, 0);
    m.item_sum_.assign(n, 0.0);
    m.item_n_.assign(n, 0);

    std::vector<std::vector<ItemRating>> by_user(train.users.size());
    double total = 0.0;
    for (const auto& r : train.ratings) {
        by_user.at(r.user).push_back({r.item, r.rating});
        m.item_sum_.at(r.item) += r.rating;
        ++m.item_n_[r.item];
        total += r.rating;
    }
    m.global_mean_ = total / static_cast<double>(train.size());

    for (auto& profile : by_user) {
        std::sort(profile.begin(), profile.end(), [](const ItemRating& x, const ItemRating& y) { return x.item < y.item; });
        for (std::size_t x = 0; x < profile.size(); ++x) {
            for (std::size_t y = x + 1; y < profile.size(); ++y) {
                const auto& lo = profile[x];
                const auto& hi = profile[y];
                if (lo.item == hi.item) continue;
                const std::size_t k = m.pair_index(lo.item, hi.item);
                m.diff_sum_[k] += lo.rating - hi.rating;
                ++m.pair_count_[k];
            }
        }
    }
    return m;
}

std::uint32_t SlopeOneModel::count(std::uint32_t a, std::uint32_t b) const {
    if (a == b || a >= item_count_ || b >= item_count_) return 0;
    return pair_count_[pair_index(std::min(a, b), std::max(a, b))];
}

std::optional<double> SlopeOneModel::deviation(std::uint32_t a, std::uint32_t b) const {
    const std::uint32_t c = count(a, b);
    if (c == 0) return std::nullopt;
    const double dev = diff_sum_[pair_index(std::min(a, b), std::max(a, b))] / c;
    return a < b ? dev : -dev;
}

std::optional<double> SlopeOneModel::item_mean(std::uint32_t item) const {
    if (item >= item_count_ || item_n_[item] == 0) return std::nullopt;
    return item_sum_[item] / item_n_[item];
}

double SlopeOneModel::predict(std::span<const ItemRating> user_ratings, std::uint32_t target) const {
    double num = 0.0;
    double den = 0.0;
    for (const auto& r : user_ratings) {
        const std::uint32_t c = count(target, r.item);
        if (c == 0) continue;
        num += c * (r.rating + *deviation(target, r.item));
        den += c;
    }
    double pred = global_mean_;
    if (den > 0.0) {
        pred = num / den;
    } else if (const auto mean = item_mean(target)) {
        pred = *mean;
    }
    return std::clamp(pred, 0.0, k_max_);
}

Baseline parse_baseline(std::string_view name) {
    if (name == "global-mean") return Baseline::global_mean;
    if (name == "item-mean") return Baseline::item_mean;
    if (name == "slopeone") return Baseline::slopeone;
    throw InvalidArgument("unknown baseline '" + std::string(name) + "'");
}

Predictor make_baseline(Baseline kind, const Dataset& train) {
    if (train.empty()) throw InvalidArgument("baseline: empty training set");
    const double k_max = train.k_max;
    const double mean = std::clamp(train.mean_rating(), 0.0, k_max);
    switch (kind) {
        case Baseline::global_mean:
            return [mean](std::uint32_t, std::uint32_t) { return mean; };
        case Baseline::item_mean: {
            auto means = std::make_shared<std::vector<double>>(train.items.size(), 0.0);
            std::vector<std::size_t> counts(train.items.size(), 0);
            for (const auto& r : train.ratings) {
                (*means)[r.item] += r.rating;
                ++counts[r.item];
            }
            for (std::size_t i = 0; i < means->size(); ++i) {
                (*means)[i] = counts[i] ? std::clamp((*means)[i] / counts[i], 0.0, k_max) : mean;
            }
            return [means, mean](std::uint32_t, std::uint32_t item) {
                return item < means->size() ? (*means)[item] : mean;
            };
        }
        case Baseline::slopeone: {
            auto model = std::make_shared<SlopeOneModel>(SlopeOneModel::fit(train));
            auto profiles = std::make_shared<std::vector<std::vector<ItemRating>>>(train.users.size());
            for (const auto& r : train.ratings) (*profiles)[r.user].push_back({r.item, r.rating});
            return [model, profiles](std::uint32_t user, std::uint32_t item) {
                if (user >= profiles->size()) return model->predict({}, item);
                return model->predict((*profiles)[user], item);
            };
        }
    }
    throw InvalidArgument("unknown baseline");
}

}  // namespace drcf
