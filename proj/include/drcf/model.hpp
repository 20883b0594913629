#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace drcf {

/// Training and architecture knobs. Defaults follow the reference DR setup
/// (24-dim embeddings, 40 hidden units); the optimizer defaults are ours.
struct Hyperparams {
    std::size_t d = 24;
    std::size_t h = 40;
    double lambda = 1e-4;
    /// Half-width of the uniform init. Unset means 1/sqrt(fan-in) per tensor.
    std::optional<double> init_scale;
    std::uint64_t seed = 42;
    std::size_t batch_size = 10000;
    std::size_t epochs = 50;
    std::size_t lbfgs_history = 10;
    std::size_t lbfgs_inner_iters = 4;
    /// Epochs without test-RMSE improvement before training stops.
    std::size_t patience = 5;
    /// Keep b_l1 and b_l2 pinned at zero (plain linear pre-activations).
    bool freeze_biases = false;
    /// Worker threads for gradient/eval reductions. Results do not depend on it.
    std::size_t threads = 1;

    /// Throws InvalidArgument naming the first violated bound.
    void validate() const;
};

/// Tensor sizes of a model.
struct ModelShape {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t d = 0;
    std::size_t h = 0;

    std::size_t input_width() const { return 2 * d; }
    bool operator==(const ModelShape&) const = default;
};

/// Parameter groups in storage order.
enum class Group : std::size_t { user_emb = 0, item_emb, w_l1, b_l1, w_l2, b_l2 };
inline constexpr std::size_t group_count = 6;

struct GroupSlot {
    const char* name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
    bool regularized;

    std::size_t size() const { return rows * cols; }
};

/// Offsets of every tensor inside the flat parameter vector.
///
/// Order: user table, item table, W_l1, b_l1, w_l2, b_l2, each row-major.
/// Embedding tables are stored one entity per row (users x d), so an
/// embedding is a contiguous run of d values.
class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(const ModelShape& shape);

    const ModelShape& shape() const { return shape_; }
    const GroupSlot& slot(Group g) const { return slots_[static_cast<std::size_t>(g)]; }
    std::span<const GroupSlot, group_count> slots() const { return slots_; }
    std::size_t total() const { return total_; }

    /// False only for bias coordinates, which stay out of the L2 penalty.
    bool is_regularized(std::size_t coord) const;

    bool operator==(const ParamLayout& other) const { return shape_ == other.shape_; }

private:
    ModelShape shape_;
    GroupSlot slots_[group_count]{};
    std::size_t total_ = 0;
};

/// Every learnable tensor of the model in one contiguous buffer.
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(const ModelShape& shape, double k_max);
    ModelParams(const ModelShape& shape, double k_max, std::vector<double> values);

    const ModelShape& shape() const { return layout_.shape(); }
    const ParamLayout& layout() const { return layout_; }
    double k_max() const { return k_max_; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    std::span<const double> group(Group g) const;
    std::span<double> group(Group g);

    std::span<const double> user_embedding(std::size_t user) const;
    std::span<double> user_embedding(std::size_t user);
    std::span<const double> item_embedding(std::size_t item) const;
    std::span<double> item_embedding(std::size_t item);

    /// Row `r` of W_l1 (length 2d).
    std::span<const double> w_l1_row(std::size_t r) const;
    std::span<const double> b_l1() const { return group(Group::b_l1); }
    std::span<const double> w_l2() const { return group(Group::w_l2); }
    double b_l2() const { return group(Group::b_l2)[0]; }

    bool operator==(const ModelParams& other) const = default;

private:
    ParamLayout layout_;
    double k_max_ = 5.0;
    std::vector<double> values_;
};

/// Uniform(-s, s) weights, zero biases, deterministic in hp.seed.
ModelParams init_params(std::size_t user_count, std::size_t item_count, double k_max, const Hyperparams& hp);

/// Intermediate values of one forward pass.
struct ForwardTrace {
    std::vector<double> x;   // [user embedding ; item embedding]
    std::vector<double> z1;  // hidden pre-activation
    std::vector<double> a1;  // tanh(z1)
    double z2 = 0.0;
    double p = 0.0;          // sigmoid(z2)
};

/// [user embedding ; item embedding]. Throws InvalidArgument on bad indices.
std::vector<double> lookup_concat(const ModelParams& params, std::size_t user, std::size_t item);

ForwardTrace forward(const ModelParams& params, std::size_t user, std::size_t item);

/// Allocation-free forward pass into caller buffers (size h each); returns p.
/// Indices are not checked.
double forward_into(const ModelParams& params, std::size_t user, std::size_t item,
                    std::span<double> a1);

/// k_max * p, always inside (0, k_max) up to rounding at the ends.
double predict_rating(const ModelParams& params, std::size_t user, std::size_t item);

inline double sigmoid(double z) {
    // Split on sign so exp never overflows.
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace drcf
