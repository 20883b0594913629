#include "drcf/model.hpp"

#include <cmath>
#include <string>

#include "drcf/error.hpp"
#include "drcf/random.hpp"

namespace drcf {

void Hyperparams::validate() const {
    if (d < 1) throw InvalidArgument("d must be >= 1");
    if (h < 1) throw InvalidArgument("hidden width must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
    if (init_scale && !(*init_scale > 0.0 && std::isfinite(*init_scale))) {
        throw InvalidArgument("init_scale must be > 0");
    }
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (lbfgs_history < 1) throw InvalidArgument("lbfgs_history must be >= 1");
    if (lbfgs_inner_iters < 1) throw InvalidArgument("lbfgs_inner_iters must be >= 1");
    if (patience < 1) throw InvalidArgument("patience must be >= 1");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

ParamLayout::ParamLayout(const ModelShape& shape) : shape_(shape) {
    const std::size_t rows[group_count] = {shape.users, shape.items, shape.h, 1, 1, 1};
    const std::size_t cols[group_count] = {shape.d, shape.d, 2 * shape.d, shape.h, shape.h, 1};
    const char* names[group_count] = {"W_user", "W_item", "W_l1", "b_l1", "w_l2", "b_l2"};
    const bool reg[group_count] = {true, true, true, false, true, false};
    std::size_t offset = 0;
    for (std::size_t g = 0; g < group_count; ++g) {
        slots_[g] = {names[g], offset, rows[g], cols[g], reg[g]};
        offset += rows[g] * cols[g];
    }
    total_ = offset;
}

bool ParamLayout::is_regularized(std::size_t coord) const {
    for (const auto& s : slots_) {
        if (coord >= s.offset && coord < s.offset + s.size()) return s.regularized;
    }
    throw InvalidArgument("coordinate " + std::to_string(coord) + " outside parameter vector");
}

ModelParams::ModelParams(const ModelShape& shape, double k_max)
    : ModelParams(shape, k_max, std::vector<double>(ParamLayout(shape).total(), 0.0)) {}

ModelParams::ModelParams(const ModelShape& shape, double k_max, std::vector<double> values)
    : layout_(shape), k_max_(k_max), values_(std::move(values)) {
    if (shape.d < 1 || shape.h < 1) throw InvalidArgument("model needs d >= 1 and h >= 1");
    if (!(k_max > 0.0) || !std::isfinite(k_max)) throw InvalidArgument("k_max must be positive");
    if (values_.size() != layout_.total()) {
        throw ShapeError("expected " + std::to_string(layout_.total()) + " parameters, got " +
                         std::to_string(values_.size()));
    }
}

std::span<const double> ModelParams::group(Group g) const {
    const auto& s = layout_.slot(g);
    return std::span<const double>(values_).subspan(s.offset, s.size());
}

std::span<double> ModelParams::group(Group g) {
    const auto& s = layout_.slot(g);
    return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ModelParams::user_embedding(std::size_t user) const {
    if (user >= shape().users) throw InvalidArgument("user index " + std::to_string(user) + " out of range");
    return group(Group::user_emb).subspan(user * shape().d, shape().d);
}

std::span<double> ModelParams::user_embedding(std::size_t user) {
    if (user >= shape().users) throw InvalidArgument("user index " + std::to_string(user) + " out of range");
    return group(Group::user_emb).subspan(user * shape().d, shape().d);
}

std::span<const double> ModelParams::item_embedding(std::size_t item) const {
    if (item >= shape().items) throw InvalidArgument("item index " + std::to_string(item) + " out of range");
    return group(Group::item_emb).subspan(item * shape().d, shape().d);
}

std::span<double> ModelParams::item_embedding(std::size_t item) {
    if (item >= shape().items) throw InvalidArgument("item index " + std::to_string(item) + " out of range");
    return group(Group::item_emb).subspan(item * shape().d, shape().d);
}

std::span<const double> ModelParams::w_l1_row(std::size_t r) const {
    const std::size_t w = shape().input_width();
    return group(Group::w_l1).subspan(r * w, w);
}

ModelParams init_params(std::size_t user_count, std::size_t item_count, double k_max, const Hyperparams& hp) {
    hp.validate();
    if (user_count < 1 || item_count < 1) throw InvalidArgument("need at least one user and one item");
    ModelParams params({user_count, item_count, hp.d, hp.h}, k_max);

    // Fan-in of whatever consumes each tensor's output: an embedding entry
    // feeds one hidden input slot, W_l1 sees 2d inputs, w_l2 sees h.
    auto scale_for = [&](Group g) {
        if (hp.init_scale) return *hp.init_scale;
        switch (g) {
            case Group::user_emb:
            case Group::item_emb: return 1.0 / std::sqrt(static_cast<double>(hp.d));
            case Group::w_l1: return 1.0 / std::sqrt(static_cast<double>(2 * hp.d));
            case Group::w_l2: return 1.0 / std::sqrt(static_cast<double>(hp.h));
            default: return 0.0;
        }
    };

    Rng rng = make_rng({hp.seed, 0x1a17});
    for (Group g : {Group::user_emb, Group::item_emb, Group::w_l1, Group::w_l2}) {
        const double s = scale_for(g);
        for (double& v : params.group(g)) v = uniform(rng, -s, s);
    }
    return params;
}

std::vector<double> lookup_concat(const ModelParams& params, std::size_t user, std::size_t item) {
    const auto u = params.user_embedding(user);
    const auto v = params.item_embedding(item);
    std::vector<double> x;
    x.reserve(u.size() + v.size());
    x.insert(x.end(), u.begin(), u.end());
    x.insert(x.end(), v.begin(), v.end());
    return x;
}

ForwardTrace forward(const ModelParams& params, std::size_t user, std::size_t item) {
    ForwardTrace t;
    t.x = lookup_concat(params, user, item);
    const std::size_t h = params.shape().h;
    const auto b1 = params.b_l1();
    const auto w2 = params.w_l2();
    t.z1.resize(h);
    t.a1.resize(h);
    t.z2 = params.b_l2();
    for (std::size_t r = 0; r < h; ++r) {
        const auto row = params.w_l1_row(r);
        double z = b1[r];
        for (std::size_t c = 0; c < row.size(); ++c) z += row[c] * t.x[c];
        t.z1[r] = z;
        t.a1[r] = std::tanh(z);
        t.z2 += w2[r] * t.a1[r];
    }
    t.p = sigmoid(t.z2);
    return t;
}

double forward_into(const ModelParams& params, std::size_t user, std::size_t item, std::span<double> a1) {
    const auto& shape = params.shape();
    const std::size_t d = shape.d;
    const std::size_t h = shape.h;
    const double* u = params.group(Group::user_emb).data() + user * d;
    const double* v = params.group(Group::item_emb).data() + item * d;
    const double* w1 = params.group(Group::w_l1).data();
    const auto b1 = params.b_l1();
    const auto w2 = params.w_l2();
    double z2 = params.b_l2();
    for (std::size_t r = 0; r < h; ++r) {
        const double* row = w1 + r * 2 * d;
        double z = b1[r];
        for (std::size_t c = 0; c < d; ++c) z += row[c] * u[c];
        for (std::size_t c = 0; c < d; ++c) z += row[d + c] * v[c];
        a1[r] = std::tanh(z);
        z2 += w2[r] * a1[r];
    }
    return sigmoid(z2);
}

double predict_rating(const ModelParams& params, std::size_t user, std::size_t item) {
    return params.k_max() * forward(params, user, item).p;
}

}  // namespace drcf
