#include "drcf/grad.hpp"

#include <algorithm>
#include <string>

#include "drcf/error.hpp"
#include "drcf/parallel.hpp"

namespace drcf {

namespace {

// Fixed reduction granularity; changing it changes rounding, not results' meaning.
constexpr std::size_t chunk_size = 512;

void check_batch(const ModelParams& params, const Batch& batch, double lambda) {
    if (batch.empty()) throw InvalidArgument("empty batch");
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
    const auto& shape = params.shape();
    for (const auto& ex : batch.examples) {
        if (ex.user >= shape.users || ex.item >= shape.items) {
            throw InvalidArgument("batch example (" + std::to_string(ex.user) + ", " + std::to_string(ex.item) +
                                  ") outside model vocab");
        }
    }
}

double l2_penalty(const ModelParams& params) {
    double sum = 0.0;
    for (const auto& slot : params.layout().slots()) {
        if (!slot.regularized) continue;
        for (double v : params.values().subspan(slot.offset, slot.size())) sum += v * v;
    }
    return sum;
}

}  // namespace

FlatView flatten(const ModelParams& params) {
    return {std::vector<double>(params.values().begin(), params.values().end()), params.layout()};
}

ModelParams unflatten(const FlatView& flat, double k_max) {
    if (flat.values.size() != flat.layout.total()) {
        throw ShapeError("flat vector has " + std::to_string(flat.values.size()) + " values, layout needs " +
                         std::to_string(flat.layout.total()));
    }
    return ModelParams(flat.layout.shape(), k_max, flat.values);
}

Batch make_batch(const Dataset& data) {
    Batch b;
    b.examples.reserve(data.size());
    for (const auto& r : data.ratings) b.examples.push_back({r.user, r.item, normalize_target(r.rating, data.k_max)});
    return b;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> positions) {
    Batch b;
    b.examples.reserve(positions.size());
    for (std::size_t pos : positions) {
        const auto& r = data.ratings.at(pos);
        b.examples.push_back({r.user, r.item, normalize_target(r.rating, data.k_max)});
    }
    return b;
}

double objective(const ModelParams& params, const Batch& batch, double lambda, std::size_t threads) {
    check_batch(params, batch, lambda);
    const std::size_t n = batch.size();
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t h = params.shape().h;
    std::vector<double> partial(chunks, 0.0);
    parallel_tasks(chunks, threads, [&](std::size_t c) {
        std::vector<double> a1(h);
        double sum = 0.0;
        const std::size_t end = std::min(n, (c + 1) * chunk_size);
        for (std::size_t i = c * chunk_size; i < end; ++i) {
            const auto& ex = batch.examples[i];
            const double r = forward_into(params, ex.user, ex.item, a1) - ex.target;
            sum += 0.5 * r * r;
        }
        partial[c] = sum;
    });
    double loss = 0.0;
    for (double p : partial) loss += p;
    return loss / static_cast<double>(n) + lambda * l2_penalty(params);
}

double objective_and_gradient(const ModelParams& params, const Batch& batch, double lambda, std::vector<double>& grad,
                              std::size_t threads) {
    check_batch(params, batch, lambda);
    const auto& layout = params.layout();
    const auto& shape = params.shape();
    const std::size_t d = shape.d;
    const std::size_t h = shape.h;
    const std::size_t in = 2 * d;
    const std::size_t n = batch.size();
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;

    // Dense network part (W_l1, b_l1, w_l2, b_l2) is contiguous at the tail.
    const std::size_t net_offset = layout.slot(Group::w_l1).offset;
    const std::size_t net_size = layout.total() - net_offset;
    const std::size_t off_b1 = layout.slot(Group::b_l1).offset - net_offset;
    const std::size_t off_w2 = layout.slot(Group::w_l2).offset - net_offset;
    const std::size_t off_b2 = layout.slot(Group::b_l2).offset - net_offset;

    std::vector<double> net_partial(chunks * net_size, 0.0);
    std::vector<double> loss_partial(chunks, 0.0);
    std::vector<double> dx(n * in);  // per-example input gradient, scattered afterwards

    const double* w1 = params.group(Group::w_l1).data();
    const auto w2 = params.w_l2();

    parallel_tasks(chunks, threads, [&](std::size_t c) {
        std::vector<double> a1(h);
        std::vector<double> delta1(h);
        double* g = net_partial.data() + c * net_size;
        double loss = 0.0;
        const std::size_t end = std::min(n, (c + 1) * chunk_size);
        for (std::size_t i = c * chunk_size; i < end; ++i) {
            const auto& ex = batch.examples[i];
            const double p = forward_into(params, ex.user, ex.item, a1);
            const double resid = p - ex.target;
            loss += 0.5 * resid * resid;

            const double delta2 = resid * p * (1.0 - p);
            for (std::size_t r = 0; r < h; ++r) {
                g[off_w2 + r] += delta2 * a1[r];
                delta1[r] = w2[r] * delta2 * (1.0 - a1[r] * a1[r]);
            }
            g[off_b2] += delta2;

            const double* u = params.group(Group::user_emb).data() + ex.user * d;
            const double* v = params.group(Group::item_emb).data() + ex.item * d;
            double* gx = dx.data() + i * in;
            std::fill(gx, gx + in, 0.0);
            for (std::size_t r = 0; r < h; ++r) {
                const double dr = delta1[r];
                double* gw = g + r * in;
                const double* row = w1 + r * in;
                for (std::size_t c2 = 0; c2 < d; ++c2) {
                    gw[c2] += dr * u[c2];
                    gw[d + c2] += dr * v[c2];
                }
                for (std::size_t c2 = 0; c2 < in; ++c2) gx[c2] += row[c2] * dr;
                g[off_b1 + r] += dr;
            }
        }
        loss_partial[c] = loss;
    });

    grad.assign(layout.total(), 0.0);
    double loss = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        loss += loss_partial[c];
        const double* g = net_partial.data() + c * net_size;
        for (std::size_t k = 0; k < net_size; ++k) grad[net_offset + k] += g[k];
    }
    const std::size_t user_off = layout.slot(Group::user_emb).offset;
    const std::size_t item_off = layout.slot(Group::item_emb).offset;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ex = batch.examples[i];
        const double* gx = dx.data() + i * in;
        double* gu = grad.data() + user_off + ex.user * d;
        double* gv = grad.data() + item_off + ex.item * d;
        for (std::size_t k = 0; k < d; ++k) {
            gu[k] += gx[k];
            gv[k] += gx[d + k];
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& v : grad) v *= inv_n;
    const auto theta = params.values();
    double penalty = 0.0;
    for (const auto& slot : layout.slots()) {
        if (!slot.regularized) continue;
        for (std::size_t k = slot.offset; k < slot.offset + slot.size(); ++k) {
            penalty += theta[k] * theta[k];
            grad[k] += 2.0 * lambda * theta[k];
        }
    }
    return loss * inv_n + lambda * penalty;
}

FlatView gradient(const ModelParams& params, const Batch& batch, double lambda, std::size_t threads) {
    FlatView out{{}, params.layout()};
    objective_and_gradient(params, batch, lambda, out.values, threads);
    return out;
}

FlatView fd_gradient(const ModelParams& params, const Batch& batch, double lambda, double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
    ModelParams probe = params;
    FlatView out{std::vector<double>(params.layout().total()), params.layout()};
    auto values = probe.values();
    for (std::size_t c = 0; c < values.size(); ++c) {
        const double saved = values[c];
        values[c] = saved + epsilon;
        const double up = objective(probe, batch, lambda);
        values[c] = saved - epsilon;
        const double down = objective(probe, batch, lambda);
        values[c] = saved;
        out.values[c] = (up - down) / (2.0 * epsilon);
    }
    return out;
}

}  // namespace drcf
