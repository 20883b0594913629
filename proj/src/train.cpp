#include "drcf/train.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "drcf/error.hpp"
#include "drcf/eval.hpp"
#include "drcf/optim.hpp"

namespace drcf {

std::pair<ModelParams, TrainReport> train_model(const Dataset& train, const Dataset& test, const Hyperparams& hp,
                                                const EpochCallback& on_epoch) {
    hp.validate();
    if (train.empty()) throw DataError("empty training set");
    if (!test.empty() && (!(test.users == train.users) || !(test.items == train.items))) {
        throw DataError("train and test sets must share vocabularies");
    }

    ModelParams params = init_params(train.users.size(), train.items.size(), train.k_max, hp);
    LbfgsState state(hp.lbfgs_history);
    TrainReport report;
    ModelParams best = params;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.objective = run_epoch(params, train, hp, state, epoch);
        const Predictor predict = model_predictor(params);
        rec.train_rmse = evaluate(predict, train, hp.threads);
        rec.test_rmse = test.empty() ? std::numeric_limits<double>::quiet_NaN() : evaluate(predict, test, hp.threads);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        const double score = test.empty() ? rec.train_rmse : rec.test_rmse;
        if (score < best_score) {
            best_score = score;
            best = params;
            report.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= hp.patience) {
            break;
        }
    }
    report.best_test_rmse = test.empty() ? std::numeric_limits<double>::quiet_NaN() : best_score;
    return {std::move(best), std::move(report)};
}

namespace {

void put_real(std::ostream& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

}  // namespace

void write_report_tsv(const TrainReport& report, std::ostream& out, bool with_seconds) {
    out << "epoch\tobjective\ttrain_rmse\ttest_rmse";
    if (with_seconds) out << "\tseconds";
    out << '\n';
    for (const auto& rec : report.epochs) {
        out << rec.epoch << '\t';
        put_real(out, rec.objective);
        out << '\t';
        put_real(out, rec.train_rmse);
        out << '\t';
        put_real(out, rec.test_rmse);
        if (with_seconds) {
            out << '\t';
            put_real(out, rec.seconds);
        }
        out << '\n';
    }
}

}  // namespace drcf
