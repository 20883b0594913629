#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "drcf/dataio.hpp"
#include "drcf/model.hpp"

namespace drcf {

struct EpochRecord {
    std::size_t epoch = 0;
    double objective = 0.0;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_test_rmse = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Initializes a model and runs mini-batched L-BFGS epochs, scoring train and
/// test RMSE after each. Stops after hp.patience epochs without a better test
/// RMSE and returns the best snapshot.
///
/// An empty `test` set makes train RMSE the selection criterion; test_rmse is
/// then NaN in the report.
std::pair<ModelParams, TrainReport> train_model(const Dataset& train, const Dataset& test, const Hyperparams& hp,
                                                const EpochCallback& on_epoch = {});

/// TSV with header `epoch objective train_rmse test_rmse[ seconds]`. Timing is
/// opt-in so that reports of identical runs are byte-identical.
void write_report_tsv(const TrainReport& report, std::ostream& out, bool with_seconds = false);

}  // namespace drcf
