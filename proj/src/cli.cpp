#include "drcf/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "drcf/dataio.hpp"
#include "drcf/error.hpp"
#include "drcf/eval.hpp"
#include "drcf/persist.hpp"
#include "drcf/train.hpp"

namespace drcf::cli {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Dataset load_dataset(const CliConfig& config) {
    if (config.data.empty()) throw InvalidArgument("--data is required");
    const RatingFormat format = parse_format(config.format);
    return build_dataset(parse_movielens(config.data, format), config.k_max);
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return io_error;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return data_error;
    }
}

}  // namespace

int cmd_train(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (config.out.empty()) throw InvalidArgument("--out is required");
        config.hp.validate();
        const Dataset full = load_dataset(config);
        const auto [train, test] = split(full, config.train_fraction, config.hp.seed);

        EpochCallback progress;
        if (!config.quiet) {
            progress = [&err](const EpochRecord& r) {
                err << "epoch " << r.epoch << " objective " << r.objective << " train_rmse " << r.train_rmse
                    << " test_rmse " << r.test_rmse << " (" << fixed(r.seconds, 1) << "s)\n";
            };
        }
        auto [params, report] = train_model(train, test, config.hp, progress);

        TrainedModel model{std::move(params), full.users, full.items, train.mean_rating(), config.hp.lambda};
        save(model, config.out);
        if (config.report) {
            std::ofstream rep(*config.report, std::ios::binary | std::ios::trunc);
            if (!rep) throw IoError("cannot open " + config.report->string() + " for writing");
            write_report_tsv(report, rep, config.report_timing);
            if (!rep) throw IoError("failed writing " + config.report->string());
        }
        out << "test_rmse=" << fixed(report.best_test_rmse, 6) << '\n';
        return int{ok};
    });
}

int cmd_eval(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset full = load_dataset(config);
        const auto [train, test] = split(full, config.train_fraction, config.hp.seed);
        if (test.empty()) throw DataError("split left no test ratings");

        double score = 0.0;
        if (config.baseline) {
            score = evaluate(make_baseline(parse_baseline(*config.baseline), train), test, config.hp.threads);
        } else {
            if (config.model.empty()) throw InvalidArgument("--model or --baseline is required");
            const TrainedModel model = load(config.model);
            if (!(model.users == full.users) || !(model.items == full.items)) {
                throw DataError("model vocabulary does not match dataset " + config.data.string());
            }
            score = evaluate(model_predictor(model.params), test, config.hp.threads);
        }
        out << "test_rmse=" << fixed(score, 6) << '\n';
        return int{ok};
    });
}

int cmd_predict(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (config.model.empty()) throw InvalidArgument("--model is required");
        const TrainedModel model = load(config.model);
        out << fixed(predict_with_fallback(model, config.user, config.item), 4) << '\n';
        return int{ok};
    });
}

int cmd_split(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (config.out.empty()) throw InvalidArgument("--out is required");
        const Dataset full = load_dataset(config);
        const auto [train, test] = split(full, config.train_fraction, config.hp.seed);
        const std::string sep = parse_format(config.format) == RatingFormat::ml100k ? "\t" : "::";
        auto write = [&](const Dataset& part, const std::string& suffix) {
            const std::filesystem::path path = config.out.string() + suffix;
            std::ofstream f(path, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot open " + path.string() + " for writing");
            for (const auto& r : part.ratings) {
                f << part.users.raw(r.user) << sep << part.items.raw(r.item) << sep << shortest(r.rating) << '\n';
            }
            if (!f) throw IoError("failed writing " + path.string());
            out << path.string() << ' ' << part.size() << '\n';
        };
        write(train, ".train");
        write(test, ".test");
        return int{ok};
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Embedding + MLP collaborative filtering trained with mini-batched L-BFGS"};
    app.require_subcommand(1);
    CliConfig config;

    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", config.data, "Rating file (u.data or ratings.dat)")->required();
        sub->add_option("--format", config.format, "ml100k or ml1m")
            ->check(CLI::IsMember({"ml100k", "ml1m"}))
            ->capture_default_str();
        sub->add_option("--train-fraction", config.train_fraction, "Share of ratings used for training")
            ->capture_default_str();
        sub->add_option("--seed", config.hp.seed, "Seed for split, init and shuffling")->capture_default_str();
        sub->add_option("--k-max", config.k_max, "Rating scale ceiling")->capture_default_str();
        sub->add_option("--threads", config.hp.threads, "Worker threads (results do not depend on it)")
            ->capture_default_str();
    };

    auto* train = app.add_subcommand("train", "Split, train, save model and report");
    add_data(train);
    train->add_option("--d", config.hp.d, "Embedding dimension")->capture_default_str();
    train->add_option("--hidden", config.hp.h, "Hidden units")->capture_default_str();
    train->add_option("--lambda", config.hp.lambda, "L2 weight")->capture_default_str();
    train->add_option("--batch-size", config.hp.batch_size)->capture_default_str();
    train->add_option("--epochs", config.hp.epochs)->capture_default_str();
    train->add_option("--lbfgs-history", config.hp.lbfgs_history)->capture_default_str();
    train->add_option("--lbfgs-inner-iters", config.hp.lbfgs_inner_iters)->capture_default_str();
    train->add_option("--patience", config.hp.patience, "Early-stopping patience in epochs")->capture_default_str();
    train->add_flag("--freeze-biases", config.hp.freeze_biases, "Keep hidden/output biases at zero");
    train->add_option("--out", config.out, "Model file to write")->required();
    train->add_option("--report", config.report, "Per-epoch TSV report");
    train->add_flag("--report-timing", config.report_timing, "Add a wall-clock seconds column to the report");
    train->add_flag("--quiet", config.quiet, "No per-epoch progress on stderr");

    auto* eval = app.add_subcommand("eval", "RMSE of a saved model or a baseline on the seeded test split");
    add_data(eval);
    eval->add_option("--model", config.model, "Model file");
    eval->add_option("--baseline", config.baseline, "global-mean, item-mean or slopeone")
        ->check(CLI::IsMember({"global-mean", "item-mean", "slopeone"}));

    auto* predict = app.add_subcommand("predict", "Predict one rating from a saved model");
    predict->add_option("--model", config.model, "Model file")->required();
    predict->add_option("--user", config.user, "Raw user ID")->required();
    predict->add_option("--item", config.item, "Raw item ID")->required();

    auto* split_cmd = app.add_subcommand("split", "Write the seeded train/test split");
    add_data(split_cmd);
    split_cmd->add_option("--out", config.out, "Output prefix (.train/.test appended)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }

    if (train->parsed()) {
        config.subcommand = "train";
        return cmd_train(config, out, err);
    }
    if (eval->parsed()) {
        config.subcommand = "eval";
        return cmd_eval(config, out, err);
    }
    if (predict->parsed()) {
        config.subcommand = "predict";
        return cmd_predict(config, out, err);
    }
    config.subcommand = "split";
    return cmd_split(config, out, err);
}

}  // namespace drcf::cli
