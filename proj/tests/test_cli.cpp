#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <fstream>
#include <sstream>

#include "drcf/cli.hpp"
#include "drcf/persist.hpp"
#include "test_support.hpp"

using namespace drcf;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "drcf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Small ml100k-style file from the toy generator.
std::filesystem::path write_toy(const testing::TempDir& dir) {
    const Dataset ds = testing::toy_dataset(400, 25, 20, 77);
    const auto path = dir / "u.data";
    std::ofstream f(path);
    long ts = 880000000;
    for (const auto& r : ds.ratings) {
        f << ds.users.raw(r.user) << '\t' << ds.items.raw(r.item) << '\t' << r.rating << '\t' << ts++ << '\n';
    }
    return path;
}

std::vector<std::string> train_args(const std::filesystem::path& data, const std::filesystem::path& out,
                                    const std::filesystem::path& report) {
    return {"train", "--data", data.string(), "--format", "ml100k", "--out", out.string(), "--report",
            report.string(), "--d", "4", "--hidden", "6", "--epochs", "4", "--batch-size", "100", "--quiet"};
}

}  // namespace

TEST_CASE("train writes a model and prints test RMSE; eval agrees") {
    testing::TempDir dir("cli");
    const auto data = write_toy(dir);
    const Run t = run(train_args(data, dir / "m.drcf", dir / "r.tsv"));
    REQUIRE(t.code == 0);
    CHECK(t.out.rfind("test_rmse=", 0) == 0);
    CHECK(std::filesystem::exists(dir / "m.drcf"));
    CHECK(slurp(dir / "r.tsv").rfind("epoch\tobjective\ttrain_rmse\ttest_rmse\n", 0) == 0);

    const Run e = run({"eval", "--data", data.string(), "--model", (dir / "m.drcf").string()});
    REQUIRE(e.code == 0);
    CHECK(e.out == t.out);
}

TEST_CASE("identical flags give identical files") {
    testing::TempDir dir("cli_det");
    const auto data = write_toy(dir);
    REQUIRE(run(train_args(data, dir / "a.drcf", dir / "a.tsv")).code == 0);
    REQUIRE(run(train_args(data, dir / "b.drcf", dir / "b.tsv")).code == 0);
    CHECK(slurp(dir / "a.drcf") == slurp(dir / "b.drcf"));
    CHECK(slurp(dir / "a.tsv") == slurp(dir / "b.tsv"));
}

TEST_CASE("predict output and fallback") {
    testing::TempDir dir("cli_pred");
    const auto data = write_toy(dir);
    REQUIRE(run(train_args(data, dir / "m.drcf", dir / "r.tsv")).code == 0);
    const TrainedModel m = load(dir / "m.drcf");

    const Run known = run({"predict", "--model", (dir / "m.drcf").string(), "--user", "u3", "--item", "i5"});
    REQUIRE(known.code == 0);
    char expect[32];
    std::snprintf(expect, sizeof expect, "%.4f\n",
                  predict_rating(m.params, *m.users.find("u3"), *m.items.find("i5")));
    CHECK(known.out == expect);

    const Run cold = run({"predict", "--model", (dir / "m.drcf").string(), "--user", "nobody", "--item", "i5"});
    REQUIRE(cold.code == 0);
    std::snprintf(expect, sizeof expect, "%.4f\n", m.global_mean);
    CHECK(cold.out == expect);
}

TEST_CASE("baselines through eval") {
    testing::TempDir dir("cli_base");
    const auto data = write_toy(dir);
    for (const char* b : {"global-mean", "item-mean", "slopeone"}) {
        const Run r = run({"eval", "--data", data.string(), "--baseline", b});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("test_rmse=", 0) == 0);
    }
    CHECK(run({"eval", "--data", data.string(), "--baseline", "svd"}).code == cli::usage_error);
}

TEST_CASE("split subcommand") {
    testing::TempDir dir("cli_split");
    const auto data = write_toy(dir);
    const Run r = run({"split", "--data", data.string(), "--out", (dir / "part").string()});
    REQUIRE(r.code == 0);
    const auto train = parse_movielens(dir / "part.train", RatingFormat::ml100k);
    const auto test = parse_movielens(dir / "part.test", RatingFormat::ml100k);
    CHECK(train.size() == 360);
    CHECK(test.size() == 40);
}

TEST_CASE("exit codes") {
    testing::TempDir dir("cli_err");
    const auto data = write_toy(dir);
    CHECK(run({}).code == cli::usage_error);
    CHECK(run({"train", "--data", data.string()}).code == cli::usage_error);
    CHECK(run({"train", "--data", (dir / "missing").string(), "--out", (dir / "m").string()}).code == cli::io_error);
    CHECK(run({"predict", "--model", (dir / "missing").string(), "--user", "1", "--item", "2"}).code ==
          cli::io_error);

    std::ofstream(dir / "bad.data") << "1 2 3\n";
    CHECK(run({"eval", "--data", (dir / "bad.data").string(), "--baseline", "slopeone"}).code == cli::data_error);

    std::ofstream(dir / "bad.drcf") << "DRCF 2\n";
    CHECK(run({"predict", "--model", (dir / "bad.drcf").string(), "--user", "1", "--item", "2"}).code ==
          cli::data_error);

    // Model trained on a different dataset.
    REQUIRE(run(train_args(data, dir / "m.drcf", dir / "r.tsv")).code == 0);
    std::ofstream(dir / "other.data") << "1\t2\t3\t4\n5\t6\t1\t7\n";
    CHECK(run({"eval", "--data", (dir / "other.data").string(), "--model", (dir / "m.drcf").string()}).code ==
          cli::data_error);
}

TEST_CASE("installed binary behaves like the library entry point") {
    const char* exe = std::getenv("DRCF_CLI");
    if (!exe) return;
    testing::TempDir dir("cli_bin");
    const auto data = write_toy(dir);
    const std::string cmd = std::string(exe) + " eval --data " + data.string() + " --baseline slopeone > " +
                            (dir / "out.txt").string();
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(slurp(dir / "out.txt") == run({"eval", "--data", data.string(), "--baseline", "slopeone"}).out);
    const std::string bad = std::string(exe) + " predict --model /nonexistent --user 1 --item 2 2>/dev/null";
    CHECK(WEXITSTATUS(std::system(bad.c_str())) == cli::io_error);
}
