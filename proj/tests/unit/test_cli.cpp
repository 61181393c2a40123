#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ticketlab/cli/cli.hpp"
#include "ticketlab/format.hpp"
#include "ticketlab/harness/report_io.hpp"

using namespace ticketlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ticketlab");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ticketlab_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Cli, SearchHappyPath) {
    const auto dir = fresh_dir("search");
    const auto r = invoke({"search", "--mode", "eb", "--arch", "mlp-bn", "--dataset", "blobs2d", "--seed", "1",
                           "--retrain-budget", "2", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("stop_epoch="), std::string::npos);
    for (const char* f : {"report.txt", "metrics.csv", "mask.txt", "runspec.cfg", "run.log"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto report = harness::load_experiment_report(dir / "report.txt");
    EXPECT_EQ(harness::load_metrics_csv(dir / "metrics.csv"), report.metrics);
    EXPECT_EQ(slurp(dir / "report.txt").find("time"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    auto r = invoke({"search", "--mode", "eb"});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("--arch"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);

    r = invoke({"search", "--arch", "mlp-bn", "--p", "1.5", "--out", fresh_dir("p").string()});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("[0 - 1]"), std::string::npos) << r.err;

    EXPECT_EQ(invoke({"search", "--arch", "resnet"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"search", "--arch", "mlp-bn", "--mode", "always"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"search", "--arch", "mlp-bn", "--l", "40"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({}).code, cli::kExitUsage);
}

TEST(Cli, RuntimeFailureIsExitOne) {
    const auto r = invoke({"search", "--arch", "cnn-bn", "--dataset", "idx:/nonexistent/a:/nonexistent/b", "--out",
                           fresh_dir("idx").string()});
    EXPECT_EQ(r.code, cli::kExitFailure) << r.err;
}

TEST(Cli, CompareTablesAndDefaults) {
    const auto dir = fresh_dir("compare");
    const auto r = invoke({"compare", "--arch", "mlp-bn", "--seeds", "2,1", "--retrain-budget", "1", "--out",
                           dir.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto rows = csv_rows(dir / "compare.csv");
    ASSERT_EQ(rows.size(), 4u);  // header, 2 seeds, mean
    EXPECT_EQ(rows[1][0], "1");
    EXPECT_EQ(rows[2][0], "2");
    EXPECT_EQ(rows[3][0], "mean");

    const auto spec = slurp(dir / "runspec.cfg");
    for (const char* line : {"s=0.1\n", "l=5\n", "p=0.5\n", "delta=0.05\n", "r=0.003\n", "lr=0.01\n"})
        EXPECT_NE(spec.find(line), std::string::npos) << line;
}

TEST(Cli, CompareWithUnitTruncationHasZeroDeltas) {
    const auto dir = fresh_dir("compare_r1");
    const auto r = invoke({"compare", "--arch", "mlp-bn", "--seeds", "1,2", "--worm-r", "1.0", "--delta", "0",
                           "--retrain-budget", "1", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto rows = csv_rows(dir / "compare.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        for (std::size_t c = 1; c < rows[0].size(); ++c) {
            if (rows[0][c].rfind("delta_", 0) == 0 && !rows[i][c].empty()) EXPECT_EQ(parse_double(rows[i][c], 0), 0.0);
        }
    }
}

TEST(Cli, TrajectoryStartsAtFullWindowAndIsDeterministic) {
    const auto a = fresh_dir("traj_a"), b = fresh_dir("traj_b");
    for (const auto& dir : {a, b}) {
        const auto r = invoke({"trajectory", "--arch", "mlp-bn", "--mode", "worm", "--seed", "3", "--dump-masks",
                               "--out", dir.string()});
        ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    }
    EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
    const auto rows = csv_rows(a / "trajectory.csv");
    ASSERT_GE(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"epoch", "d_avg", "d_max", "train_loss"}));
    EXPECT_EQ(rows[1][0], "6");  // l = 5 previous masks first available at epoch 6
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(parse_double(rows[i][1], 0), parse_double(rows[i][2], 0));
    EXPECT_TRUE(fs::exists(a / "masks" / "epoch_001.txt"));
}

TEST(Cli, SweepRowsAndUnitRow) {
    const auto dir = fresh_dir("sweep");
    auto r = invoke({"sweep", "--arch", "mlp-bn", "--seeds", "1", "--r-values", "1,0.5,0.1,0.05,0.01",
                     "--retrain-budget", "2", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto rows = csv_rows(dir / "sweep.csv");
    ASSERT_EQ(rows.size(), 6u);
    for (const auto& row : rows)
        for (const auto& cell : row) EXPECT_FALSE(cell.empty());

    const auto eb_dir = fresh_dir("sweep_eb");
    r = invoke({"search", "--arch", "mlp-bn", "--seed", "1", "--retrain-budget", "2", "--out", eb_dir.string()});
    ASSERT_EQ(r.code, cli::kExitOk);
    const auto eb = harness::summarize(harness::load_experiment_report(eb_dir / "report.txt"));
    const auto sweep = harness::load_sweep_report(dir / "sweep_seed1.txt");
    EXPECT_EQ(sweep.rows[0].summary, eb);

    EXPECT_EQ(invoke({"sweep", "--arch", "mlp-bn", "--r-values", ""}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"sweep", "--arch", "mlp-bn"}).code, cli::kExitUsage);
    EXPECT_EQ(invoke({"sweep", "--arch", "mlp-bn", "--r-values", "0"}).code, cli::kExitUsage);
}

TEST(Cli, ConfigFileBelowFlagsAndRunSpecReplays) {
    const auto dir = fresh_dir("config");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "in.cfg");
        cfg << "# comment\narch=mlp-bn\np=0.3\nseed=4\nretrain-budget=1\n";
    }
    const auto first = dir / "first";
    auto r = invoke({"search", "--config", (dir / "in.cfg").string(), "--p", "0.4", "--out", first.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto spec = slurp(first / "runspec.cfg");
    EXPECT_NE(spec.find("p=0.4\n"), std::string::npos);
    EXPECT_NE(spec.find("seed=4\n"), std::string::npos);

    // replaying the recorded spec into another directory reproduces the results byte for byte
    const auto second = dir / "second";
    r = invoke({"search", "--config", (first / "runspec.cfg").string(), "--out", second.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    for (const char* f : {"report.txt", "metrics.csv", "mask.txt"}) EXPECT_EQ(slurp(first / f), slurp(second / f)) << f;

    EXPECT_EQ(invoke({"search", "--config", (dir / "missing.cfg").string()}).code, cli::kExitUsage);
}

TEST(Cli, HelpExitsZero) {
    const auto r = invoke({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("trajectory"), std::string::npos);
}
