#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dpdp/harness.hpp"
#include "dpdp/policy.hpp"

using namespace dpdp;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "dpdp_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(DPDP_CLI) + " " + args + " > " + (workdir() / "last.log").string() + " 2>&1";
    return std::system(cmd.c_str());
}

std::string at(const std::string& rel) { return (workdir() / rel).string(); }

// policy -> tc_mean
std::map<std::string, double> compare_tc(const fs::path& csv) {
    std::map<std::string, double> out;
    std::istringstream in(read_text(csv));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        out[cells[0]] = std::stod(cells[6]);
    }
    return out;
}

}  // namespace

TEST(Cli, GenerateSolveAndCompare) {
    ASSERT_EQ(cli("gen --seed 1 --orders 6 --vehicles 5 --out " + at("six.json")), 0);
    ASSERT_EQ(cli("exact --instance " + at("six.json") + " --budget 60 --out " + at("exact")), 0);
    const auto exact = nlohmann::json::parse(read_text(at("exact/exact.json")));
    EXPECT_TRUE(exact["proven_optimal"].get<bool>());
    EXPECT_FALSE(read_text(at("exact/plan.txt")).empty());

    ASSERT_EQ(cli("compare --instance " + at("six.json") + " --policies greedy1,greedy2,greedy3 --exact --out " +
                  at("cmp")),
              0);
    const auto tc = compare_tc(at("cmp/compare.csv"));
    ASSERT_EQ(tc.size(), 4u);
    EXPECT_EQ(tc.at("exact"), exact["tc"].get<double>());
    for (const char* g : {"greedy1", "greedy2", "greedy3"}) EXPECT_LE(tc.at("exact"), tc.at(g)) << g;
    EXPECT_TRUE(fs::exists(at("cmp/config.json")));
}

TEST(Cli, RunWritesReportTraceAndMetrics) {
    ASSERT_EQ(cli("gen --seed 2 --orders 12 --vehicles 4 --out " + at("twelve.json")), 0);
    ASSERT_EQ(cli("run --instance " + at("twelve.json") + " --policy greedy1 --out " + at("run_a")), 0);
    ASSERT_EQ(cli("run --instance " + at("twelve.json") + " --policy greedy1 --out " + at("run_b")), 0);
    EXPECT_EQ(read_text(at("run_a/trace.txt")), read_text(at("run_b/trace.txt")));
    const auto rep = nlohmann::json::parse(read_text(at("run_a/report.json")));
    EXPECT_EQ(rep["orders"].size(), 12u);
    EXPECT_EQ(rep["tc"].get<double>(), 300.0 * rep["nuv"].get<int>() + 2.0 * rep["ttl"].get<double>());
    EXPECT_EQ(read_text(at("run_a/metrics.csv")).rfind("episode,nuv,ttl,tc\n0,", 0), 0u);
    EXPECT_TRUE(fs::exists(at("run_a/config.json")));
}

TEST(Cli, EmptyDayCostsNothing) {
    ASSERT_EQ(cli("gen --seed 3 --orders 0 --vehicles 2 --out " + at("empty.json")), 0);
    ASSERT_EQ(cli("run --instance " + at("empty.json") + " --policy greedy2 --out " + at("run_empty")), 0);
    const auto rep = nlohmann::json::parse(read_text(at("run_empty/report.json")));
    EXPECT_EQ(rep["tc"].get<double>(), 0.0);
    EXPECT_EQ(rep["nuv"].get<int>(), 0);
}

TEST(Cli, TrainZeroEpisodesKeepsInitialWeights) {
    ASSERT_EQ(cli("gen --seed 4 --orders 8 --vehicles 3 --out " + at("eight.json")), 0);
    ASSERT_EQ(cli("train --instance " + at("eight.json") + " --episodes 0 --seed 9 --out " + at("t0")), 0);
    const LoadedCheckpoint ck = load_checkpoint(at("t0/checkpoint.bin"));
    EXPECT_EQ(ck.episodes, 0);
    EXPECT_EQ(checkpoint_hash(ck.network), checkpoint_hash(QNetwork(ck.network.config())));
    EXPECT_EQ(read_text(at("t0/learning_curve.csv")), "episode,loss,nuv,ttl,tc,epsilon\n");
}

TEST(Cli, TrainEvalAndPlotsAreReproducible) {
    ASSERT_EQ(cli("gen --seed 5 --orders 10 --vehicles 4 --out " + at("ten.json")), 0);
    const std::string train = "train --instance " + at("ten.json") + " --episodes 6 --batch 8 --seed 2 --hidden 16 --out ";
    ASSERT_EQ(cli(train + at("t_a")), 0);
    ASSERT_EQ(cli(train + at("t_b")), 0);
    EXPECT_EQ(read_text(at("t_a/checkpoint.bin")), read_text(at("t_b/checkpoint.bin")));
    EXPECT_EQ(read_text(at("t_a/learning_curve.csv")), read_text(at("t_b/learning_curve.csv")));

    ASSERT_EQ(cli("run --instance " + at("ten.json") + " --policy model --checkpoint " + at("t_a/checkpoint.bin") +
                  " --out " + at("run_model")),
              0);
    ASSERT_EQ(cli("eval --checkpoint " + at("t_a/checkpoint.bin") + " --checkpoint " + at("t_b/checkpoint.bin") +
                  " --instance " + at("ten.json") + " --out " + at("eval")),
              0);
    const std::string summary = read_text(at("eval/summary.csv"));
    EXPECT_NE(summary.find("st-ddgn,2,"), std::string::npos) << summary;

    ASSERT_EQ(cli("heatmap --instance " + at("ten.json") + " --source predicted --out " + at("hm")), 0);
    EXPECT_TRUE(fs::exists(at("hm/std.csv")));
    EXPECT_EQ(read_text(at("hm/std.svg")).rfind("<svg", 0), 0u);
    ASSERT_EQ(cli("heatmap --instance " + at("ten.json") + " --source day:1 --out " + at("hm1")), 0);
    ASSERT_EQ(cli("curves --csv " + at("t_a/learning_curve.csv") + " --column tc --window 2 --out " + at("lc.svg")), 0);
    EXPECT_NE(read_text(at("lc.svg")).find("<polyline"), std::string::npos);
}

TEST(Cli, FailuresExitNonZero) {
    EXPECT_NE(cli("--bogus"), 0);
    EXPECT_NE(cli("run --instance " + at("does-not-exist.json")), 0);
    ASSERT_EQ(cli("gen --seed 6 --orders 3 --vehicles 2 --out " + at("three.json")), 0);
    EXPECT_NE(cli("run --instance " + at("three.json") + " --policy nonsense --out " + at("bad")), 0);
    EXPECT_NE(cli("run --instance " + at("three.json") + " --policy model --out " + at("bad")), 0);
    EXPECT_NE(cli("exact --instance " + at("three.json") + " --budget 0 --out " + at("bad")), 0);
    EXPECT_NE(cli("heatmap --instance " + at("three.json") + " --source day:99 --out " + at("bad")), 0);
    EXPECT_NE(cli("train --episodes 1"), 0);
}
