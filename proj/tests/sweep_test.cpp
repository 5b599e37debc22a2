#include <gtest/gtest.h>

#include <map>
#include <set>
#include <random>
#include <sstream>

#include "pathdev/pipeline.hpp"
#include "pathdev/sweep.hpp"
#include "pathdev/synthetic.hpp"

using namespace pathdev;

namespace {

using Grid = std::vector<std::vector<double>>;  // per axis, numeric candidates in ascending order

// Coordinate descent over index tuples against a lookup table, written
// independently of the library: strict improvement only, so ties keep the
// smaller candidate.
std::vector<std::size_t> replay_oracle(const Grid& grid, const std::function<double(const std::vector<std::size_t>&)>& f,
                                       std::vector<std::size_t> start, int passes) {
    std::vector<std::size_t> cur = start;
    for (int p = 0; p < passes; ++p) {
        const auto before = cur;
        for (std::size_t a = 0; a < grid.size(); ++a) {
            std::size_t best = 0;
            double best_val = 0.0;
            for (std::size_t i = 0; i < grid[a].size(); ++i) {
                auto probe = cur;
                probe[a] = i;
                const double v = f(probe);
                if (i == 0 || v > best_val) {
                    best_val = v;
                    best = i;
                }
            }
            cur[a] = best;
        }
        if (cur == before) break;
    }
    return cur;
}

std::string fmt(double v) { return csv_detail::format_double(v); }

SweepSpec spec_for(const std::vector<std::string>& names, const Grid& grid, int passes) {
    SweepSpec s;
    s.passes = passes;
    for (std::size_t a = 0; a < names.size(); ++a) {
        SweepAxis ax{names[a], {}};
        for (auto it = grid[a].rbegin(); it != grid[a].rend(); ++it) ax.values.push_back(fmt(*it));  // unsorted input
        s.axes.push_back(ax);
    }
    return s;
}

std::vector<std::size_t> indices_of(const RunConfig& c, const std::vector<std::string>& names, const Grid& grid) {
    std::vector<std::size_t> idx;
    for (std::size_t a = 0; a < names.size(); ++a) {
        const double v = std::stod(get_config_value(c, names[a]));
        const auto it = std::find(grid[a].begin(), grid[a].end(), v);
        idx.push_back(it == grid[a].end() ? grid[a].size() : static_cast<std::size_t>(it - grid[a].begin()));
    }
    return idx;
}

}  // namespace

TEST(CoordinateDescent, SingleCandidateReturnsBaseWithValue) {
    RunConfig base;
    const SweepSpec s{{{"DNN_Number", {"32"}}}, 2};
    int calls = 0;
    const auto out = coordinate_descent(base, s, [&](const RunConfig&) { return ++calls, 0.5; });
    RunConfig want = base;
    want.train.hidden_width = 32;
    EXPECT_EQ(to_config_text(out.best), to_config_text(want));
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(out.passes_run, 2);  // pass 1 changes DNN_Number, pass 2 confirms
}

TEST(CoordinateDescent, EarlyStopWhenPassChangesNothing) {
    RunConfig base;  // already at the optimum of a flat objective
    const SweepSpec s{{{"DNN_Number", {"16", "32"}}, {"lr", {"0.01", "0.001"}}}, 5};
    const auto out = coordinate_descent(base, s, [](const RunConfig&) { return 0.25; });
    EXPECT_EQ(out.passes_run, 2);
    // flat objective: ties go to the smaller value
    EXPECT_EQ(out.best.train.hidden_width, 16u);
    EXPECT_DOUBLE_EQ(out.best.train.lr, 0.001);
}

TEST(CoordinateDescent, MatchesReplayOracleOnRandomTables) {
    const std::vector<std::string> names{"DNN_Number", "DEV_Number", "L2_Weight"};
    const Grid grid{{16, 24, 32, 64}, {16, 20, 32}, {0, 0.01, 0.05}};
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::vector<std::size_t>, double> table;
        std::uniform_int_distribution<int> coarse(0, 4);  // few levels so ties are common
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t k = 0; k < 3; ++k) table[{i, j, k}] = coarse(rng) / 4.0;
        const int passes = 1 + trial % 3;
        const SweepSpec spec = spec_for(names, grid, passes);
        RunConfig base;  // DNN 16, DEV 16, L2 0 -> indices (0, 0, 0)
        std::size_t calls = 0;
        const auto out = coordinate_descent(base, spec, [&](const RunConfig& c) {
            ++calls;
            return table.at(indices_of(c, names, grid));
        });
        const auto want = replay_oracle(grid, [&](const auto& idx) { return table.at(idx); }, {0, 0, 0}, passes);
        EXPECT_EQ(indices_of(out.best, names, grid), want) << "trial " << trial;
        EXPECT_EQ(out.best_objective, table.at(want));
        EXPECT_EQ(calls, out.leaderboard.size());
        std::set<std::string> distinct;
        for (const auto& r : out.leaderboard) {
            distinct.insert(to_config_text(r.config));
            EXPECT_EQ(r.objective, table.at(indices_of(r.config, names, grid)));
        }
        EXPECT_EQ(distinct.size(), out.leaderboard.size());
    }
}

TEST(CoordinateDescent, NeverLeavesCandidateSet) {
    const std::vector<std::string> names{"lr", "batch_size"};
    const SweepSpec spec{{{"lr", {"0.01", "0.001"}}, {"batch_size", {"128", "32", "64"}}}, 3};
    RunConfig base;
    const auto out = coordinate_descent(base, spec, [](const RunConfig& c) {
        check_config_in_sweep_ranges(c);
        return c.train.lr * 100 + c.train.batch_size / 128.0;
    });
    EXPECT_DOUBLE_EQ(out.best.train.lr, 0.01);
    EXPECT_EQ(out.best.train.batch_size, 128);
}

// Real seeded training runs on a small arc task: the sweep's choice must equal
// the coordinate path replayed over an exhaustively trained grid.
TEST(CoordinateDescent, TrainingSweepMatchesExhaustiveReplay) {
    ArcTaskSpec task;
    task.train = 16;
    task.validation = 10;
    task.test = 0;
    task.points = 5;
    task.noise = 0.05;
    task.seed = 2;
    const Dataset ds = make_arc_dataset(task);

    RunConfig base;
    base.smote_k = 0;
    base.train.seed = 4;
    const std::vector<std::string> names{"lr", "DNN_Number"};
    const Grid grid{{0.001, 0.01}, {16, 32}};

    auto objective = [&](const RunConfig& c) { return sweep_objective(run_training(prepare_dataset(ds, c), c)); };
    std::map<std::vector<std::size_t>, double> table;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            RunConfig c = base;
            c.train.lr = grid[0][i];
            c.train.hidden_width = static_cast<std::size_t>(grid[1][j]);
            table[{i, j}] = objective(c);
        }
    const auto start = indices_of(base, names, grid);
    ASSERT_EQ(start, (std::vector<std::size_t>{1, 0}));
    const auto want = replay_oracle(grid, [&](const auto& idx) { return table.at(idx); }, start, 2);
    const auto out = coordinate_descent(base, spec_for(names, grid, 2), objective);
    EXPECT_EQ(indices_of(out.best, names, grid), want);
    EXPECT_EQ(out.best_objective, table.at(want));
}
