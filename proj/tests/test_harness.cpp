#include <gtest/gtest.h>

#include <sstream>

#include <wspgl1/harness.hpp>

using namespace wspgl1;

namespace {

ExperimentPlan cheap_plan()
{
    ExperimentPlan p;
    p.N = 60;
    p.n_fractions = {{1, 4}, {1, 2}};
    p.sparsity_ratios = {0.1, 0.3};
    p.trials = 2;
    p.jobs = 1;
    return p;
}

std::string records_csv(const std::vector<TrialRecord>& recs)
{
    std::ostringstream os;
    write_records_csv(os, recs);
    return os.str();
}

TrialRecord record(Algorithm a, Index n, Index k, int trial, bool ok)
{
    TrialRecord r;
    r.algorithm = a;
    r.N = 100;
    r.n = n;
    r.k = k;
    r.trial = trial;
    r.success = ok;
    r.products = 10;
    return r;
}

} // namespace

TEST(Plan, FullScalePreset)
{
    const auto p = ExperimentPlan::full_scale();
    EXPECT_EQ(p.N, 2000);
    ASSERT_EQ(p.n_fractions.size(), 3u);
    EXPECT_EQ(p.measurements(p.n_fractions[0]), 200);
    EXPECT_EQ(p.measurements(p.n_fractions[1]), 500);
    EXPECT_EQ(p.measurements(p.n_fractions[2]), 1000);
    EXPECT_EQ(p.sparsity_ratios, (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}));
    EXPECT_EQ(p.trials, 100);
    EXPECT_EQ(p.algorithms.size(), 4u);
    EXPECT_EQ(p.success_threshold, 1e-3);
    EXPECT_NO_THROW(p.validate());
}

TEST(Plan, ValidationNamesEveryProblem)
{
    ExperimentPlan p;
    p.trials = 0;
    p.algorithms.clear();
    try {
        p.validate();
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("trials"), std::string::npos);
        EXPECT_NE(msg.find("algorithms"), std::string::npos);
    }
    p = {};
    p.sparsity_ratios = {1.5};
    EXPECT_THROW(p.validate(), ValidationError);
    p = {};
    p.n_fractions = {{3, 2}};
    EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Parsing, AlgorithmsAndFractions)
{
    EXPECT_EQ(parse_algorithm("wspgl1"), Algorithm::wspgl1);
    EXPECT_FALSE(parse_algorithm("foo").has_value());
    const auto f = parse_fraction("1/4");
    ASSERT_TRUE(f.has_value());
    EXPECT_EQ(f->num, 1);
    EXPECT_EQ(f->den, 4);
    EXPECT_FALSE(parse_fraction("1/0").has_value());
    EXPECT_FALSE(parse_fraction("x").has_value());
}

TEST(Grid, SingleRecord)
{
    ExperimentPlan p = cheap_plan();
    p.n_fractions = {{1, 2}};
    p.sparsity_ratios = {0.1};
    p.trials = 1;
    p.algorithms = {Algorithm::spgl1};
    const auto recs = run_grid(p);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].n, 30);
    EXPECT_EQ(recs[0].k, 3);
    EXPECT_EQ(recs[0].seed, trial_seed(0, 30, 3, 0));
    EXPECT_TRUE(recs[0].success);
}

TEST(Grid, Cardinality)
{
    ExperimentPlan p = cheap_plan();
    p.n_fractions = {{1, 10}, {1, 4}, {1, 2}};
    p.sparsity_ratios = {0.1, 0.2, 0.3, 0.4, 0.5};
    p.trials = 1;
    std::size_t callbacks = 0;
    const auto recs = run_grid(p, [&](const CellProgress& c) {
        ++callbacks;
        EXPECT_EQ(c.cells_total, 15u);
    });
    EXPECT_EQ(recs.size(), 3u * 5u * 1u * 4u);
    EXPECT_EQ(callbacks, 15u);
    EXPECT_TRUE(std::is_sorted(recs.begin(), recs.end(), record_less));
}

TEST(Grid, DeterministicAcrossRunsAndThreads)
{
    ExperimentPlan p = cheap_plan();
    const std::string a = records_csv(run_grid(p));
    const std::string b = records_csv(run_grid(p));
    EXPECT_EQ(a, b);
    p.jobs = 3;
    EXPECT_EQ(records_csv(run_grid(p)), a);
}

TEST(Grid, SeedsShareInstanceAcrossAlgorithms)
{
    const auto recs = run_grid(cheap_plan());
    std::map<std::tuple<Index, Index, int>, std::uint64_t> seen;
    for (const auto& r : recs) {
        auto [it, inserted] = seen.emplace(std::tuple(r.n, r.k, r.trial), r.seed);
        EXPECT_EQ(it->second, r.seed);
    }
    EXPECT_NE(trial_seed(0, 10, 2, 0), trial_seed(0, 10, 2, 1));
    EXPECT_NE(trial_seed(1, 10, 2, 0), trial_seed(0, 10, 2, 0));
}

TEST(Summary, Rates)
{
    std::vector<TrialRecord> recs;
    for (int t = 0; t < 100; ++t) recs.push_back(record(Algorithm::spgl1, 40, 4, t, t < 37));
    for (int t = 0; t < 10; ++t) recs.push_back(record(Algorithm::wspgl1, 40, 4, t, false));
    for (int t = 0; t < 10; ++t) recs.push_back(record(Algorithm::wspgl1, 40, 8, t, true));
    const auto rows = summarize(recs);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_DOUBLE_EQ(rows[0].success_rate, 0.37);
    EXPECT_EQ(rows[0].trials, 100u);
    EXPECT_EQ(rows[1].success_rate, 0.0);
    EXPECT_EQ(rows[2].success_rate, 1.0);
    EXPECT_DOUBLE_EQ(rows[2].sparsity_ratio(), 0.2);
    EXPECT_THROW(summarize({}), ValidationError);
}

TEST(Summary, ProductRatio)
{
    std::vector<TrialRecord> recs{record(Algorithm::spgl1, 40, 4, 0, true), record(Algorithm::wspgl1, 40, 4, 0, true)};
    recs[1].products = 15;
    EXPECT_DOUBLE_EQ(product_ratio(recs, Algorithm::wspgl1, Algorithm::spgl1), 1.5);
    EXPECT_TRUE(std::isnan(product_ratio(recs, Algorithm::oracle, Algorithm::spgl1)));
}

TEST(Csv, FormatAndHeaders)
{
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-3), "0.001");
    EXPECT_EQ(format_double(2.0), "2");
    std::ostringstream os;
    write_records_csv(os, {record(Algorithm::oracle, 40, 4, 3, true)});
    EXPECT_EQ(os.str(), std::string(records_header) + "\noracle,100,40,4,3,0,1,0,0,10,0\n");
    std::ostringstream ss;
    write_summary_csv(ss, summarize({record(Algorithm::spgl1, 40, 4, 0, true)}));
    EXPECT_EQ(ss.str(), std::string(summary_header) + "\nspgl1,100,40,4,0.1,1,1,10,0,0\n");
}

TEST(SupportCheck, Interpretation)
{
    SparseSignal truth;
    truth.values = Vector::Zero(10);
    truth.values[2] = 1.0;
    truth.values[5] = -2.0;
    truth.values[7] = 1e-6;
    truth.support = {2, 5, 7};
    EXPECT_TRUE(support_identified(SupportEstimate{{5, 2, 9, 0}}, truth, 1e-3));
    EXPECT_FALSE(support_identified(SupportEstimate{{5, 9, 0, 1}}, truth, 1e-3));
    EXPECT_TRUE(support_identified(SupportEstimate{{5, 2}}, truth, 1e-3));
    EXPECT_FALSE(support_identified(SupportEstimate{{5, 9}}, truth, 1e-3));
}

TEST(Paths, TraceProperties)
{
    const auto inst = make_instance(100, 400, 20, 42, 1e-6);
    const auto paths = trace_paths(inst.op, inst.measurement.y, inst.measurement.epsilon, inst.signal.support);
    ASSERT_EQ(paths.size(), 3u);
    EXPECT_EQ(paths[0].algorithm, Algorithm::spgl1);
    for (const auto& p : paths) {
        ASSERT_FALSE(p.result.trace.points.empty());
        EXPECT_EQ(p.result.trace.points[0].tau, 0.0);
        EXPECT_DOUBLE_EQ(p.result.trace.points[0].residual_norm, inst.measurement.y.norm());
    }
    for (const auto& pt : paths[0].result.trace.points) EXPECT_FALSE(pt.weighted);
    for (const auto& pt : paths[2].result.trace.points) EXPECT_TRUE(pt.weighted);
    std::ostringstream os;
    write_trace_csv(os, paths[0].result.trace);
    EXPECT_EQ(os.str().substr(0, trace_header.size()), trace_header);
}
