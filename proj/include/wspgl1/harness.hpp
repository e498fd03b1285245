#pragma once

// Recovery experiments over a (measurements, sparsity) grid: seeded trial
// generation, parallel execution, success accounting and CSV output.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "baselines.hpp"
#include "drivers.hpp"
#include "errors.hpp"
#include "linop.hpp"
#include "norms.hpp"

namespace wspgl1 {

enum class Algorithm { spgl1, wspgl1, oracle, irwl1 };

inline constexpr std::array<Algorithm, 4> all_algorithms{Algorithm::spgl1, Algorithm::wspgl1, Algorithm::oracle,
                                                         Algorithm::irwl1};

inline const char* to_string(Algorithm a) noexcept
{
    switch (a) {
    case Algorithm::spgl1: return "spgl1";
    case Algorithm::wspgl1: return "wspgl1";
    case Algorithm::oracle: return "oracle";
    case Algorithm::irwl1: return "irwl1";
    }
    return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name)
{
    for (Algorithm a : all_algorithms) {
        if (name == to_string(a)) {
            return a;
        }
    }
    return std::nullopt;
}

struct Fraction {
    int num = 1;
    int den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

/// Accepts "p/q" or a plain positive integer divisor-free value like "1".
inline std::optional<Fraction> parse_fraction(std::string_view text)
{
    const auto slash = text.find('/');
    Fraction f;
    auto parse_int = [](std::string_view s, int& out) {
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && ptr == s.data() + s.size();
    };
    if (slash == std::string_view::npos) {
        if (!parse_int(text, f.num)) return std::nullopt;
        f.den = 1;
    } else if (!parse_int(text.substr(0, slash), f.num) || !parse_int(text.substr(slash + 1), f.den)) {
        return std::nullopt;
    }
    if (f.den <= 0) return std::nullopt;
    return f;
}

struct ExperimentPlan {
    Index N = 2000;
    std::vector<Fraction> n_fractions{{1, 10}, {1, 4}, {1, 2}};
    std::vector<double> sparsity_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    int trials = 100;
    std::vector<Algorithm> algorithms{Algorithm::spgl1, Algorithm::wspgl1, Algorithm::oracle, Algorithm::irwl1};
    std::uint64_t seed_base = 0;
    double success_threshold = 1e-3;
    /// Noiseless runs use epsilon = epsilon_rel * ||y||_2.
    double epsilon_rel = 1e-6;
    DriverConfig driver;
    IrwConfig irw;
    /// Worker threads; 0 means std::thread::hardware_concurrency().
    unsigned jobs = 0;
    /// Off by default so the record CSV is a pure function of the plan.
    bool record_wall_time = false;

    /// Throws ValidationError naming every offending field.
    void validate() const
    {
        std::vector<std::string> bad;
        if (N <= 0) bad.push_back("N must be positive");
        if (n_fractions.empty()) bad.push_back("n_fractions is empty");
        for (const auto& f : n_fractions) {
            if (!(f.value() > 0.0 && f.value() <= 1.0)) bad.push_back("n_fractions entry " + f.str() + " outside (0, 1]");
            else if (measurements(f) <= 0) bad.push_back("n_fractions entry " + f.str() + " gives n = 0");
        }
        if (sparsity_ratios.empty()) bad.push_back("sparsity_ratios is empty");
        for (double r : sparsity_ratios) {
            if (!(r > 0.0 && r < 1.0)) bad.push_back("sparsity_ratios entry " + std::to_string(r) + " outside (0, 1)");
        }
        if (trials < 1) bad.push_back("trials must be >= 1");
        if (algorithms.empty()) bad.push_back("algorithms is empty");
        if (!(success_threshold > 0.0)) bad.push_back("success_threshold must be positive");
        if (!(epsilon_rel >= 0.0 && epsilon_rel < 1.0)) bad.push_back("epsilon_rel must lie in [0, 1)");
        if (!bad.empty()) {
            std::string msg = "invalid experiment plan:";
            for (const auto& b : bad) msg += "\n  - " + b;
            throw ValidationError(msg);
        }
    }

    Index measurements(const Fraction& f) const
    {
        return static_cast<Index>(std::llround(static_cast<double>(N) * f.value()));
    }

    static Index sparsity(Index n, double ratio)
    {
        return std::max<Index>(1, static_cast<Index>(std::llround(ratio * static_cast<double>(n))));
    }

    /// N = 2000, n in {N/10, N/4, N/2}, k/n in {0.1, ..., 0.5}, 100 trials.
    static ExperimentPlan full_scale() { return ExperimentPlan{}; }
};

/// Seed of trial `trial` in cell (n, k): seed_base XOR a SplitMix64 chain
/// over (n, k, trial). The algorithm is not an input, so every algorithm in
/// a trial sees the same operator and signal.
inline std::uint64_t trial_seed(std::uint64_t seed_base, Index n, Index k, int trial)
{
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(n));
    h = splitmix64(h ^ static_cast<std::uint64_t>(k));
    h = splitmix64(h ^ static_cast<std::uint64_t>(trial));
    return seed_base ^ h;
}

/// The signal stream is derived from the trial seed so it differs from the
/// operator stream.
inline std::uint64_t signal_seed(std::uint64_t trial_seed_value)
{
    return splitmix64(trial_seed_value ^ 0x5bd1e9955bd1e995ULL);
}

struct TrialRecord {
    Algorithm algorithm = Algorithm::spgl1;
    Index N = 0;
    Index n = 0;
    Index k = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    bool success = false;
    double rel_error = 0.0;
    int newton_iters = 0;
    std::size_t products = 0;
    double wall_time = 0.0;
    bool converged = false;
    /// Support check on x_hat's top-k_est entries; see support_identified().
    bool support_identified = false;
};

/// Top-k_est of x_hat against the true support T. When k_est >= |T| every
/// entry of T with |x_i| >= threshold * ||x||_2 must be among the top k_est;
/// when k_est < |T| the top k_est must all lie in T.
inline bool support_identified(const SupportEstimate& estimate, const SparseSignal& truth, double threshold)
{
    const auto in_truth = [&](Index i) {
        return std::binary_search(truth.support.begin(), truth.support.end(), i);
    };
    if (estimate.size() < truth.support.size()) {
        return std::all_of(estimate.indices.begin(), estimate.indices.end(), in_truth);
    }
    const double floor = threshold * truth.values.norm();
    for (Index i : truth.support) {
        if (std::abs(truth.values[i]) >= floor && !estimate.contains(i)) {
            return false;
        }
    }
    return true;
}

struct TrialInstance {
    MeasurementOperator op;
    SparseSignal signal;
    Measurement measurement;
    std::uint64_t seed;
};

inline TrialInstance make_instance(Index n, Index N, Index k, std::uint64_t seed, double epsilon_rel)
{
    MeasurementOperator op = gaussian_operator(n, N, seed);
    SparseSignal signal = sparse_signal(N, k, signal_seed(seed));
    Measurement m = measure(op, signal);
    m.epsilon = epsilon_rel * m.y.norm();
    return TrialInstance{std::move(op), std::move(signal), std::move(m), seed};
}

inline IrwConfig irw_config(const ExperimentPlan& plan)
{
    IrwConfig irw = plan.irw;
    irw.driver = plan.driver;
    return irw;
}

inline RecoveryResult run_algorithm(Algorithm algorithm, const TrialInstance& inst, const ExperimentPlan& plan)
{
    const auto& y = inst.measurement.y;
    const double eps = inst.measurement.epsilon;
    switch (algorithm) {
    case Algorithm::spgl1: return solve_spgl1(inst.op, y, eps, plan.driver);
    case Algorithm::wspgl1: return solve_wspgl1(inst.op, y, eps, plan.driver);
    case Algorithm::oracle: return solve_oracle_weighted(inst.op, y, eps, inst.signal.support, plan.driver);
    case Algorithm::irwl1: return solve_irwl1(inst.op, y, eps, irw_config(plan));
    }
    throw ValidationError("unknown algorithm");
}

/// Sort key shared by records and summaries.
inline bool record_less(const TrialRecord& a, const TrialRecord& b)
{
    return std::tuple(static_cast<int>(a.algorithm), a.n, a.k, a.trial)
           < std::tuple(static_cast<int>(b.algorithm), b.n, b.k, b.trial);
}

struct CellProgress {
    Index n = 0;
    Index k = 0;
    std::size_t cells_done = 0;
    std::size_t cells_total = 0;
};

/// Runs every (n, k, trial, algorithm) combination of the plan. Output is
/// sorted by (algorithm, n, k, trial) and independent of thread scheduling.
inline std::vector<TrialRecord> run_grid(const ExperimentPlan& plan,
                                         const std::function<void(const CellProgress&)>& on_cell_done = {})
{
    plan.validate();

    struct Task {
        Index n, k;
        int trial;
        std::size_t cell;
    };
    std::vector<Task> tasks;
    std::vector<std::pair<Index, Index>> cells;
    for (const auto& frac : plan.n_fractions) {
        const Index n = plan.measurements(frac);
        for (double ratio : plan.sparsity_ratios) {
            const Index k = ExperimentPlan::sparsity(n, ratio);
            cells.emplace_back(n, k);
            for (int t = 0; t < plan.trials; ++t) {
                tasks.push_back({n, k, t, cells.size() - 1});
            }
        }
    }

    std::vector<std::vector<TrialRecord>> per_task(tasks.size());
    std::vector<int> remaining(cells.size(), plan.trials);
    std::size_t cells_done = 0;
    std::mutex progress_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) {
                return;
            }
            const Task& task = tasks[i];
            try {
                const std::uint64_t seed = trial_seed(plan.seed_base, task.n, task.k, task.trial);
                const TrialInstance inst = make_instance(task.n, plan.N, task.k, seed, plan.epsilon_rel);
                const double x_norm = inst.signal.values.norm();
                // IRWL1's first pass is the SPGL1 solve; reuse it when both run.
                std::optional<std::pair<RecoveryResult, double>> spgl1_run;
                for (Algorithm alg : plan.algorithms) {
                    const auto start = std::chrono::steady_clock::now();
                    RecoveryResult res;
                    double carried_time = 0.0;
                    if (alg == Algorithm::irwl1 && spgl1_run) {
                        res = solve_irwl1_from(inst.op, inst.measurement.y, inst.measurement.epsilon,
                                               spgl1_run->first, irw_config(plan));
                        carried_time = spgl1_run->second;
                    } else {
                        res = run_algorithm(alg, inst, plan);
                    }
                    const auto stop = std::chrono::steady_clock::now();
                    const double elapsed = std::chrono::duration<double>(stop - start).count() + carried_time;
                    if (alg == Algorithm::spgl1) {
                        spgl1_run.emplace(res, elapsed);
                    }

                    TrialRecord rec;
                    rec.algorithm = alg;
                    rec.N = plan.N;
                    rec.n = task.n;
                    rec.k = task.k;
                    rec.trial = task.trial;
                    rec.seed = seed;
                    rec.rel_error = (res.x_hat - inst.signal.values).norm() / x_norm;
                    rec.success = rec.rel_error <= plan.success_threshold;
                    rec.newton_iters = res.newton_iters;
                    rec.products = res.total_products;
                    rec.converged = res.converged;
                    rec.wall_time = plan.record_wall_time ? elapsed : 0.0;
                    rec.support_identified
                        = support_identified(res.final_support, inst.signal, plan.success_threshold);
                    per_task[i].push_back(rec);
                }
            } catch (...) {
                std::lock_guard lock(progress_mutex);
                if (!failure) failure = std::current_exception();
                next.store(tasks.size());
                return;
            }
            std::lock_guard lock(progress_mutex);
            if (--remaining[task.cell] == 0) {
                ++cells_done;
                if (on_cell_done) {
                    on_cell_done({task.n, task.k, cells_done, cells.size()});
                }
            }
        }
    };

    unsigned jobs = plan.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.jobs;
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, tasks.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<TrialRecord> records;
    records.reserve(tasks.size() * plan.algorithms.size());
    for (auto& v : per_task) {
        records.insert(records.end(), v.begin(), v.end());
    }
    std::sort(records.begin(), records.end(), record_less);
    return records;
}

struct SummaryRow {
    Algorithm algorithm = Algorithm::spgl1;
    Index N = 0;
    Index n = 0;
    Index k = 0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    double mean_products = 0.0;
    double mean_error = 0.0;
    double mean_newton_iters = 0.0;

    double sparsity_ratio() const noexcept { return static_cast<double>(k) / static_cast<double>(n); }
};

/// One row per (algorithm, n, k) cell, sorted like the records.
inline std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records)
{
    if (records.empty()) {
        throw ValidationError("summarize: no records");
    }
    std::map<std::tuple<int, Index, Index>, SummaryRow> cells;
    for (const auto& r : records) {
        auto& row = cells[{static_cast<int>(r.algorithm), r.n, r.k}];
        row.algorithm = r.algorithm;
        row.N = r.N;
        row.n = r.n;
        row.k = r.k;
        ++row.trials;
        row.successes += r.success ? 1 : 0;
        row.mean_products += static_cast<double>(r.products);
        row.mean_error += r.rel_error;
        row.mean_newton_iters += r.newton_iters;
    }
    std::vector<SummaryRow> rows;
    rows.reserve(cells.size());
    for (auto& [key, row] : cells) {
        const double count = static_cast<double>(row.trials);
        row.success_rate = static_cast<double>(row.successes) / count;
        row.mean_products /= count;
        row.mean_error /= count;
        row.mean_newton_iters /= count;
        rows.push_back(row);
    }
    return rows;
}

/// Mean products of `a` divided by mean products of `b` over all records.
inline double product_ratio(const std::vector<TrialRecord>& records, Algorithm a, Algorithm b)
{
    double sum_a = 0.0, sum_b = 0.0;
    std::size_t count_a = 0, count_b = 0;
    for (const auto& r : records) {
        if (r.algorithm == a) {
            sum_a += static_cast<double>(r.products);
            ++count_a;
        } else if (r.algorithm == b) {
            sum_b += static_cast<double>(r.products);
            ++count_b;
        }
    }
    if (count_a == 0 || count_b == 0 || sum_b == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return (sum_a / static_cast<double>(count_a)) / (sum_b / static_cast<double>(count_b));
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline constexpr std::string_view records_header
    = "algorithm,N,n,k,trial,seed,success,rel_error,newton_iters,products,wall_time_s";

inline void write_records_csv(std::ostream& os, const std::vector<TrialRecord>& records)
{
    os << records_header << '\n';
    for (const auto& r : records) {
        os << to_string(r.algorithm) << ',' << r.N << ',' << r.n << ',' << r.k << ',' << r.trial << ',' << r.seed
           << ',' << (r.success ? 1 : 0) << ',' << format_double(r.rel_error) << ',' << r.newton_iters << ','
           << r.products << ',' << format_double(r.wall_time) << '\n';
    }
}

inline constexpr std::string_view summary_header
    = "algorithm,N,n,k,k_over_n,trials,success_rate,mean_products,mean_error,mean_newton_iters";

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << summary_header << '\n';
    for (const auto& r : rows) {
        os << to_string(r.algorithm) << ',' << r.N << ',' << r.n << ',' << r.k << ','
           << format_double(r.sparsity_ratio()) << ',' << r.trials << ',' << format_double(r.success_rate) << ','
           << format_double(r.mean_products) << ',' << format_double(r.mean_error) << ','
           << format_double(r.mean_newton_iters) << '\n';
    }
}

inline constexpr std::string_view trace_header = "point_index,tau,residual_norm,lambda,weighted";

inline void write_trace_csv(std::ostream& os, const ParetoTrace& trace)
{
    os << trace_header << '\n';
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
        const auto& p = trace.points[i];
        os << i << ',' << format_double(p.tau) << ',' << format_double(p.residual_norm) << ','
           << format_double(p.lambda) << ',' << (p.weighted ? 1 : 0) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Solution paths

struct PathResult {
    Algorithm algorithm;
    RecoveryResult result;
};

/// Runs SPGL1, WSPGL1 and oracle-weighted SPGL1 on one instance. Trace tau
/// values are ||x||_1 for SPGL1 and ||x||_{1,w} for the weighted drivers.
inline std::vector<PathResult> trace_paths(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y,
                                           double epsilon, std::span<const Index> true_support,
                                           const DriverConfig& cfg = {})
{
    std::vector<PathResult> out;
    out.push_back({Algorithm::spgl1, solve_spgl1(op, y, epsilon, cfg)});
    out.push_back({Algorithm::wspgl1, solve_wspgl1(op, y, epsilon, cfg)});
    out.push_back({Algorithm::oracle, solve_oracle_weighted(op, y, epsilon, true_support, cfg)});
    return out;
}

/// Writes `<dir>/<algorithm>_trace.csv` per path; returns the file paths.
inline std::vector<std::filesystem::path> write_trace_files(const std::filesystem::path& dir,
                                                            const std::vector<PathResult>& paths)
{
    std::vector<std::filesystem::path> files;
    for (const auto& p : paths) {
        auto file = dir / (std::string(to_string(p.algorithm)) + "_trace.csv");
        std::ofstream os(file, std::ios::binary);
        if (!os) {
            throw std::runtime_error("cannot write " + file.string());
        }
        write_trace_csv(os, p.result.trace);
        files.push_back(std::move(file));
    }
    return files;
}

} // namespace wspgl1
