// wspgl1 recover | phase | path
//
// Exit codes: 0 success, 1 usage or validation error, 2 a solver did not
// converge.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <wspgl1/wspgl1.hpp>

namespace fs = std::filesystem;
using namespace wspgl1;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_nonconverged = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw UsageError("--out: cannot create directory " + dir.string());
    }
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream os(probe);
        if (!os) throw UsageError("--out: directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

std::ofstream open_out(const fs::path& file)
{
    std::ofstream os(file, std::ios::binary);
    if (!os) throw UsageError("cannot write " + file.string());
    return os;
}

// Config files are flat "key = value" lines; '#' starts a comment and list
// values are whitespace separated. Keys are long flag names without "--".
using ConfigEntries = std::vector<std::pair<std::string, std::vector<std::string>>>;

ConfigEntries read_config(const fs::path& file)
{
    std::ifstream is(file);
    if (!is) throw UsageError("cannot read config file " + file.string());
    ConfigEntries entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = line.substr(0, line.find('#'));
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(file.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::istringstream key_in(line.substr(0, eq));
        std::istringstream value_in(line.substr(eq + 1));
        std::string key;
        key_in >> key;
        std::vector<std::string> values;
        for (std::string v; value_in >> v;) values.push_back(v);
        entries.emplace_back(key, values);
    }
    return entries;
}

// Appends the config file's entries as flags, skipping any flag already on
// the command line so that flags override the file.
std::vector<std::string> expand_config(std::vector<std::string> args, const std::string& config_flag)
{
    std::string file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == config_flag && i + 1 < args.size()) file = args[i + 1];
        if (args[i].rfind(config_flag + "=", 0) == 0) file = args[i].substr(config_flag.size() + 1);
    }
    if (file.empty()) return args;
    const auto given = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    std::vector<std::string> extra;
    for (const auto& [key, values] : read_config(file)) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (values.size() == 1) {
            extra.push_back(flag + "=" + values[0]);
        } else {
            extra.push_back(flag);
            extra.insert(extra.end(), values.begin(), values.end());
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

template <class T>
std::string join(const std::vector<T>& xs)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? " " : "") << xs[i];
    return os.str();
}

std::string num(double v) { return format_double(v); }

// recover ------------------------------------------------------------------

struct RecoverArgs {
    Index n = 50;
    Index N = 200;
    Index k = 5;
    std::uint64_t seed = 1;
    std::string algorithm = "wspgl1";
    double omega = 0.3;
    double epsilon_rel = 1e-6;
    double threshold = 1e-3;
    std::string output;

    void snapshot(std::ostream& os) const
    {
        os << "# recover\nn = " << n << "\nN = " << N << "\nk = " << k << "\nseed = " << seed
           << "\nalgorithm = " << algorithm << "\nomega = " << num(omega) << "\nepsilon-rel = " << num(epsilon_rel)
           << "\nthreshold = " << num(threshold) << '\n';
    }
};

int cmd_recover(const RecoverArgs& a)
{
    if (a.n > a.N) throw UsageError("--n must not exceed --N");
    if (a.k > a.N) throw UsageError("--k must not exceed --N");
    const auto alg = parse_algorithm(a.algorithm);
    if (!alg) throw UsageError("--algorithm: unknown algorithm '" + a.algorithm + "'");

    ExperimentPlan plan;
    plan.N = a.N;
    plan.epsilon_rel = a.epsilon_rel;
    plan.success_threshold = a.threshold;
    plan.driver.omega = a.omega;
    plan.driver.validate(a.n);

    const TrialInstance inst = make_instance(a.n, a.N, a.k, a.seed, a.epsilon_rel);
    const RecoveryResult res = run_algorithm(*alg, inst, plan);
    const double err = (res.x_hat - inst.signal.values).norm() / inst.signal.values.norm();

    std::cout << "algorithm=" << to_string(*alg) << " n=" << a.n << " N=" << a.N << " k=" << a.k
              << " seed=" << a.seed << " success=" << (err <= a.threshold ? 1 : 0)
              << " rel_error=" << format_double(err) << " newton_iters=" << res.newton_iters
              << " products=" << res.total_products << " converged=" << (res.converged ? 1 : 0) << '\n';

    if (!a.output.empty()) {
        const fs::path out(a.output);
        if (out.has_parent_path()) ensure_dir(out.parent_path());
        auto os = open_out(out);
        os << "index,x_hat\n";
        for (Index i = 0; i < res.x_hat.size(); ++i) {
            os << i << ',' << format_double(res.x_hat[i]) << '\n';
        }
        auto cfg = open_out((out.has_parent_path() ? out.parent_path() : fs::path(".")) / "run.cfg");
        a.snapshot(cfg);
    }
    return res.converged ? exit_ok : exit_nonconverged;
}

// phase --------------------------------------------------------------------

struct PhaseArgs {
    std::string preset = "full";
    Index N = 2000;
    std::vector<std::string> n_fractions{"1/10", "1/4", "1/2"};
    std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    int trials = 100;
    std::vector<std::string> algorithms{"spgl1", "wspgl1", "oracle", "irwl1"};
    std::uint64_t seed_base = 0;
    double threshold = 1e-3;
    double epsilon_rel = 1e-6;
    double omega = 0.3;
    int irw_iters = 4;
    double irw_delta = 0.1;
    unsigned jobs = 0;
    bool timing = false;
    std::string out = "phase_out";

    void snapshot(std::ostream& os) const
    {
        std::vector<std::string> ratio_text;
        for (double r : ratios) ratio_text.push_back(num(r));
        os << "# phase\npreset = " << preset << "\nN = " << N << "\nn-fractions = " << join(n_fractions)
           << "\nratios = " << join(ratio_text) << "\ntrials = " << trials << "\nalgorithms = " << join(algorithms)
           << "\nseed-base = " << seed_base << "\nthreshold = " << num(threshold) << "\nepsilon-rel = "
           << num(epsilon_rel) << "\nomega = " << num(omega) << "\nirw-iters = " << irw_iters
           << "\nirw-delta = " << num(irw_delta) << "\njobs = " << jobs << "\ntiming = " << (timing ? "true" : "false")
           << '\n';
    }
};

ExperimentPlan build_plan(const PhaseArgs& a)
{
    ExperimentPlan plan;
    plan.N = a.N;
    plan.n_fractions.clear();
    for (const auto& s : a.n_fractions) {
        const auto f = parse_fraction(s);
        if (!f) throw UsageError("--n-fractions: cannot parse '" + s + "'");
        plan.n_fractions.push_back(*f);
    }
    plan.sparsity_ratios = a.ratios;
    plan.trials = a.trials;
    plan.algorithms.clear();
    for (const auto& s : a.algorithms) {
        if (s.empty()) continue;
        const auto alg = parse_algorithm(s);
        if (!alg) throw UsageError("--algorithms: unknown algorithm '" + s + "'");
        plan.algorithms.push_back(*alg);
    }
    if (plan.algorithms.empty()) throw UsageError("--algorithms: list is empty");
    plan.seed_base = a.seed_base;
    plan.success_threshold = a.threshold;
    plan.epsilon_rel = a.epsilon_rel;
    plan.driver.omega = a.omega;
    plan.irw.outer_iters = a.irw_iters;
    plan.irw.delta = a.irw_delta;
    plan.jobs = a.jobs;
    plan.record_wall_time = a.timing;
    plan.validate();
    for (const auto& f : plan.n_fractions) plan.driver.validate(plan.measurements(f));
    plan.irw.validate();
    return plan;
}

void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << std::left << std::setw(8) << "alg" << std::right << std::setw(7) << "n" << std::setw(6) << "k"
       << std::setw(7) << "k/n" << std::setw(9) << "success" << std::setw(14) << "mean_products" << std::setw(13)
       << "mean_error" << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(8) << to_string(r.algorithm) << std::right << std::setw(7) << r.n
           << std::setw(6) << r.k << std::setw(7) << std::fixed << std::setprecision(2) << r.sparsity_ratio()
           << std::setw(9) << r.success_rate << std::setw(14) << std::setprecision(1) << r.mean_products
           << std::setw(13) << std::scientific << std::setprecision(2) << r.mean_error << '\n'
           << std::defaultfloat;
    }
}

int cmd_phase(const PhaseArgs& a)
{
    const ExperimentPlan plan = build_plan(a);
    const fs::path out(a.out);
    ensure_dir(out);
    {
        auto cfg = open_out(out / "run.cfg");
        a.snapshot(cfg);
    }

    const auto records = run_grid(plan, [](const CellProgress& c) {
        std::cerr << "[" << c.cells_done << "/" << c.cells_total << "] n=" << c.n << " k=" << c.k << " done\n";
    });
    const auto rows = summarize(records);
    {
        auto os = open_out(out / "records.csv");
        write_records_csv(os, records);
    }
    {
        auto os = open_out(out / "summary.csv");
        write_summary_csv(os, rows);
    }
    print_summary(std::cout, rows);
    const double ratio = product_ratio(records, Algorithm::wspgl1, Algorithm::spgl1);
    if (!std::isnan(ratio)) {
        std::cout << "product ratio wspgl1/spgl1: " << format_double(ratio) << '\n';
    }
    std::size_t nonconverged = 0;
    for (const auto& r : records) nonconverged += r.converged ? 0 : 1;
    if (nonconverged > 0) {
        std::cout << "non-converged runs: " << nonconverged << '\n';
        return exit_nonconverged;
    }
    return exit_ok;
}

void apply_desk_preset(PhaseArgs& a, const CLI::App& sub)
{
    auto unset = [&](const char* name) { return sub.get_option(name)->count() == 0; };
    if (unset("--N")) a.N = 400;
    if (unset("--trials")) a.trials = 50;
    if (unset("--algorithms")) a.algorithms = {"spgl1", "wspgl1", "irwl1"};
}

// path ---------------------------------------------------------------------

struct PathArgs {
    Index n = 100;
    Index N = 400;
    Index k = 20;
    std::uint64_t seed = 1;
    double omega = 0.3;
    double epsilon_rel = 1e-6;
    double root_tol = 1e-9;
    std::string out = "path_out";

    void snapshot(std::ostream& os) const
    {
        os << "# path\nn = " << n << "\nN = " << N << "\nk = " << k << "\nseed = " << seed << "\nomega = "
           << num(omega) << "\nepsilon-rel = " << num(epsilon_rel) << "\nroot-tol = " << num(root_tol) << '\n';
    }
};

int cmd_path(const PathArgs& a)
{
    if (a.n > a.N) throw UsageError("--n must not exceed --N");
    if (a.k > a.N) throw UsageError("--k must not exceed --N");
    DriverConfig cfg;
    cfg.omega = a.omega;
    cfg.root_tol = a.root_tol;
    cfg.validate(a.n);
    const fs::path out(a.out);
    ensure_dir(out);
    {
        auto snap = open_out(out / "run.cfg");
        a.snapshot(snap);
    }

    const TrialInstance inst = make_instance(a.n, a.N, a.k, a.seed, a.epsilon_rel);
    const auto paths = trace_paths(inst.op, inst.measurement.y, inst.measurement.epsilon, inst.signal.support, cfg);
    write_trace_files(out, paths);

    bool all_converged = true;
    for (const auto& p : paths) {
        const auto& res = p.result;
        const double err = (res.x_hat - inst.signal.values).norm() / inst.signal.values.norm();
        const auto& last = res.trace.points.back();
        std::cout << to_string(p.algorithm) << ": points=" << res.trace.points.size()
                  << " final_tau=" << format_double(last.tau) << " final_residual=" << format_double(last.residual_norm)
                  << " rel_error=" << format_double(err) << " products=" << res.total_products << '\n';
        all_converged = all_converged && res.converged;
    }
    return all_converged ? exit_ok : exit_nonconverged;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse recovery by (weighted) SPGL1"};
    app.require_subcommand(1);

    RecoverArgs ra;
    auto* recover = app.add_subcommand("recover", "Recover one planted sparse signal");
    recover->add_option("--config", "Read options from a key = value file")->check(CLI::ExistingFile);
    recover->add_option("--n", ra.n, "Measurements")->check(CLI::PositiveNumber)->capture_default_str();
    recover->add_option("--N", ra.N, "Signal length")->check(CLI::PositiveNumber)->capture_default_str();
    recover->add_option("--k", ra.k, "Sparsity")->check(CLI::PositiveNumber)->capture_default_str();
    recover->add_option("--seed", ra.seed, "Instance seed")->capture_default_str();
    recover->add_option("--algorithm", ra.algorithm, "spgl1, wspgl1, oracle or irwl1")->capture_default_str();
    recover->add_option("--omega", ra.omega, "Weight on the support estimate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    recover->add_option("--epsilon-rel", ra.epsilon_rel, "epsilon / ||y||")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    recover->add_option("--threshold", ra.threshold, "Relative error counted as success")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    recover->add_option("--output", ra.output, "Write x_hat as CSV to this file");

    PhaseArgs pa;
    auto* phase = app.add_subcommand("phase", "Success-rate grid over measurements and sparsity");
    phase->add_option("--plan-file", "Read the plan from a key = value file")->check(CLI::ExistingFile);
    phase->add_option("--preset", pa.preset, "full (N=2000, 100 trials) or desk (N=400, 50 trials)")
        ->check(CLI::IsMember({"full", "desk"}))
        ->capture_default_str();
    phase->add_option("--N", pa.N, "Signal length")->check(CLI::PositiveNumber)->capture_default_str();
    phase->add_option("--n-fractions", pa.n_fractions, "n / N values such as 1/10")->capture_default_str();
    phase->add_option("--ratios", pa.ratios, "k / n values")->capture_default_str();
    phase->add_option("--trials", pa.trials, "Trials per cell")->check(CLI::PositiveNumber)->capture_default_str();
    phase->add_option("--algorithms", pa.algorithms, "Subset of spgl1 wspgl1 oracle irwl1")->capture_default_str();
    phase->add_option("--seed-base", pa.seed_base, "Base seed")->capture_default_str();
    phase->add_option("--threshold", pa.threshold, "Relative error counted as success")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    phase->add_option("--epsilon-rel", pa.epsilon_rel, "epsilon / ||y||")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    phase->add_option("--omega", pa.omega, "Weight on the support estimate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    phase->add_option("--irw-iters", pa.irw_iters, "IRWL1 outer passes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    phase->add_option("--irw-delta", pa.irw_delta, "IRWL1 stability constant")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    phase->add_option("--jobs", pa.jobs, "Worker threads (0: all cores)")->capture_default_str();
    phase->add_flag("--timing", pa.timing, "Record wall time per trial (makes the CSV non-reproducible)");
    phase->add_option("--out", pa.out, "Output directory")->capture_default_str();

    PathArgs ta;
    auto* path = app.add_subcommand("path", "Pareto traces of SPGL1, WSPGL1 and oracle-weighted SPGL1");
    path->add_option("--config", "Read options from a key = value file")->check(CLI::ExistingFile);
    path->add_option("--n", ta.n, "Measurements")->check(CLI::PositiveNumber)->capture_default_str();
    path->add_option("--N", ta.N, "Signal length")->check(CLI::PositiveNumber)->capture_default_str();
    path->add_option("--k", ta.k, "Sparsity")->check(CLI::PositiveNumber)->capture_default_str();
    path->add_option("--seed", ta.seed, "Instance seed")->capture_default_str();
    path->add_option("--omega", ta.omega, "Weight on the support estimate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    path->add_option("--epsilon-rel", ta.epsilon_rel, "epsilon / ||y||")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    path->add_option("--root-tol", ta.root_tol, "Root test | ||r|| - eps | <= root-tol * max(1, ||y||)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    path->add_option("--out", ta.out, "Output directory")->capture_default_str();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (!args.empty()) args = expand_config(args, args[0] == "phase" ? "--plan-file" : "--config");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (recover->parsed()) return cmd_recover(ra);
        if (path->parsed()) return cmd_path(ta);
        if (pa.preset == "desk") apply_desk_preset(pa, *phase);
        return cmd_phase(pa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
}
