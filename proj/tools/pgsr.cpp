#include "pgsr/bench.hpp"
#include "pgsr/config.hpp"
#include "pgsr/errors.hpp"
#include "pgsr/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

namespace fs = std::filesystem;
using namespace pgsr;

namespace {

enum ExitCode { kOk = 0, kRuntimeError = 1, kConfigError = 2, kIoError = 3 };

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

ExperimentConfig resolve_config(const CommonOptions& o)
{
    nlohmann::json doc = nlohmann::json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) {
            throw InvalidConfig("cannot read config file '" + o.config_path + "'");
        }
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
        }
    }
    for (const auto& s : o.overrides) {
        apply_override(doc, s);
    }
    if (o.seed) doc["seed"] = *o.seed;
    if (o.out) doc["output_dir"] = *o.out;
    if (o.workers) doc["workers"] = *o.workers;
    return parse_config(doc);
}

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& res)
{
    for (const auto& name : cfg.benchmarks) {
        const Aggregate& a = res.aggregates.at(name);
        std::printf("%s %s: recovery %.3f (%d runs), mean steps %.1f, mean length %.2f\n", name.c_str(),
                    std::string(variant_name(cfg.variant)).c_str(), a.recovery_rate, a.n_runs, a.mean_steps,
                    a.mean_length);
    }
}

ExperimentResult execute(const ExperimentConfig& cfg, const fs::path& out)
{
    std::mutex error_mutex;
    std::string write_error;
    const int hidden = cfg.train.hidden_size;
    auto observer = [&](const RunRecord& rec, const RunResult& result, const std::vector<StepReport>& steps) {
        try {
            write_run(run_directory(out, rec), rec, result, steps, find_benchmark(rec.benchmark).library, hidden);
        } catch (const std::exception& e) {
            std::lock_guard lock(error_mutex);
            write_error = e.what();
        }
    };
    ExperimentResult res = run_experiment(cfg.to_spec(), observer);
    if (!write_error.empty()) {
        throw IoError(write_error);
    }
    return res;
}

int cmd_run(const CommonOptions& o)
{
    const ExperimentConfig cfg = resolve_config(o);
    const fs::path out = cfg.output_dir;
    const ExperimentResult res = execute(cfg, out);
    write_results(out, cfg, res);
    print_summary(cfg, res);
    return kOk;
}

int cmd_trace(const std::string& dir)
{
    const auto runs = find_run_directories(dir);
    if (runs.empty()) {
        throw IoError("no run directories with step records under '" + dir + "'");
    }
    for (const auto& r : runs) {
        const TraceExport t = export_traces(r);
        std::printf("%s: %zu entropy rows, %zu histogram rows\n", r.string().c_str(), t.entropy_rows, t.histogram_rows);
    }
    return kOk;
}

int cmd_grid(CommonOptions o, const std::string& variant, const std::string& benchmark, int budget)
{
    o.overrides.push_back("variant=" + variant);
    o.overrides.push_back("benchmarks=" + benchmark);
    o.overrides.push_back("n_runs=" + std::to_string(budget));
    const ExperimentConfig base = resolve_config(o);
    const fs::path out = fs::path(base.output_dir) / ("grid-" + benchmark + "-" + variant);

    std::vector<GridRow> rows;
    for (const TrainConfig& t : hyperparameter_grid(base.variant, base.train)) {
        ExperimentConfig cfg = base;
        cfg.entropy_weight = t.entropy_weight;
        cfg.entropy_decay = t.entropy_decay;
        ExperimentSpec spec = cfg.to_spec();
        const ExperimentResult res = run_experiment(spec);
        rows.push_back({t.entropy_weight, t.entropy_decay, res.overall});
        std::printf("eta=%g gamma=%g: recovery %.3f, mean steps %.1f, mean length %.2f\n", t.entropy_weight,
                    t.entropy_decay, res.overall.recovery_rate, res.overall.mean_steps, res.overall.mean_length);
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream csv(out / "grid.csv");
    if (!csv) {
        throw IoError("cannot write '" + (out / "grid.csv").string() + "'");
    }
    csv.precision(17);
    csv << "entropy_weight,entropy_decay,n_runs,recovery_rate,mean_steps,mean_length\n";
    for (const auto& r : rows) {
        csv << r.entropy_weight << ',' << r.entropy_decay << ',' << r.result.n_runs << ',' << r.result.recovery_rate
            << ',' << r.result.mean_steps << ',' << r.result.mean_length << '\n';
    }
    const GridRow& best = rows[best_grid_row(rows)];
    std::printf("best: eta=%g gamma=%g (recovery %.3f, mean steps %.1f)\n", best.entropy_weight, best.entropy_decay,
                best.result.recovery_rate, best.result.mean_steps);
    return kOk;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required)
{
    auto* c = cmd->add_option("--config,-c", o.config_path, "Experiment config (JSON)");
    if (config_required) {
        c->required()->check(CLI::ExistingFile);
    }
    cmd->add_option("--set", o.overrides, "Override a config value, e.g. --set train.batch_size=500");
    cmd->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "Base seed");
    cmd->add_option_function<std::string>("--out,-o", [&o](const std::string& v) { o.out = v; }, "Output directory");
    cmd->add_option_function<int>("--workers,-j", [&o](int v) { o.workers = v; }, "Concurrent runs");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Policy-gradient symbolic regression with hierarchical entropy and soft length priors"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
    add_common(run, run_opts, true);

    std::string trace_dir;
    auto* trace = app.add_subcommand("trace", "Export entropy and length-histogram traces as CSV");
    trace->add_option("run_dir", trace_dir, "Run directory (or any directory above run directories)")->required();

    CommonOptions grid_opts;
    std::string variant;
    std::string benchmark;
    int budget = 2;
    auto* grid = app.add_subcommand("grid", "Hyperparameter grid over eta (and gamma)");
    add_common(grid, grid_opts, false);
    grid->add_option("--variant", variant, "SE, HE, SLP or SLP+HE")->required();
    grid->add_option("--benchmark", benchmark, "Benchmark name, e.g. Nguyen-1")->required();
    grid->add_option("--budget", budget, "Runs per grid point")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_opts);
        if (*trace) return cmd_trace(trace_dir);
        if (*grid) return cmd_grid(grid_opts, variant, benchmark, budget);
    } catch (const InvalidConfig& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIoError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeError;
    }
    return kRuntimeError;
}
