#include "pgsr/bench.hpp"

#include "pgsr/errors.hpp"
#include "pgsr/rng.hpp"

#include <cmath>

namespace pgsr {

Dataset Benchmark::dataset() const
{
    Inputs x = sample_inputs(domain, n_samples, data_seed);
    Predictions p = evaluate(truth, x, library);
    if (!p.all_finite()) {
        throw Error(name + ": ground truth is non-finite on its training data");
    }
    return Dataset(std::move(x), std::move(p.values));
}

namespace {

// x^n as a right-nested product.
std::string power(const std::string& x, int n)
{
    std::string s;
    for (int i = 1; i < n; ++i) {
        s += "mul " + x + " ";
    }
    return s + x;
}

// x^n + x^(n-1) + ... + x
std::string poly(int n)
{
    std::string s;
    for (int i = n; i > 1; --i) {
        s += "add ";
    }
    for (int i = n; i >= 1; --i) {
        s += power("x1", i) + " ";
    }
    return s;
}

Benchmark make(int index, const std::string& prefix, std::vector<Range> domain, bool sqrt = false)
{
    Library lib = Library::standard(static_cast<int>(domain.size()), sqrt);
    TokenSequence truth = lib.parse(prefix);
    Benchmark b{"Nguyen-" + std::to_string(index), std::move(lib), std::move(truth), std::move(domain), 20,
                0x4e67'7579'656e'0000ULL + static_cast<std::uint64_t>(index)};
    return b;
}

} // namespace

std::vector<Benchmark> nguyen_suite()
{
    const std::vector<Range> u11{{-1.0, 1.0}};
    const std::vector<Range> u01_2{{0.0, 1.0}, {0.0, 1.0}};
    std::vector<Benchmark> s;
    s.push_back(make(1, poly(3), u11));
    s.push_back(make(2, poly(4), u11));
    s.push_back(make(3, poly(5), u11));
    s.push_back(make(4, poly(6), u11));
    // sin(x^2) cos(x) - 1
    s.push_back(make(5, "sub mul sin mul x1 x1 cos x1 div x1 x1", u11));
    // sin(x) + sin(x + x^2)
    s.push_back(make(6, "add sin x1 sin add x1 mul x1 x1", u11));
    // log(x + 1) + log(x^2 + 1)
    s.push_back(make(7, "add log add x1 div x1 x1 log add mul x1 x1 div x1 x1", {{0.0, 2.0}}));
    s.push_back(make(8, "sqrt x1", {{0.0, 4.0}}, true));
    // sin(x) + sin(y^2)
    s.push_back(make(9, "add sin x1 sin mul x2 x2", u01_2));
    // 2 sin(x) cos(y)
    s.push_back(make(10, "add mul sin x1 cos x2 mul sin x1 cos x2", u01_2));
    // x^y
    s.push_back(make(11, "exp mul x2 log x1", u01_2));
    // x^4 - x^3 + y^2 / 2 - y, with y^2 / 2 = y^3 / (y + y)
    s.push_back(make(12, "sub add sub " + power("x1", 4) + " " + power("x1", 3) + " div " + power("x2", 3) +
                             " add x2 x2 x2",
                     u01_2));
    return s;
}

const Benchmark& find_benchmark(std::string_view name)
{
    static const std::vector<Benchmark> suite = nguyen_suite();
    for (const auto& b : suite) {
        if (b.name == name) {
            return b;
        }
    }
    throw InvalidConfig("unknown benchmark '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v)
{
    switch (v) {
    case Variant::SE: return "SE";
    case Variant::HE: return "HE";
    case Variant::SLP: return "SLP";
    case Variant::SLP_HE: return "SLP+HE";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    for (Variant v : kAllVariants) {
        if (variant_name(v) == name) {
            return v;
        }
    }
    throw InvalidConfig("unknown variant '" + std::string(name) + "' (expected SE, HE, SLP or SLP+HE)");
}

TrainConfig configure_variant(Variant v, TrainConfig base)
{
    switch (v) {
    case Variant::SE:
        base.mode = EntropyMode::Standard;
        base.soft_length = false;
        base.entropy_weight = 0.005;
        base.entropy_decay = 1.0;
        break;
    case Variant::HE:
        base.mode = EntropyMode::Hierarchical;
        base.soft_length = false;
        base.entropy_weight = 0.02;
        base.entropy_decay = 0.85;
        break;
    case Variant::SLP:
        base.mode = EntropyMode::Standard;
        base.soft_length = true;
        base.entropy_weight = 0.005;
        base.entropy_decay = 1.0;
        break;
    case Variant::SLP_HE:
        base.mode = EntropyMode::Hierarchical;
        base.soft_length = true;
        base.entropy_weight = 0.03;
        base.entropy_decay = 0.7;
        break;
    }
    return base;
}

std::vector<TrainConfig> hyperparameter_grid(Variant v, const TrainConfig& base)
{
    static constexpr double etas[] = {0.001, 0.005, 0.01, 0.02, 0.03};
    static constexpr double gammas[] = {0.7, 0.75, 0.8, 0.85, 0.9};
    const TrainConfig proto = configure_variant(v, base);
    std::vector<TrainConfig> grid;
    for (double eta : etas) {
        if (proto.mode == EntropyMode::Hierarchical) {
            for (double gamma : gammas) {
                TrainConfig c = proto;
                c.entropy_weight = eta;
                c.entropy_decay = gamma;
                grid.push_back(c);
            }
        } else {
            TrainConfig c = proto;
            c.entropy_weight = eta;
            grid.push_back(c);
        }
    }
    return grid;
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t benchmark_index, std::size_t run_index)
{
    return mix64(mix64(base_seed) + ((static_cast<std::uint64_t>(benchmark_index) << 40) |
                                     static_cast<std::uint64_t>(run_index)));
}

Aggregate aggregate(std::span<const RunRecord> runs)
{
    Aggregate a;
    a.n_runs = static_cast<int>(runs.size());
    if (runs.empty()) {
        return a;
    }
    double rec = 0.0;
    double steps = 0.0;
    double len = 0.0;
    for (const auto& r : runs) {
        rec += r.recovered ? 1.0 : 0.0;
        steps += r.steps_to_solve;
        len += r.best_length;
    }
    const double n = static_cast<double>(runs.size());
    a.recovery_rate = rec / n;
    a.mean_steps = steps / n;
    a.mean_length = len / n;
    return a;
}

std::size_t best_grid_row(std::span<const GridRow> rows)
{
    if (rows.empty()) {
        throw InvalidConfig("best_grid_row: empty grid");
    }
    auto better = [](const GridRow& a, const GridRow& b) {
        if (a.result.recovery_rate != b.result.recovery_rate) return a.result.recovery_rate > b.result.recovery_rate;
        if (a.result.mean_steps != b.result.mean_steps) return a.result.mean_steps < b.result.mean_steps;
        if (a.entropy_weight != b.entropy_weight) return a.entropy_weight < b.entropy_weight;
        return a.entropy_decay < b.entropy_decay;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (better(rows[i], rows[best])) {
            best = i;
        }
    }
    return best;
}

namespace {

std::size_t suite_index(std::string_view name)
{
    static const std::vector<Benchmark> suite = nguyen_suite();
    for (std::size_t i = 0; i < suite.size(); ++i) {
        if (suite[i].name == name) {
            return i;
        }
    }
    throw InvalidConfig("unknown benchmark '" + std::string(name) + "'");
}

} // namespace

TrainConfig resolve_train_config(const ExperimentSpec& spec)
{
    TrainConfig c = configure_variant(spec.variant, spec.train);
    if (spec.entropy_weight) {
        c.entropy_weight = *spec.entropy_weight;
    }
    if (spec.entropy_decay) {
        c.entropy_decay = *spec.entropy_decay;
    }
    return c;
}

RunRecord run_single(const ExperimentSpec& spec, std::size_t benchmark_pos, int run_index, RunResult* result,
                     std::vector<StepReport>* steps)
{
    const Benchmark& bench = find_benchmark(spec.benchmarks.at(benchmark_pos));
    TrainConfig cfg = resolve_train_config(spec);
    cfg.seed = run_seed(spec.base_seed, suite_index(bench.name), static_cast<std::size_t>(run_index));

    LoopOptions opts;
    opts.stop_on_recovery = spec.stop_on_recovery;
    if (steps) {
        opts.on_step = [steps](const StepReport& r) { steps->push_back(r); };
    }
    const Dataset data = bench.dataset();
    const Inputs grid = bench.grid();
    RunResult res = train_loop(cfg, data, bench.truth, grid, bench.library, spec.priors, opts);

    RunRecord rec;
    rec.benchmark = bench.name;
    rec.variant = spec.variant;
    rec.run_index = run_index;
    rec.seed = cfg.seed;
    rec.recovered = res.recovered;
    rec.steps_to_solve = res.steps_to_solve;
    rec.best_length = res.best_length;
    rec.best_reward = res.best_reward;
    rec.best_prefix = bench.library.names(res.best_expression);
    rec.best_infix = res.best_expression.empty() ? "" : to_infix(res.best_expression, bench.library);
    if (result) {
        *result = std::move(res);
    }
    return rec;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunObserver& observer)
{
    if (spec.n_runs < 1) {
        throw InvalidConfig("n_runs must be >= 1");
    }
    resolve_train_config(spec).validate();
    spec.priors.validate();
    for (const auto& name : spec.benchmarks) {
        find_benchmark(name);
    }

    const int n_bench = static_cast<int>(spec.benchmarks.size());
    const int total = n_bench * spec.n_runs;
    ExperimentResult out;
    out.runs.resize(static_cast<std::size_t>(total));

#pragma omp parallel for schedule(dynamic, 1) num_threads(spec.workers > 0 ? spec.workers : 1) if (spec.workers > 1)
    for (int task = 0; task < total; ++task) {
        const int b = task / spec.n_runs;
        const int r = task % spec.n_runs;
        RunResult res;
        std::vector<StepReport> steps;
        RunRecord rec = run_single(spec, static_cast<std::size_t>(b), r, observer ? &res : nullptr,
                                   observer ? &steps : nullptr);
        if (observer) {
            observer(rec, res, steps);
        }
        out.runs[static_cast<std::size_t>(task)] = std::move(rec);
    }

    for (const auto& name : spec.benchmarks) {
        std::vector<RunRecord> subset;
        for (const auto& r : out.runs) {
            if (r.benchmark == name) {
                subset.push_back(r);
            }
        }
        out.aggregates[name] = aggregate(subset);
    }
    out.overall = aggregate(out.runs);
    return out;
}

} // namespace pgsr
