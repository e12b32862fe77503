#include "pgsr/bench.hpp"
#include "pgsr/errors.hpp"
#include "pgsr/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace pgsr;

namespace {

double closed_form(int index, double x, double y)
{
    switch (index) {
    case 1: return x * x * x + x * x + x;
    case 2: return std::pow(x, 4) + std::pow(x, 3) + x * x + x;
    case 3: return std::pow(x, 5) + std::pow(x, 4) + std::pow(x, 3) + x * x + x;
    case 4: return std::pow(x, 6) + std::pow(x, 5) + std::pow(x, 4) + std::pow(x, 3) + x * x + x;
    case 5: return std::sin(x * x) * std::cos(x) - 1.0;
    case 6: return std::sin(x) + std::sin(x + x * x);
    case 7: return std::log(x + 1.0) + std::log(x * x + 1.0);
    case 8: return std::sqrt(x);
    case 9: return std::sin(x) + std::sin(y * y);
    case 10: return 2.0 * std::sin(x) * std::cos(y);
    case 11: return std::pow(x, y);
    case 12: return std::pow(x, 4) - std::pow(x, 3) + y * y / 2.0 - y;
    default: return NAN;
    }
}

} // namespace

TEST_CASE("suite has the twelve benchmarks in order")
{
    const auto suite = nguyen_suite();
    REQUIRE(suite.size() == 12);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        CHECK(suite[i].name == "Nguyen-" + std::to_string(i + 1));
        CHECK(suite[i].n_samples == 20);
        CHECK(suite[i].domain.size() == (i < 8 ? 1u : 2u));
        CHECK(suite[i].library.n_inputs() == suite[i].domain.size());
    }
    CHECK(find_benchmark("Nguyen-8").library.find("sqrt").has_value());
    CHECK_FALSE(find_benchmark("Nguyen-1").library.find("sqrt").has_value());
    CHECK_THROWS_AS(find_benchmark("Nguyen-13"), InvalidConfig);
}

TEST_CASE("benchmark truths match their closed forms")
{
    for (const Benchmark& b : nguyen_suite()) {
        const int index = std::stoi(b.name.substr(7));
        const Inputs g = b.grid();
        const Predictions p = evaluate(b.truth, g, b.library);
        for (std::size_t r = 0; r < g.rows; ++r) {
            const double x = g.at(r, 0);
            const double y = g.vars > 1 ? g.at(r, 1) : 0.0;
            CAPTURE(b.name);
            CHECK(p.values[r] == doctest::Approx(closed_form(index, x, y)).epsilon(1e-12));
        }
    }
}

TEST_CASE("benchmark truth examples")
{
    const Benchmark& n1 = find_benchmark("Nguyen-1");
    Inputs one(1, 1);
    one.at(0, 0) = 1.0;
    CHECK(evaluate(n1.truth, one, n1.library).values[0] == 3.0);

    const Benchmark& n8 = find_benchmark("Nguyen-8");
    one.at(0, 0) = 4.0;
    CHECK(evaluate(n8.truth, one, n8.library).values[0] == 2.0);
}

TEST_CASE("every truth is perfectly rewarded and recovers itself")
{
    for (const Benchmark& b : nguyen_suite()) {
        const Dataset d = b.dataset();
        CAPTURE(b.name);
        CHECK(d.X.rows == 20);
        CHECK(reward(b.truth, d, b.library) == 1.0);
        CHECK(recovery_check(b.truth, b.truth, b.library, b.grid()));
    }
}

TEST_CASE("datasets are fixed by their seeds")
{
    const Benchmark& n1 = find_benchmark("Nguyen-1");
    const Dataset a = n1.dataset();
    const Dataset b = n1.dataset();
    CHECK(a.X.data == b.X.data);
    CHECK(a.y == b.y);
    CHECK(a.X.at(0, 0) == -0.015502877924374658);
    const Dataset other = find_benchmark("Nguyen-2").dataset();
    CHECK(other.X.data != a.X.data);
}

TEST_CASE("splitmix64 reference vector")
{
    SplitMix64 g(1234567);
    CHECK(g() == 6457827717110365317ULL);
    CHECK(g() == 3203168211198807973ULL);
    CHECK(g() == 9817491932198370423ULL);
}

TEST_CASE("variant presets and names")
{
    for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
    CHECK(variant_name(Variant::SLP_HE) == "SLP+HE");
    CHECK_THROWS_AS(parse_variant("XYZ"), InvalidConfig);

    const TrainConfig he = configure_variant(Variant::HE, TrainConfig{});
    CHECK(he.mode == EntropyMode::Hierarchical);
    CHECK(he.entropy_weight == 0.02);
    CHECK(he.entropy_decay == 0.85);
    CHECK_FALSE(he.soft_length);
    const TrainConfig slphe = configure_variant(Variant::SLP_HE, TrainConfig{});
    CHECK(slphe.soft_length);
    CHECK(slphe.entropy_weight == 0.03);
    CHECK(slphe.entropy_decay == 0.7);
    const TrainConfig se = configure_variant(Variant::SE, TrainConfig{});
    CHECK(se.mode == EntropyMode::Standard);
    CHECK(se.entropy_weight == 0.005);
}

TEST_CASE("hyperparameter grid sizes")
{
    CHECK(hyperparameter_grid(Variant::SE, TrainConfig{}).size() == 5);
    CHECK(hyperparameter_grid(Variant::SLP, TrainConfig{}).size() == 5);
    const auto he = hyperparameter_grid(Variant::HE, TrainConfig{});
    CHECK(he.size() == 25);
    CHECK(hyperparameter_grid(Variant::SLP_HE, TrainConfig{}).size() == 25);
    CHECK(std::any_of(he.begin(), he.end(),
                      [](const TrainConfig& c) { return c.entropy_weight == 0.02 && c.entropy_decay == 0.85; }));
    for (const TrainConfig& c : he) CHECK(c.mode == EntropyMode::Hierarchical);
}

TEST_CASE("run seeds are distinct across benchmarks and runs")
{
    std::set<std::uint64_t> seen;
    for (std::size_t b = 0; b < 12; ++b)
        for (std::size_t r = 0; r < 200; ++r) seen.insert(run_seed(42, b, r));
    CHECK(seen.size() == 12 * 200);
    CHECK(run_seed(42, 3, 7) == run_seed(42, 3, 7));
    CHECK(run_seed(42, 3, 7) != run_seed(43, 3, 7));
}

TEST_CASE("aggregate means")
{
    std::vector<RunRecord> runs(4);
    runs[0].recovered = true;
    runs[0].steps_to_solve = 10;
    runs[0].best_length = 5;
    runs[1].recovered = true;
    runs[1].steps_to_solve = 30;
    runs[1].best_length = 7;
    runs[2].steps_to_solve = 100;
    runs[2].best_length = 20;
    runs[3].steps_to_solve = 100;
    runs[3].best_length = 12;
    const Aggregate a = aggregate(runs);
    CHECK(a.n_runs == 4);
    CHECK(a.recovery_rate == 0.5);
    CHECK(a.mean_steps == 60.0);
    CHECK(a.mean_length == 11.0);
    CHECK(aggregate(std::span<const RunRecord>{}).n_runs == 0);
}

TEST_CASE("best grid row tie-breaks")
{
    std::vector<GridRow> rows{
        {0.02, 0.9, {10, 0.8, 300, 9}},
        {0.01, 0.9, {10, 0.8, 300, 9}},
        {0.01, 0.7, {10, 0.8, 300, 9}},
        {0.05, 0.5, {10, 0.8, 200, 9}},
        {0.05, 0.5, {10, 0.7, 10, 9}},
    };
    CHECK(best_grid_row(rows) == 3);
    rows[3].result.mean_steps = 300;
    CHECK(best_grid_row(rows) == 2);
}

TEST_CASE("run_experiment on an easy target")
{
    ExperimentSpec spec;
    spec.variant = Variant::SLP_HE;
    spec.benchmarks = {"Nguyen-8"};
    spec.n_runs = 2;
    spec.base_seed = 5;
    spec.train.batch_size = 200;
    spec.train.max_steps = 300;
    spec.priors.length = LengthBounds{1, 30};
    std::vector<int> observed;
    const ExperimentResult r = run_experiment(spec, [&](const RunRecord& rec, const RunResult&, const std::vector<StepReport>& steps) {
        observed.push_back(static_cast<int>(steps.size()));
        CHECK(rec.benchmark == "Nguyen-8");
    });
    REQUIRE(r.runs.size() == 2);
    CHECK(observed.size() == 2);
    for (const RunRecord& rec : r.runs) {
        CHECK(rec.recovered);
        CHECK(rec.best_reward == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_FALSE(rec.best_infix.empty());
    }
    CHECK(r.runs[0].run_index == 0);
    CHECK(r.runs[1].run_index == 1);
    CHECK(r.aggregates.at("Nguyen-8").recovery_rate == 1.0);
    CHECK(r.overall.n_runs == 2);

    const RunRecord again = run_single(spec, 0, 1);
    CHECK(again.seed == r.runs[1].seed);
    CHECK(again.steps_to_solve == r.runs[1].steps_to_solve);
}
