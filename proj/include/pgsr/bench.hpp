#pragma once

#include "pgsr/expression.hpp"
#include "pgsr/library.hpp"
#include "pgsr/priors.hpp"
#include "pgsr/trainer.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pgsr {

struct Benchmark {
    std::string name;
    Library library;
    TokenSequence truth;
    std::vector<Range> domain;
    std::size_t n_samples = 20;
    std::uint64_t data_seed = 0;

    // Training data; identical on every call and machine.
    Dataset dataset() const;
    Inputs grid() const { return recovery_grid(domain); }
};

// Nguyen-1 .. Nguyen-12. Domains: U[-1,1] for 1-6, U[0,2] for 7, U[0,4] for 8,
// U[0,1]^2 for 9-12, 20 points each. Constants are expressed without a constant token (1 = x/x,
// 1/2 = x/(x+x)) and x^y as exp(y log x).
std::vector<Benchmark> nguyen_suite();
const Benchmark& find_benchmark(std::string_view name);

enum class Variant { SE, HE, SLP, SLP_HE };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::SE, Variant::HE, Variant::SLP, Variant::SLP_HE};

// Sets entropy mode, soft length flag, and the chosen eta / gamma for the variant.
TrainConfig configure_variant(Variant v, TrainConfig base);

// Grid over eta (and gamma for hierarchical variants).
std::vector<TrainConfig> hyperparameter_grid(Variant v, const TrainConfig& base);

// seed(b, r) = mix64(mix64(base) + (b << 40 | r)); injective for b < 2^24, r < 2^40.
// Step s of that run samples from substream(seed(b, r), s).
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t benchmark_index, std::size_t run_index);

struct RunRecord {
    std::string benchmark;
    Variant variant = Variant::SE;
    int run_index = 0;
    std::uint64_t seed = 0;
    bool recovered = false;
    int steps_to_solve = 0;
    int best_length = 0;
    double best_reward = 0.0;
    std::string best_prefix;
    std::string best_infix;
};

struct Aggregate {
    int n_runs = 0;
    double recovery_rate = 0.0;
    double mean_steps = 0.0;
    double mean_length = 0.0;
};

Aggregate aggregate(std::span<const RunRecord> runs);

struct ExperimentSpec {
    Variant variant = Variant::SE;
    std::vector<std::string> benchmarks;
    int n_runs = 10;
    std::uint64_t base_seed = 0;
    TrainConfig train;                    // variant defaults applied on top unless overridden
    std::optional<double> entropy_weight; // overrides the variant's eta
    std::optional<double> entropy_decay;  // overrides the variant's gamma
    PriorSettings priors;
    int workers = 1;
    bool stop_on_recovery = true;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;                  // benchmark-major, run index ascending
    std::map<std::string, Aggregate> aggregates;  // per benchmark
    Aggregate overall;
};

// Hook invoked once per run (from the worker that ran it) with the full result.
using RunObserver = std::function<void(const RunRecord&, const RunResult&, const std::vector<StepReport>&)>;

TrainConfig resolve_train_config(const ExperimentSpec& spec);

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunObserver& observer = {});

struct GridRow {
    double entropy_weight = 0.0;
    double entropy_decay = 1.0;
    Aggregate result;
};

// Highest recovery rate; ties go to fewer mean steps, then smaller eta, then smaller gamma.
std::size_t best_grid_row(std::span<const GridRow> rows);

// One run of one benchmark, traces collected.
RunRecord run_single(const ExperimentSpec& spec, std::size_t benchmark_pos, int run_index, RunResult* result = nullptr,
                     std::vector<StepReport>* steps = nullptr);

} // namespace pgsr
