#pragma once

#include "pgsr/adam.hpp"
#include "pgsr/expression.hpp"
#include "pgsr/policy.hpp"
#include "pgsr/priors.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pgsr {

struct TrainConfig {
    double learning_rate = 5e-4;
    int batch_size = 1000;
    double risk_epsilon = 0.05;
    double entropy_weight = 0.005;
    double entropy_decay = 1.0;
    EntropyMode mode = EntropyMode::Standard;
    bool soft_length = false;
    int max_steps = 2000;
    std::uint64_t seed = 0;
    int hidden_size = 32;
    // Divide the policy-gradient sum by the kept count instead of the full batch size.
    bool normalize_by_kept = true;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

// Standard: sum_i h_i. Hierarchical: sum_i gamma^(i-1) h_i.
double entropy_term(std::span<const double> entropies, double gamma, EntropyMode mode);
inline double entropy_term(const ScoredSample& s, double gamma, EntropyMode mode)
{
    return entropy_term(s.entropies, gamma, mode);
}

struct RiskFilter {
    double baseline = 0.0;
    std::vector<std::size_t> keep; // ascending batch indices, exactly ceil(eps * M) of them
};

// Baseline at the empirical (1 - eps) quantile: the k-th largest reward with
// k = ceil(eps * M). Ties at the baseline are kept in batch order.
RiskFilter risk_baseline(std::span<const double> rewards, double epsilon);
std::size_t risk_keep_count(std::size_t batch_size, double epsilon);

inline constexpr int kTracedPositions = 6;

struct StepReport {
    int step = 0;
    double best_reward = 0.0; // best so far
    TokenSequence best_expression;
    double batch_best_reward = 0.0;
    TokenSequence batch_best; // first sample with the batch's highest reward
    double baseline = 0.0;
    std::size_t kept = 0;
    std::array<double, kTracedPositions> position_entropy{};
    std::vector<int> length_histogram; // index = sequence length
};

// Owns the policy and optimizer state of one run.
class Trainer {
public:
    Trainer(const TrainConfig& config, const Dataset& data, const Library& lib, PriorSettings priors);

    StepReport step();

    const PolicyParams& params() const { return params_; }
    const PriorSet& priors() const { return priors_; }
    int steps_done() const { return step_; }

private:
    TrainConfig config_;
    const Library* lib_;
    PriorSet priors_;
    RewardFunction reward_;
    PolicyParams params_;
    Adam adam_;
    int step_ = 0;
    double best_reward_ = -1.0;
    TokenSequence best_;
};

struct RunResult {
    bool recovered = false;
    int steps_to_solve = 0;
    TokenSequence best_expression;
    double best_reward = 0.0;
    int best_length = 0;
    std::vector<std::array<double, kTracedPositions>> entropy_trace; // one entry per step
    std::vector<int> initial_length_histogram;                       // untrained policy (first batch)
    std::vector<double> final_params;
};

struct LoopOptions {
    bool stop_on_recovery = true;
    std::function<void(const StepReport&)> on_step;
};

RunResult train_loop(const TrainConfig& config, const Dataset& data, std::span<const TokenId> truth,
                     const Inputs& recovery_grid, const Library& lib, const PriorSettings& priors,
                     const LoopOptions& options = {});

} // namespace pgsr
