#include "pgsr/trainer.hpp"

#include "pgsr/errors.hpp"
#include "pgsr/kernels.hpp"
#include "pgsr/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pgsr {

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be > 0");
    if (batch_size < 2) throw InvalidConfig("batch_size must be >= 2");
    if (!(risk_epsilon > 0.0 && risk_epsilon <= 1.0)) throw InvalidConfig("risk_epsilon must be in (0, 1]");
    if (!(entropy_weight >= 0.0)) throw InvalidConfig("entropy_weight must be >= 0");
    if (!(entropy_decay > 0.0 && entropy_decay <= 1.0)) throw InvalidConfig("entropy_decay must be in (0, 1]");
    if (max_steps < 0) throw InvalidConfig("max_steps must be >= 0");
    if (hidden_size < 1) throw InvalidConfig("hidden_size must be >= 1");
}

double entropy_term(std::span<const double> entropies, double gamma, EntropyMode mode)
{
    double total = 0.0;
    double w = 1.0;
    for (double h : entropies) {
        total += mode == EntropyMode::Hierarchical ? w * h : h;
        w *= gamma;
    }
    return total;
}

std::size_t risk_keep_count(std::size_t batch_size, double epsilon)
{
    // The small slack keeps e.g. 0.05 * 500 at 25 despite rounding in the product.
    const auto k = static_cast<std::size_t>(std::ceil(epsilon * static_cast<double>(batch_size) - 1e-9));
    return std::clamp<std::size_t>(k, 1, batch_size);
}

RiskFilter risk_baseline(std::span<const double> rewards, double epsilon)
{
    if (rewards.empty()) {
        throw EmptyBatch("risk_baseline: no rewards");
    }
    const std::size_t k = risk_keep_count(rewards.size(), epsilon);
    std::vector<double> sorted(rewards.begin(), rewards.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k - 1), sorted.end(), std::greater<>());
    RiskFilter out;
    out.baseline = sorted[k - 1];

    std::size_t above = 0;
    for (double r : rewards) {
        above += r > out.baseline ? 1 : 0;
    }
    std::size_t ties_left = k - above;
    for (std::size_t j = 0; j < rewards.size(); ++j) {
        if (rewards[j] > out.baseline) {
            out.keep.push_back(j);
        } else if (rewards[j] == out.baseline && ties_left > 0) {
            out.keep.push_back(j);
            --ties_left;
        }
    }
    return out;
}

namespace {

PriorSettings with_slp(PriorSettings p, bool enabled)
{
    if (!enabled) {
        p.soft_length.reset();
    } else if (!p.soft_length) {
        p.soft_length = SoftLengthConfig{};
    }
    return p;
}

constexpr std::uint64_t kInitStream = 0xffff'ffff'0000'0001ULL;

} // namespace

Trainer::Trainer(const TrainConfig& config, const Dataset& data, const Library& lib, PriorSettings priors)
    : config_(config),
      lib_(&lib),
      priors_(lib, with_slp(std::move(priors), config.soft_length)),
      reward_(data, lib),
      params_(PolicyParams::initialized(config.hidden_size, static_cast<int>(lib.size()), substream(config.seed, kInitStream))),
      adam_(params_.size(), AdamConfig{config.learning_rate})
{
    config_.validate();
}

StepReport Trainer::step()
{
    ++step_;
    std::vector<ScoredSample> batch =
        sample_batch(params_, priors_, config_.batch_size, substream(config_.seed, static_cast<std::uint64_t>(step_)));
    score_batch(batch, reward_);

    std::vector<double> rewards(batch.size());
    std::transform(batch.begin(), batch.end(), rewards.begin(), [](const ScoredSample& s) { return s.reward; });
    const RiskFilter filter = risk_baseline(rewards, config_.risk_epsilon);

    StepReport report;
    report.step = step_;
    report.baseline = filter.baseline;
    report.kept = filter.keep.size();

    const auto best_it = std::max_element(rewards.begin(), rewards.end());
    const auto& batch_best = batch[static_cast<std::size_t>(best_it - rewards.begin())];
    report.batch_best_reward = batch_best.reward;
    report.batch_best = batch_best.tokens;
    if (batch_best.reward > best_reward_) {
        best_reward_ = batch_best.reward;
        best_ = batch_best.tokens;
    }
    report.best_reward = best_reward_;
    report.best_expression = best_;

    const auto ent = mean_position_entropy(batch, kTracedPositions);
    std::copy(ent.begin(), ent.end(), report.position_entropy.begin());
    for (const auto& s : batch) {
        const auto len = s.tokens.size();
        if (report.length_histogram.size() <= len) {
            report.length_histogram.resize(len + 1, 0);
        }
        ++report.length_histogram[len];
    }

    std::vector<ScoredSample> kept;
    kept.reserve(filter.keep.size());
    for (std::size_t j : filter.keep) {
        kept.push_back(std::move(batch[j]));
    }
    ObjectiveTerms terms;
    terms.baseline = filter.baseline;
    terms.entropy_weight = config_.entropy_weight;
    terms.entropy_decay = config_.entropy_decay;
    terms.mode = config_.mode;
    terms.normalizer = static_cast<double>(config_.normalize_by_kept ? kept.size() : batch.size());
    const std::vector<double> grad = compute_gradients(params_, priors_, kept, terms);
    adam_.ascend(params_.flat(), grad);
    return report;
}

RunResult train_loop(const TrainConfig& config, const Dataset& data, std::span<const TokenId> truth,
                     const Inputs& recovery_grid, const Library& lib, const PriorSettings& priors,
                     const LoopOptions& options)
{
    config.validate();
    RunResult result;
    Trainer trainer(config, data, lib, priors);
    TokenSequence last_checked;
    int solved_step = 0;
    for (int s = 1; s <= config.max_steps; ++s) {
        StepReport report = trainer.step();
        if (s == 1) {
            result.initial_length_histogram = report.length_histogram;
        }
        result.entropy_trace.push_back(report.position_entropy);

        bool solved = false;
        if (!result.recovered && !truth.empty() && report.batch_best != last_checked) {
            last_checked = report.batch_best;
            solved = recovery_check(report.batch_best, truth, lib, recovery_grid);
        }
        if (options.on_step) {
            options.on_step(report);
        }
        if (!result.recovered) {
            result.best_reward = report.best_reward;
            result.best_expression = solved ? report.batch_best : report.best_expression;
        }
        if (solved) {
            result.recovered = true;
            solved_step = s;
            if (options.stop_on_recovery) {
                break;
            }
        }
    }
    result.steps_to_solve = result.recovered ? solved_step : config.max_steps;
    result.best_length = static_cast<int>(result.best_expression.size());
    result.final_params.assign(trainer.params().flat().begin(), trainer.params().flat().end());
    return result;
}

} // namespace pgsr
