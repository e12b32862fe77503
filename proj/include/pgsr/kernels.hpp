#pragma once

#include "pgsr/expression.hpp"
#include "pgsr/policy.hpp"

#include <span>
#include <vector>

namespace pgsr {

// Fills sample.reward for every sample (OpenMP over samples).
void score_batch(std::span<ScoredSample> batch, const RewardFunction& reward);

// Mean entropy at positions 1..n over the samples long enough to have that
// position; NaN where no sample reaches it.
std::vector<double> mean_position_entropy(std::span<const ScoredSample> batch, int n_positions);

namespace serial {
void score_batch(std::span<ScoredSample> batch, const RewardFunction& reward);
}

} // namespace pgsr
