#include "pgsr/kernels.hpp"

#include <limits>

namespace pgsr {

void score_batch(std::span<ScoredSample> batch, const RewardFunction& reward)
{
    const auto n = static_cast<long>(batch.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (long j = 0; j < n; ++j) {
        auto& s = batch[static_cast<std::size_t>(j)];
        s.reward = reward(s.tokens);
    }
}

namespace serial {

void score_batch(std::span<ScoredSample> batch, const RewardFunction& reward)
{
    for (auto& s : batch) {
        s.reward = reward(s.tokens);
    }
}

} // namespace serial

std::vector<double> mean_position_entropy(std::span<const ScoredSample> batch, int n_positions)
{
    std::vector<double> sum(static_cast<std::size_t>(n_positions), 0.0);
    std::vector<int> count(static_cast<std::size_t>(n_positions), 0);
    for (const auto& s : batch) {
        for (std::size_t i = 0; i < sum.size() && i < s.entropies.size(); ++i) {
            sum[i] += s.entropies[i];
            ++count[i];
        }
    }
    for (std::size_t i = 0; i < sum.size(); ++i) {
        sum[i] = count[i] > 0 ? sum[i] / count[i] : std::numeric_limits<double>::quiet_NaN();
    }
    return sum;
}

} // namespace pgsr
