#pragma once

#include "pgsr/expression.hpp"
#include "pgsr/library.hpp"
#include "pgsr/priors.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pgsr {

// Weights of a single-layer LSTM cell plus a linear output head, stored in
// one flat vector. Gate blocks are ordered input, forget, cell, output.
//
// Layout: w_input [4H x D] | w_recurrent [4H x H] | b_gates [4H] | w_out [L x H] | b_out [L]
// with D = 2 (L + 1) (parent and sibling one-hots, each with an "empty" slot).
class PolicyParams {
public:
    PolicyParams(int hidden, int n_tokens);
    PolicyParams(int hidden, int n_tokens, std::vector<double> flat);

    // Recurrent weights uniform in [-0.05, 0.05]; output head exactly zero.
    static PolicyParams initialized(int hidden, int n_tokens, std::uint64_t seed);

    int hidden() const { return hidden_; }
    int n_tokens() const { return n_tokens_; }
    int input_width() const { return 2 * (n_tokens_ + 1); }
    std::size_t size() const { return theta_.size(); }

    std::span<double> flat() { return theta_; }
    std::span<const double> flat() const { return theta_; }

    std::span<const double> w_input() const { return block(0, gates() * input_width()); }
    std::span<const double> w_recurrent() const { return block(off_rec(), gates() * hidden_); }
    std::span<const double> b_gates() const { return block(off_bias(), gates()); }
    std::span<const double> w_out() const { return block(off_out(), n_tokens_ * hidden_); }
    std::span<const double> b_out() const { return block(off_out_bias(), n_tokens_); }

    std::size_t off_rec() const { return static_cast<std::size_t>(gates() * input_width()); }
    std::size_t off_bias() const { return off_rec() + static_cast<std::size_t>(gates() * hidden_); }
    std::size_t off_out() const { return off_bias() + static_cast<std::size_t>(gates()); }
    std::size_t off_out_bias() const { return off_out() + static_cast<std::size_t>(n_tokens_ * hidden_); }

private:
    int gates() const { return 4 * hidden_; }
    std::span<const double> block(std::size_t off, int n) const { return {theta_.data() + off, static_cast<std::size_t>(n)}; }

    int hidden_;
    int n_tokens_;
    std::vector<double> theta_;
};

// Tree-context conditioning: parent and sibling of the node about to be sampled.
// -1 stands for the "empty" category.
struct StepInput {
    TokenId parent = -1;
    TokenId sibling = -1;

    // Two-hot vector of width 2 (L + 1).
    std::vector<double> dense(int n_tokens) const;
    bool operator==(const StepInput&) const = default;
};

StepInput step_input(std::span<const TokenId> partial, const Library& lib);
inline StepInput step_input(const TreeCursor& c) { return {c.parent(), c.sibling()}; }

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    explicit LstmState(int hidden) : h(static_cast<std::size_t>(hidden), 0.0), c(static_cast<std::size_t>(hidden), 0.0) {}
};

// One recurrent step; writes raw logits (before priors and masks).
void forward_step(const PolicyParams& params, const StepInput& input, const LstmState& state, LstmState& next,
                  std::span<double> logits);

struct ScoredSample {
    TokenSequence tokens;
    double reward = 0.0;
    std::vector<double> logprobs;  // log pi(tau_i | tau_<i) under the effective distribution
    std::vector<double> entropies; // H of the effective distribution at each step
};

// Effective distribution softmax(logits + prior + mask). Masked entries get
// probability 0 and log-probability -inf. Returns the entropy.
double masked_softmax(std::span<const double> logits, std::span<const double> prior, std::span<const double> mask,
                      std::span<double> probs, std::span<double> logprobs);

// Sample j draws from substream(seed, j); parallel and serial execution give the same batch.
std::vector<ScoredSample> sample_batch(const PolicyParams& params, const PriorSet& priors, int batch_size,
                                       std::uint64_t seed);
ScoredSample sample_one(const PolicyParams& params, const PriorSet& priors, std::uint64_t seed);

namespace serial {
std::vector<ScoredSample> sample_batch(const PolicyParams& params, const PriorSet& priors, int batch_size,
                                       std::uint64_t seed);
}

enum class EntropyMode { Standard, Hierarchical };

struct ObjectiveTerms {
    double baseline = 0.0;
    double entropy_weight = 0.0; // eta
    double entropy_decay = 1.0;  // gamma, used in hierarchical mode
    EntropyMode mode = EntropyMode::Standard;
    double normalizer = 1.0;     // number of samples the sum is divided by
};

// J = (1/N) sum_j [ (R_j - b) sum_i log pi_i + eta * sum_i w_i H_i ], w_i = 1 or gamma^(i-1),
// evaluated by replaying the recorded sequences.
double surrogate_objective(const PolicyParams& params, const PriorSet& priors, std::span<const ScoredSample> batch,
                           const ObjectiveTerms& terms);

// Exact dJ/dtheta by backpropagation through time over the recorded sequences.
std::vector<double> compute_gradients(const PolicyParams& params, const PriorSet& priors,
                                      std::span<const ScoredSample> batch, const ObjectiveTerms& terms);

// Per-step log-probabilities of a fixed sequence under the current policy.
std::vector<double> sequence_logprobs(const PolicyParams& params, const PriorSet& priors, std::span<const TokenId> seq);

} // namespace pgsr
