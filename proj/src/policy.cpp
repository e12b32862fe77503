#include "pgsr/policy.hpp"

#include "pgsr/errors.hpp"
#include "pgsr/rng.hpp"

#include <algorithm>
#include <cmath>

namespace pgsr {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t slot(TokenId t, int n_tokens) { return static_cast<std::size_t>(t < 0 ? n_tokens : t); }

} // namespace

PolicyParams::PolicyParams(int hidden, int n_tokens) : hidden_(hidden), n_tokens_(n_tokens)
{
    if (hidden < 1 || n_tokens < 1) {
        throw InvalidConfig("policy needs hidden >= 1 and at least one token");
    }
    theta_.assign(off_out_bias() + static_cast<std::size_t>(n_tokens_), 0.0);
}

PolicyParams::PolicyParams(int hidden, int n_tokens, std::vector<double> flat) : PolicyParams(hidden, n_tokens)
{
    if (flat.size() != theta_.size()) {
        throw InvalidConfig("flat parameter vector has length " + std::to_string(flat.size()) + ", expected " +
                            std::to_string(theta_.size()));
    }
    theta_ = std::move(flat);
}

PolicyParams PolicyParams::initialized(int hidden, int n_tokens, std::uint64_t seed)
{
    PolicyParams p(hidden, n_tokens);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < p.off_out(); ++i) {
        p.theta_[i] = rng.uniform(-0.05, 0.05);
    }
    return p;
}

std::vector<double> StepInput::dense(int n_tokens) const
{
    std::vector<double> x(static_cast<std::size_t>(2 * (n_tokens + 1)), 0.0);
    x[slot(parent, n_tokens)] = 1.0;
    x[static_cast<std::size_t>(n_tokens + 1) + slot(sibling, n_tokens)] = 1.0;
    return x;
}

StepInput step_input(std::span<const TokenId> partial, const Library& lib)
{
    TreeCursor cursor(lib);
    for (TokenId t : partial) {
        cursor.push(t);
    }
    return step_input(cursor);
}

namespace {

struct Gates {
    std::vector<double> i, f, g, o;
    explicit Gates(std::size_t h) : i(h), f(h), g(h), o(h) {}
};

// Shared by sampling and replay; fills the gate activations.
void lstm_cell(const PolicyParams& p, const StepInput& in, const LstmState& s, LstmState& next, Gates& gates,
               std::span<double> logits)
{
    const auto H = static_cast<std::size_t>(p.hidden());
    const auto L = static_cast<std::size_t>(p.n_tokens());
    const auto D = static_cast<std::size_t>(p.input_width());
    const auto wx = p.w_input();
    const auto wh = p.w_recurrent();
    const auto bg = p.b_gates();
    const std::size_t col_p = slot(in.parent, p.n_tokens());
    const std::size_t col_s = L + 1 + slot(in.sibling, p.n_tokens());

    std::vector<double>* out[4] = {&gates.i, &gates.f, &gates.g, &gates.o};
    for (std::size_t blk = 0; blk < 4; ++blk) {
        auto& dst = *out[blk];
        for (std::size_t j = 0; j < H; ++j) {
            const std::size_t row = blk * H + j;
            double a = bg[row] + wx[row * D + col_p] + wx[row * D + col_s];
            const double* w = wh.data() + row * H;
            for (std::size_t k = 0; k < H; ++k) {
                a += w[k] * s.h[k];
            }
            dst[j] = blk == 2 ? std::tanh(a) : sigmoid(a);
        }
    }
    for (std::size_t j = 0; j < H; ++j) {
        next.c[j] = gates.f[j] * s.c[j] + gates.i[j] * gates.g[j];
        next.h[j] = gates.o[j] * std::tanh(next.c[j]);
    }
    const auto wo = p.w_out();
    const auto bo = p.b_out();
    for (std::size_t k = 0; k < L; ++k) {
        double z = bo[k];
        const double* w = wo.data() + k * H;
        for (std::size_t j = 0; j < H; ++j) {
            z += w[j] * next.h[j];
        }
        logits[k] = z;
    }
}

} // namespace

void forward_step(const PolicyParams& params, const StepInput& input, const LstmState& state, LstmState& next,
                  std::span<double> logits)
{
    Gates gates(static_cast<std::size_t>(params.hidden()));
    lstm_cell(params, input, state, next, gates, logits);
}

double masked_softmax(std::span<const double> logits, std::span<const double> prior, std::span<const double> mask,
                      std::span<double> probs, std::span<double> logprobs)
{
    const std::size_t n = logits.size();
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (mask[k] == 0.0) {
            zmax = std::max(zmax, logits[k] + prior[k]);
        }
    }
    if (!std::isfinite(zmax)) {
        throw InfeasibleMask("softmax over an empty support");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (mask[k] == 0.0) {
            sum += std::exp(logits[k] + prior[k] - zmax);
        }
    }
    const double log_norm = zmax + std::log(sum);
    double entropy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (mask[k] == 0.0) {
            logprobs[k] = logits[k] + prior[k] - log_norm;
            probs[k] = std::exp(logprobs[k]);
            entropy -= probs[k] * logprobs[k];
        } else {
            logprobs[k] = -std::numeric_limits<double>::infinity();
            probs[k] = 0.0;
        }
    }
    return std::max(entropy, 0.0);
}

ScoredSample sample_one(const PolicyParams& params, const PriorSet& priors, std::uint64_t seed)
{
    const Library& lib = priors.library();
    const auto L = lib.size();
    SplitMix64 rng(seed);
    TreeCursor cursor(lib);
    LstmState state(params.hidden());
    LstmState next(params.hidden());
    Gates gates(static_cast<std::size_t>(params.hidden()));
    std::vector<double> logits(L), prior(L), mask(L), probs(L), logp(L);

    ScoredSample out;
    while (!cursor.complete()) {
        lstm_cell(params, step_input(cursor), state, next, gates, logits);
        std::swap(state, next);
        priors.compose(cursor, prior, mask);
        const double h = masked_softmax(logits, prior, mask, probs, logp);

        const double u = rng.uniform();
        std::size_t choice = L;
        double cum = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            if (probs[k] <= 0.0) {
                continue;
            }
            choice = k;
            cum += probs[k];
            if (u < cum) {
                break;
            }
        }
        if (choice == L) {
            throw InfeasibleMask("no token available to sample");
        }
        const auto token = static_cast<TokenId>(choice);
        cursor.push(token);
        out.tokens.push_back(token);
        out.logprobs.push_back(logp[choice]);
        out.entropies.push_back(h);
    }
    return out;
}

std::vector<ScoredSample> sample_batch(const PolicyParams& params, const PriorSet& priors, int batch_size,
                                       std::uint64_t seed)
{
    if (batch_size < 1) {
        throw InvalidConfig("batch size must be >= 1");
    }
    std::vector<ScoredSample> batch(static_cast<std::size_t>(batch_size));
#pragma omp parallel for schedule(dynamic, 8)
    for (int j = 0; j < batch_size; ++j) {
        batch[static_cast<std::size_t>(j)] = sample_one(params, priors, substream(seed, static_cast<std::uint64_t>(j)));
    }
    return batch;
}

namespace serial {

std::vector<ScoredSample> sample_batch(const PolicyParams& params, const PriorSet& priors, int batch_size,
                                       std::uint64_t seed)
{
    if (batch_size < 1) {
        throw InvalidConfig("batch size must be >= 1");
    }
    std::vector<ScoredSample> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int j = 0; j < batch_size; ++j) {
        batch.push_back(sample_one(params, priors, substream(seed, static_cast<std::uint64_t>(j))));
    }
    return batch;
}

} // namespace serial

namespace {

// Forward activations of one recorded sequence.
struct Replay {
    std::vector<StepInput> inputs;
    std::vector<LstmState> states; // states[0] is the zero state, states[t + 1] after step t
    std::vector<Gates> gates;
    std::vector<std::vector<double>> probs;
    std::vector<std::vector<double>> logprobs;
    std::vector<double> entropy;
};

Replay replay(const PolicyParams& params, const PriorSet& priors, std::span<const TokenId> seq)
{
    const Library& lib = priors.library();
    const auto L = lib.size();
    const auto H = static_cast<std::size_t>(params.hidden());
    Replay r;
    r.states.emplace_back(params.hidden());
    TreeCursor cursor(lib);
    std::vector<double> logits(L), prior(L), mask(L);
    for (TokenId t : seq) {
        r.inputs.push_back(step_input(cursor));
        r.gates.emplace_back(H);
        r.states.emplace_back(params.hidden());
        lstm_cell(params, r.inputs.back(), r.states[r.states.size() - 2], r.states.back(), r.gates.back(), logits);
        priors.compose(cursor, prior, mask);
        r.probs.emplace_back(L);
        r.logprobs.emplace_back(L);
        r.entropy.push_back(masked_softmax(logits, prior, mask, r.probs.back(), r.logprobs.back()));
        cursor.push(t);
    }
    return r;
}

double entropy_weight_at(const ObjectiveTerms& terms, std::size_t step)
{
    return terms.mode == EntropyMode::Hierarchical ? std::pow(terms.entropy_decay, static_cast<double>(step)) : 1.0;
}

void check_batch(std::span<const ScoredSample> batch, const ObjectiveTerms& terms)
{
    if (batch.empty()) {
        throw EmptyBatch("gradient requested for an empty batch");
    }
    if (!std::isfinite(terms.baseline) || !(terms.normalizer > 0.0)) {
        throw InvalidConfig("objective needs a finite baseline and a positive normalizer");
    }
}

} // namespace

double surrogate_objective(const PolicyParams& params, const PriorSet& priors, std::span<const ScoredSample> batch,
                           const ObjectiveTerms& terms)
{
    check_batch(batch, terms);
    double total = 0.0;
    for (const auto& s : batch) {
        const Replay r = replay(params, priors, s.tokens);
        double logp = 0.0;
        double ent = 0.0;
        for (std::size_t t = 0; t < s.tokens.size(); ++t) {
            logp += r.logprobs[t][static_cast<std::size_t>(s.tokens[t])];
            ent += entropy_weight_at(terms, t) * r.entropy[t];
        }
        total += (s.reward - terms.baseline) * logp + terms.entropy_weight * ent;
    }
    return total / terms.normalizer;
}

std::vector<double> compute_gradients(const PolicyParams& params, const PriorSet& priors,
                                      std::span<const ScoredSample> batch, const ObjectiveTerms& terms)
{
    check_batch(batch, terms);
    const auto H = static_cast<std::size_t>(params.hidden());
    const auto L = static_cast<std::size_t>(params.n_tokens());
    const auto D = static_cast<std::size_t>(params.input_width());
    const auto wh = params.w_recurrent();
    const auto wo = params.w_out();

    std::vector<double> grad(params.size(), 0.0);
    double* g_wx = grad.data();
    double* g_wh = grad.data() + params.off_rec();
    double* g_b = grad.data() + params.off_bias();
    double* g_wo = grad.data() + params.off_out();
    double* g_bo = grad.data() + params.off_out_bias();

    std::vector<double> dz(L), dh(H), dc(H), dh_next(H), dc_next(H), da(4 * H);
    for (const auto& s : batch) {
        const Replay r = replay(params, priors, s.tokens);
        const std::size_t T = s.tokens.size();
        const double coef_r = (s.reward - terms.baseline) / terms.normalizer;
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        std::fill(dc_next.begin(), dc_next.end(), 0.0);

        for (std::size_t t = T; t-- > 0;) {
            const auto& p = r.probs[t];
            const auto& lp = r.logprobs[t];
            const double coef_h = terms.entropy_weight * entropy_weight_at(terms, t) / terms.normalizer;
            const auto chosen = static_cast<std::size_t>(s.tokens[t]);
            for (std::size_t k = 0; k < L; ++k) {
                if (p[k] <= 0.0) {
                    dz[k] = 0.0;
                    continue;
                }
                const double dlogp = (k == chosen ? 1.0 : 0.0) - p[k];
                const double dent = -p[k] * (lp[k] + r.entropy[t]);
                dz[k] = coef_r * dlogp + coef_h * dent;
            }

            const auto& h = r.states[t + 1].h;
            const auto& c = r.states[t + 1].c;
            const auto& c_prev = r.states[t].c;
            const auto& h_prev = r.states[t].h;
            const auto& gt = r.gates[t];

            for (std::size_t j = 0; j < H; ++j) {
                dh[j] = dh_next[j];
            }
            for (std::size_t k = 0; k < L; ++k) {
                if (dz[k] == 0.0) {
                    continue;
                }
                g_bo[k] += dz[k];
                for (std::size_t j = 0; j < H; ++j) {
                    g_wo[k * H + j] += dz[k] * h[j];
                    dh[j] += wo[k * H + j] * dz[k];
                }
            }
            for (std::size_t j = 0; j < H; ++j) {
                const double tc = std::tanh(c[j]);
                const double d_o = dh[j] * tc;
                dc[j] = dh[j] * gt.o[j] * (1.0 - tc * tc) + dc_next[j];
                const double d_i = dc[j] * gt.g[j];
                const double d_g = dc[j] * gt.i[j];
                const double d_f = dc[j] * c_prev[j];
                dc_next[j] = dc[j] * gt.f[j];
                da[j] = d_i * gt.i[j] * (1.0 - gt.i[j]);
                da[H + j] = d_f * gt.f[j] * (1.0 - gt.f[j]);
                da[2 * H + j] = d_g * (1.0 - gt.g[j] * gt.g[j]);
                da[3 * H + j] = d_o * gt.o[j] * (1.0 - gt.o[j]);
            }
            const std::size_t col_p = slot(r.inputs[t].parent, static_cast<int>(L));
            const std::size_t col_s = L + 1 + slot(r.inputs[t].sibling, static_cast<int>(L));
            std::fill(dh_next.begin(), dh_next.end(), 0.0);
            for (std::size_t row = 0; row < 4 * H; ++row) {
                const double a = da[row];
                if (a == 0.0) {
                    continue;
                }
                g_b[row] += a;
                g_wx[row * D + col_p] += a;
                g_wx[row * D + col_s] += a;
                const double* w = wh.data() + row * H;
                double* gw = g_wh + row * H;
                for (std::size_t k = 0; k < H; ++k) {
                    gw[k] += a * h_prev[k];
                    dh_next[k] += w[k] * a;
                }
            }
        }
    }
    return grad;
}

std::vector<double> sequence_logprobs(const PolicyParams& params, const PriorSet& priors, std::span<const TokenId> seq)
{
    const Replay r = replay(params, priors, seq);
    std::vector<double> out;
    out.reserve(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        out.push_back(r.logprobs[t][static_cast<std::size_t>(seq[t])]);
    }
    return out;
}

} // namespace pgsr
