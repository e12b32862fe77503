#include "oracles.hpp"

#include "pgsr/errors.hpp"
#include "pgsr/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace pgsr;

namespace {

Dataset line_data()
{
    Inputs x(12, 1);
    std::vector<double> y(12);
    for (std::size_t r = 0; r < 12; ++r) {
        x.at(r, 0) = -1.0 + 0.17 * static_cast<double>(r);
        y[r] = x.at(r, 0);
    }
    return Dataset(x, y);
}

PriorSettings short_bounds()
{
    PriorSettings p;
    p.length = LengthBounds{1, 30};
    return p;
}

} // namespace

TEST_CASE("entropy_term examples")
{
    const std::vector<double> h{2.3026, 2.3026, 2.3026};
    CHECK(entropy_term(h, 0.85, EntropyMode::Hierarchical) == doctest::Approx(2.3026 * (1 + 0.85 + 0.85 * 0.85)));
    CHECK(entropy_term(h, 0.85, EntropyMode::Hierarchical) == doctest::Approx(5.9234385).epsilon(1e-12));
    CHECK(entropy_term(h, 0.85, EntropyMode::Standard) == doctest::Approx(3 * 2.3026));
    CHECK(entropy_term(std::vector<double>{0.0}, 0.7, EntropyMode::Hierarchical) == 0.0);
}

TEST_CASE("hierarchical entropy with gamma = 1 equals standard entropy exactly")
{
    SplitMix64 rng(4);
    for (int n = 0; n < 1000; ++n) {
        std::vector<double> h(1 + rng() % 30);
        for (auto& v : h) v = rng.uniform(0.0, 3.0);
        CHECK(entropy_term(h, 1.0, EntropyMode::Hierarchical) == entropy_term(h, 0.5, EntropyMode::Standard));
    }
}

TEST_CASE("risk_baseline examples")
{
    const std::vector<double> r{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const RiskFilter f = risk_baseline(r, 0.2);
    CHECK(f.baseline == 0.9);
    CHECK(f.keep == std::vector<std::size_t>{8, 9});

    const RiskFilter tie = risk_baseline(std::vector<double>{0.5, 0.5, 0.5, 0.5}, 0.5);
    CHECK(tie.baseline == 0.5);
    CHECK(tie.keep == std::vector<std::size_t>{0, 1});

    const RiskFilter all = risk_baseline(std::vector<double>{0.3, 0.1, 0.2}, 1.0);
    CHECK(all.baseline == 0.1);
    CHECK(all.keep == std::vector<std::size_t>{0, 1, 2});

    CHECK(risk_keep_count(500, 0.05) == 25);
    CHECK(risk_keep_count(1000, 0.05) == 50);
    CHECK(risk_keep_count(3, 0.05) == 1);
}

TEST_CASE("risk_baseline agrees with a sort oracle, ties included")
{
    SplitMix64 rng(12);
    for (int n = 0; n < 1000; ++n) {
        const std::size_t m = 1 + rng() % 100;
        const double eps = std::array{0.05, 0.2, 0.5, 1.0}[static_cast<std::size_t>(n % 4)];
        std::vector<double> r(m);
        const bool ties = n % 3 == 0;
        for (auto& v : r) v = ties ? static_cast<double>(rng() % 4) / 4.0 : rng.uniform();
        const RiskFilter f = risk_baseline(r, eps);
        const auto o = oracle::risk_by_sort(r, eps);
        CHECK(f.baseline == o.baseline);
        CHECK(f.keep == o.keep);
        CHECK(f.keep.size() == static_cast<std::size_t>(std::ceil(eps * static_cast<double>(m) - 1e-9)));
    }
}

TEST_CASE("train_step leaves parameters unchanged when every reward ties and eta is 0")
{
    const Library only_x({make_token(Op::Var, 0)});
    const Dataset d = line_data();
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.entropy_weight = 0.0;
    Trainer t(cfg, d, only_x, short_bounds());
    const std::vector<double> before(t.params().flat().begin(), t.params().flat().end());
    const StepReport r = t.step();
    CHECK(r.kept == 1);
    CHECK(std::equal(before.begin(), before.end(), t.params().flat().begin()));
}

TEST_CASE("a one-token target is found within a few steps")
{
    const Library lib({make_token(Op::Add), make_token(Op::Var, 0)});
    const Dataset d = line_data();
    TrainConfig cfg;
    cfg.batch_size = 50;
    cfg.seed = 3;
    Trainer t(cfg, d, lib, short_bounds());
    double best = 0.0;
    for (int s = 0; s < 50 && best < 1.0; ++s) best = t.step().best_reward;
    CHECK(best == 1.0);
}

TEST_CASE("training is deterministic for a fixed seed")
{
    const Library lib = Library::standard(1);
    const Dataset d = line_data();
    TrainConfig cfg;
    cfg.batch_size = 40;
    cfg.seed = 77;
    cfg.mode = EntropyMode::Hierarchical;
    cfg.entropy_decay = 0.8;
    Trainer a(cfg, d, lib, PriorSettings{});
    Trainer b(cfg, d, lib, PriorSettings{});
    double prev_best = -1.0;
    for (int s = 0; s < 5; ++s) {
        const StepReport ra = a.step();
        const StepReport rb = b.step();
        CHECK(ra.best_expression == rb.best_expression);
        CHECK(ra.baseline == rb.baseline);
        CHECK(ra.length_histogram == rb.length_histogram);
        CHECK(ra.best_reward >= prev_best);
        prev_best = ra.best_reward;
    }
    CHECK(std::equal(a.params().flat().begin(), a.params().flat().end(), b.params().flat().begin()));
}

TEST_CASE("one update raises the log-probability of a rewarded sample")
{
    const Library lib = Library::standard(1);
    PriorSettings s;
    PriorSet priors(lib, s);
    const PolicyParams init = PolicyParams::initialized(16, static_cast<int>(lib.size()), 8);
    auto batch = sample_batch(init, priors, 4, 123);
    std::vector<ScoredSample> one{batch[0]};
    one[0].reward = 0.9;
    const auto before = sequence_logprobs(init, priors, one[0].tokens);
    const auto g = compute_gradients(init, priors, one, ObjectiveTerms{0.2, 0.0, 1.0, EntropyMode::Standard, 1.0});
    PolicyParams updated = init;
    Adam adam(updated.size(), AdamConfig{1e-4});
    adam.ascend(updated.flat(), g);
    const auto after = sequence_logprobs(updated, priors, one[0].tokens);
    CHECK(std::accumulate(after.begin(), after.end(), 0.0) > std::accumulate(before.begin(), before.end(), 0.0));
}

TEST_CASE("train_loop boundaries")
{
    const Library only_x({make_token(Op::Var, 0)});
    const Dataset d = line_data();
    const Inputs grid = recovery_grid(std::vector<Range>{{-1.0, 1.0}});
    const TokenSequence truth{0};
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_steps = 10;
    const RunResult r = train_loop(cfg, d, truth, grid, only_x, short_bounds());
    CHECK(r.recovered);
    CHECK(r.steps_to_solve == 1);
    CHECK(r.best_length == 1);

    cfg.max_steps = 0;
    const RunResult none = train_loop(cfg, d, truth, grid, only_x, short_bounds());
    CHECK_FALSE(none.recovered);
    CHECK(none.steps_to_solve == 0);
}

TEST_CASE("train_loop reports max_steps when the target is never found")
{
    const Library lib({make_token(Op::Sin), make_token(Op::Var, 0)});
    Inputs x(10, 1);
    std::vector<double> y(10);
    for (std::size_t r = 0; r < 10; ++r) {
        x.at(r, 0) = 0.1 * static_cast<double>(r) + 0.05;
        y[r] = x.at(r, 0) * x.at(r, 0);
    }
    const Dataset d(x, y);
    const TokenSequence truth = lib.parse("sin sin sin sin sin sin sin sin sin sin sin sin x1");
    TrainConfig cfg;
    cfg.batch_size = 10;
    cfg.max_steps = 3;
    PriorSettings p;
    p.length = LengthBounds{1, 5};
    std::vector<int> seen;
    LoopOptions opts;
    opts.on_step = [&](const StepReport& r) { seen.push_back(r.step); };
    const RunResult r = train_loop(cfg, d, truth, recovery_grid(std::vector<Range>{{0.0, 1.0}}), lib, p, opts);
    CHECK_FALSE(r.recovered);
    CHECK(r.steps_to_solve == 3);
    CHECK(seen == std::vector<int>{1, 2, 3});
    CHECK(r.entropy_trace.size() == 3);
    int total = 0;
    for (int c : r.initial_length_histogram) total += c;
    CHECK(total == 10);
}

TEST_CASE("invalid training configuration is rejected")
{
    TrainConfig c;
    c.risk_epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = TrainConfig{};
    c.entropy_decay = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = TrainConfig{};
    c.batch_size = 1;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
}
