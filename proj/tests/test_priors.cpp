#include "oracles.hpp"

#include "pgsr/errors.hpp"
#include "pgsr/policy.hpp"
#include "pgsr/priors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace pgsr;

namespace {

std::vector<double> softmax(const std::vector<double>& z)
{
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
    for (auto& v : p) v /= s;
    return p;
}

Library make_library(int n2, int n1, int n0)
{
    static const Op binary[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
    static const Op unary[] = {Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt};
    std::vector<Token> t;
    for (int i = 0; i < n2; ++i) t.push_back(make_token(binary[i]));
    for (int i = 0; i < n1; ++i) t.push_back(make_token(unary[i]));
    for (int i = 0; i < n0; ++i) t.push_back(make_token(Op::Var, i));
    return Library(std::move(t));
}

std::array<double, 3> class_mass(const Library& lib, const std::vector<double>& p)
{
    std::array<double, 3> m{};
    for (std::size_t i = 0; i < p.size(); ++i) m[static_cast<std::size_t>(2 - lib.arity(static_cast<TokenId>(i)))] += p[i];
    return m;
}

} // namespace

TEST_CASE("equal-type prior examples")
{
    {
        const Library lib = make_library(4, 4, 2);
        const auto p = softmax(equal_type_prior(lib));
        for (int i = 0; i < 8; ++i) CHECK(p[static_cast<std::size_t>(i)] == doctest::Approx(1.0 / 12).epsilon(1e-14));
        CHECK(p[8] == doctest::Approx(1.0 / 6).epsilon(1e-14));
        for (double m : class_mass(lib, p)) CHECK(m == doctest::Approx(1.0 / 3).epsilon(1e-14));
    }
    {
        const Library lib = make_library(1, 1, 1);
        CHECK(equal_type_prior(lib) == std::vector<double>{0.0, 0.0, 0.0});
    }
    {
        const Library lib = make_library(2, 0, 2);
        const auto p = softmax(equal_type_prior(lib));
        for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("equal-type prior is shift invariant")
{
    const Library lib = make_library(3, 2, 4);
    const auto base = softmax(equal_type_prior(lib));
    for (double c : {-7.5, 0.3, 42.0}) {
        auto shifted = equal_type_prior(lib);
        for (auto& v : shifted) v += c;
        const auto p = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - base[i]) < 1e-15);
    }
}

TEST_CASE("soft length prior examples")
{
    const Library lib = Library::standard(1); // 4 binary, 4 unary, 1 terminal
    const SoftLengthConfig cfg{10, 5.0};
    CHECK(soft_length_prior(10, cfg, lib) == std::vector<double>(lib.size(), 0.0));

    const auto early = soft_length_prior(5, cfg, lib);
    for (int i = 0; i < 8; ++i) CHECK(early[static_cast<std::size_t>(i)] == 0.0);
    CHECK(early[8] == -2.5);

    const auto late = soft_length_prior(15, cfg, lib);
    for (int i = 0; i < 4; ++i) CHECK(late[static_cast<std::size_t>(i)] == -2.5);
    for (int i = 4; i < 9; ++i) CHECK(late[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("soft length penalty grows with distance from the target")
{
    const Library lib = Library::standard(1);
    const SoftLengthConfig cfg{10, 20.0};
    for (int i = 1; i < 10; ++i) {
        CHECK(soft_length_prior(i, cfg, lib)[8] < soft_length_prior(i + 1, cfg, lib)[8]);
    }
    for (int i = 11; i < 30; ++i) {
        CHECK(soft_length_prior(i + 1, cfg, lib)[0] < soft_length_prior(i, cfg, lib)[0]);
    }
}

TEST_CASE("length mask examples")
{
    const Library lib = Library::standard(1);
    const TokenId add = lib.id("add");
    const TokenId sin = lib.id("sin");
    const TokenId x = lib.id("x1");

    const auto none = length_mask({}, LengthBounds{1, 30}, lib);
    CHECK(std::all_of(none.begin(), none.end(), [](double m) { return m == 0.0; }));

    const TokenSequence p1 = lib.parse("add add x1");
    const auto m1 = length_mask(p1, LengthBounds{1, 5}, lib);
    CHECK(oracle::min_completion_length(p1, add, lib).value() == 7);
    CHECK(oracle::min_completion_length(p1, sin, lib).value() == 6);
    CHECK(oracle::min_completion_length(p1, x, lib).value() == 5);
    CHECK(m1[static_cast<std::size_t>(add)] == kMasked);
    CHECK(m1[static_cast<std::size_t>(sin)] == kMasked);
    CHECK(m1[static_cast<std::size_t>(x)] == 0.0);

    const TokenSequence p2 = lib.parse("add x1");
    const auto m2 = length_mask(p2, LengthBounds{4, 30}, lib);
    CHECK(oracle::min_completion_length(p2, x, lib).value() == 3);
    CHECK(m2[static_cast<std::size_t>(x)] == kMasked);
    CHECK(m2[static_cast<std::size_t>(add)] == 0.0);
}

TEST_CASE("length mask agrees with brute-force minimal completions")
{
    const Library lib = Library::standard(2);
    SplitMix64 rng(21);
    for (int n = 0; n < 300; ++n) {
        LengthBounds b;
        b.min_length = 1 + static_cast<int>(rng() % 6);
        b.max_length = b.min_length + static_cast<int>(rng() % 20);
        const TokenSequence e = oracle::random_expression(lib, rng, b.max_length);
        for (std::size_t cut = 0; cut < e.size(); ++cut) {
            const TokenSequence prefix(e.begin(), e.begin() + static_cast<long>(cut));
            const auto mask = length_mask(prefix, b, lib);
            for (std::size_t k = 0; k < lib.size(); ++k) {
                const int shortest = oracle::min_completion_length(prefix, static_cast<TokenId>(k), lib).value();
                if (shortest > b.max_length) {
                    CHECK(mask[k] == kMasked);
                }
                if (mask[k] == 0.0) {
                    CHECK(shortest <= b.max_length);
                }
            }
        }
    }
}

TEST_CASE("length mask keeps a terminal when nothing else fits")
{
    const Library only_x({make_token(Op::Var, 0)});
    const auto m = length_mask({}, LengthBounds{4, 30}, only_x);
    CHECK(m[0] == 0.0);
}

TEST_CASE("compose examples")
{
    const Library lib = Library::standard(1);
    PriorSettings off;
    off.equal_type = false;
    off.length.reset();
    const auto id = compose({}, lib, off);
    CHECK(id.prior == std::vector<double>(lib.size(), 0.0));
    CHECK(id.mask == std::vector<double>(lib.size(), 0.0));

    PriorSettings both;
    both.soft_length = SoftLengthConfig{10, 5.0};
    both.length = LengthBounds{1, 30};
    TokenSequence nine(9, lib.id("sin"));
    CHECK(compose(nine, lib, both).prior == equal_type_prior(lib));

    // SLP at position 1 lowers the terminal probability under zero emissions
    PriorSettings plain;
    plain.length = LengthBounds{1, 30};
    PriorSettings slp = plain;
    slp.soft_length = SoftLengthConfig{10, 20.0};
    const auto terminal_prob = [&](const PriorSettings& s) {
        const auto c = compose({}, lib, s);
        std::vector<double> zeros(lib.size(), 0.0), p(lib.size()), lp(lib.size());
        masked_softmax(zeros, c.prior, c.mask, p, lp);
        return p[static_cast<std::size_t>(lib.id("x1"))];
    };
    CHECK(terminal_prob(slp) < terminal_prob(plain));
}

TEST_CASE("domain constraints mask nested trig and inverse unaries")
{
    const Library lib = Library::standard(1);
    PriorSettings s;
    s.domain_constraints = true;
    s.length = LengthBounds{1, 30};
    const auto under_sin = compose(lib.parse("sin add"), lib, s).mask;
    CHECK(under_sin[static_cast<std::size_t>(lib.id("sin"))] == kMasked);
    CHECK(under_sin[static_cast<std::size_t>(lib.id("cos"))] == kMasked);
    CHECK(under_sin[static_cast<std::size_t>(lib.id("exp"))] == 0.0);
    const auto under_exp = compose(lib.parse("exp"), lib, s).mask;
    CHECK(under_exp[static_cast<std::size_t>(lib.id("log"))] == kMasked);
    CHECK(under_exp[static_cast<std::size_t>(lib.id("exp"))] == 0.0);
}

TEST_CASE("sampled lengths respect the bounds")
{
    const Library lib = Library::standard(2);
    for (LengthBounds b : {LengthBounds{4, 30}, LengthBounds{1, 5}, LengthBounds{7, 9}}) {
        PriorSettings s;
        s.length = b;
        s.soft_length = SoftLengthConfig{10, 5.0};
        PriorSet priors(lib, s);
        const PolicyParams params = PolicyParams::initialized(8, static_cast<int>(lib.size()), 1);
        const auto batch = sample_batch(params, priors, 1000, 77);
        for (const auto& smp : batch) {
            CHECK(is_complete(smp.tokens, lib));
            CHECK(static_cast<int>(smp.tokens.size()) >= b.min_length);
            CHECK(static_cast<int>(smp.tokens.size()) <= b.max_length);
        }
    }
}

TEST_CASE("invalid prior configuration is rejected")
{
    CHECK_THROWS_AS(SoftLengthConfig({0, 5.0}).validate(), InvalidConfig);
    CHECK_THROWS_AS(SoftLengthConfig({10, 0.0}).validate(), InvalidConfig);
    CHECK_THROWS_AS(LengthBounds({5, 4}).validate(), InvalidConfig);
    CHECK_THROWS_AS(LengthBounds({0, 4}).validate(), InvalidConfig);
}
