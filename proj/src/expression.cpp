#include "pgsr/expression.hpp"

#include "pgsr/errors.hpp"
#include "pgsr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pgsr {

int required_count(std::span<const TokenId> partial, const Library& lib)
{
    int count = 1;
    for (TokenId t : partial) {
        count += lib.arity(t) - 1;
    }
    return count;
}

bool is_complete(std::span<const TokenId> seq, const Library& lib)
{
    int count = 1;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (count <= 0) {
            return false;
        }
        count += lib.arity(seq[i]) - 1;
    }
    return !seq.empty() && count == 0;
}

namespace {

bool is_trig(const Token& t) { return t.op == Op::Sin || t.op == Op::Cos; }

} // namespace

void TreeCursor::push(TokenId token)
{
    if (complete()) {
        throw IncompleteExpression("cannot extend a complete expression");
    }
    const Token& t = (*lib_)[token];
    ++length_;
    required_ += t.arity - 1;
    if (t.arity > 0) {
        open_.push_back({token, t.arity, -1});
        trig_open_ += is_trig(t) ? 1 : 0;
        return;
    }
    TokenId done = token;
    while (!open_.empty()) {
        Open& top = open_.back();
        --top.remaining;
        top.last_child = done;
        if (top.remaining > 0) {
            break;
        }
        done = top.token;
        trig_open_ -= is_trig((*lib_)[done]) ? 1 : 0;
        open_.pop_back();
    }
}

Dataset::Dataset(Inputs x, std::vector<double> y_) : X(std::move(x)), y(std::move(y_))
{
    if (X.rows != y.size()) {
        throw Error("dataset row count mismatch between X and y");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(X.data.begin(), X.data.end(), finite) || !std::all_of(y.begin(), y.end(), finite)) {
        throw Error("dataset contains non-finite values");
    }
}

Inputs sample_inputs(std::span<const Range> domain, std::size_t rows, std::uint64_t seed)
{
    Inputs x(rows, domain.size());
    SplitMix64 rng(seed);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t v = 0; v < domain.size(); ++v) {
            x.at(r, v) = rng.uniform(domain[v].lo, domain[v].hi);
        }
    }
    return x;
}

bool Predictions::all_finite() const
{
    return std::all_of(finite.begin(), finite.end(), [](std::uint8_t f) { return f != 0; });
}

Predictions evaluate(std::span<const TokenId> expr, const Inputs& X, const Library& lib)
{
    if (!is_complete(expr, lib)) {
        throw IncompleteExpression("evaluate: expression is not a complete prefix tree");
    }
    const std::size_t n = X.rows;
    std::vector<std::vector<double>> stack;
    stack.reserve(expr.size());
    std::vector<std::uint8_t> ok(n, 1);

    for (auto it = expr.rbegin(); it != expr.rend(); ++it) {
        const Token& t = lib[*it];
        if (t.arity == 0) {
            auto col = X.column(static_cast<std::size_t>(t.var_index));
            stack.emplace_back(col.begin(), col.end());
            continue;
        }
        if (t.arity == 1) {
            auto& a = stack.back();
            switch (t.op) {
            case Op::Sin: for (auto& v : a) v = std::sin(v); break;
            case Op::Cos: for (auto& v : a) v = std::cos(v); break;
            case Op::Exp: for (auto& v : a) v = std::exp(v); break;
            case Op::Log: for (auto& v : a) v = std::log(v); break;
            case Op::Sqrt: for (auto& v : a) v = std::sqrt(v); break;
            default: break;
            }
            for (std::size_t r = 0; r < n; ++r) {
                ok[r] &= static_cast<std::uint8_t>(std::isfinite(a[r]));
            }
            continue;
        }
        // Operands of a binary node: first child on top of the stack.
        std::vector<double> lhs = std::move(stack.back());
        stack.pop_back();
        auto& rhs = stack.back();
        switch (t.op) {
        case Op::Add: for (std::size_t r = 0; r < n; ++r) rhs[r] = lhs[r] + rhs[r]; break;
        case Op::Sub: for (std::size_t r = 0; r < n; ++r) rhs[r] = lhs[r] - rhs[r]; break;
        case Op::Mul: for (std::size_t r = 0; r < n; ++r) rhs[r] = lhs[r] * rhs[r]; break;
        case Op::Div: for (std::size_t r = 0; r < n; ++r) rhs[r] = lhs[r] / rhs[r]; break;
        default: break;
        }
        for (std::size_t r = 0; r < n; ++r) {
            ok[r] &= static_cast<std::uint8_t>(std::isfinite(rhs[r]));
        }
    }
    return {std::move(stack.back()), std::move(ok)};
}

RewardFunction::RewardFunction(const Dataset& data, const Library& lib) : data_(&data), lib_(&lib)
{
    const auto& y = data.y;
    if (y.empty()) {
        throw DegenerateTarget("reward: empty dataset");
    }
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(y.size());
    if (!(var > 0.0)) {
        throw DegenerateTarget("reward: target has zero variance");
    }
    inv_std_ = 1.0 / std::sqrt(var);
}

double RewardFunction::operator()(std::span<const TokenId> expr) const
{
    const Predictions p = evaluate(expr, data_->X, *lib_);
    if (!p.all_finite()) {
        return 0.0;
    }
    const auto& y = data_->y;
    double sse = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r) {
        const double e = y[r] - p.values[r];
        sse += e * e;
    }
    const double nrmse = inv_std_ * std::sqrt(sse / static_cast<double>(y.size()));
    if (std::isnan(nrmse)) {
        return 0.0;
    }
    return 1.0 / (1.0 + nrmse);
}

double reward(std::span<const TokenId> expr, const Dataset& data, const Library& lib)
{
    return RewardFunction(data, lib)(expr);
}

Inputs recovery_grid(std::span<const Range> domain)
{
    return sample_inputs(domain, kRecoveryGridPoints, kRecoveryGridSeed);
}

bool recovery_check(std::span<const TokenId> expr, std::span<const TokenId> truth, const Library& lib,
                    const Inputs& grid)
{
    const Predictions a = evaluate(expr, grid, lib);
    const Predictions b = evaluate(truth, grid, lib);
    if (!a.all_finite() || !b.all_finite()) {
        return false;
    }
    for (std::size_t r = 0; r < grid.rows; ++r) {
        if (!(std::abs(a.values[r] - b.values[r]) <= kRecoveryTolerance)) {
            return false;
        }
    }
    return true;
}

bool recovery_check(std::span<const TokenId> expr, std::span<const TokenId> truth, const Library& lib,
                    std::span<const Range> domain)
{
    return recovery_check(expr, truth, lib, recovery_grid(domain));
}

namespace {

std::string infix_at(std::span<const TokenId> expr, const Library& lib, std::size_t& pos)
{
    const Token& t = lib[expr[pos++]];
    if (t.arity == 0) {
        return t.name;
    }
    if (t.arity == 1) {
        return t.name + "(" + infix_at(expr, lib, pos) + ")";
    }
    std::string lhs = infix_at(expr, lib, pos);
    std::string rhs = infix_at(expr, lib, pos);
    return "(" + lhs + " " + std::string(symbol_of(t)) + " " + rhs + ")";
}

} // namespace

std::string to_infix(std::span<const TokenId> expr, const Library& lib)
{
    if (!is_complete(expr, lib)) {
        throw IncompleteExpression("to_infix: expression is not a complete prefix tree");
    }
    std::size_t pos = 0;
    return infix_at(expr, lib, pos);
}

} // namespace pgsr
