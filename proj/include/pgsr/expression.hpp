#pragma once

#include "pgsr/library.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pgsr {

// 1 + sum(arity - 1) over the prefix: 0 means complete, k > 0 means k open slots.
int required_count(std::span<const TokenId> partial, const Library& lib);
bool is_complete(std::span<const TokenId> seq, const Library& lib);

// Incremental pre-order bookkeeping for a partially built tree: open slot
// count plus the parent and sibling of the node that will be placed next.
class TreeCursor {
public:
    explicit TreeCursor(const Library& lib) : lib_(&lib) {}

    void push(TokenId token);

    int length() const { return length_; }
    int required() const { return required_; }
    bool complete() const { return length_ > 0 && required_ == 0; }

    // -1 when there is no parent / no completed sibling yet.
    TokenId parent() const { return open_.empty() ? -1 : open_.back().token; }
    TokenId sibling() const { return open_.empty() ? -1 : open_.back().last_child; }

    // Number of open sin/cos ancestors of the next node.
    int trig_ancestors() const { return trig_open_; }

private:
    struct Open {
        TokenId token;
        int remaining;
        TokenId last_child;
    };

    const Library* lib_;
    std::vector<Open> open_;
    int length_ = 0;
    int required_ = 1;
    int trig_open_ = 0;
};

// Column-major input matrix.
struct Inputs {
    std::size_t rows = 0;
    std::size_t vars = 0;
    std::vector<double> data;

    Inputs() = default;
    Inputs(std::size_t rows, std::size_t vars) : rows(rows), vars(vars), data(rows * vars, 0.0) {}

    double& at(std::size_t row, std::size_t var) { return data[var * rows + row]; }
    double at(std::size_t row, std::size_t var) const { return data[var * rows + row]; }
    std::span<const double> column(std::size_t var) const { return {data.data() + var * rows, rows}; }
};

struct Dataset {
    Inputs X;
    std::vector<double> y;

    Dataset() = default;
    Dataset(Inputs x, std::vector<double> y);
    std::size_t rows() const { return y.size(); }
};

struct Range {
    double lo = -1.0;
    double hi = 1.0;
};

// Uniform draws in each variable's range.
Inputs sample_inputs(std::span<const Range> domain, std::size_t rows, std::uint64_t seed);

struct Predictions {
    std::vector<double> values;
    std::vector<std::uint8_t> finite; // per row; 0 when any intermediate was non-finite

    bool all_finite() const;
};

// Unprotected evaluation: overflow, domain errors and division by zero
// surface as non-finite rows.
Predictions evaluate(std::span<const TokenId> expr, const Inputs& X, const Library& lib);

// 1 / (1 + NRMSE), NRMSE normalized by the population std of y; 0 if any row is non-finite.
double reward(std::span<const TokenId> expr, const Dataset& data, const Library& lib);

// Precomputed target statistics for repeated reward evaluation on one dataset.
class RewardFunction {
public:
    RewardFunction(const Dataset& data, const Library& lib);
    double operator()(std::span<const TokenId> expr) const;

private:
    const Dataset* data_;
    const Library* lib_;
    double inv_std_;
};

inline constexpr std::size_t kRecoveryGridPoints = 1000;
inline constexpr double kRecoveryTolerance = 1e-10;
inline constexpr std::uint64_t kRecoveryGridSeed = 0x5eed'1000'0000'0001ULL;

Inputs recovery_grid(std::span<const Range> domain);

// Numeric equivalence: max |expr - truth| <= 1e-10 on the grid, both finite everywhere.
bool recovery_check(std::span<const TokenId> expr, std::span<const TokenId> truth, const Library& lib,
                    const Inputs& grid);
bool recovery_check(std::span<const TokenId> expr, std::span<const TokenId> truth, const Library& lib,
                    std::span<const Range> domain);

std::string to_infix(std::span<const TokenId> expr, const Library& lib);

} // namespace pgsr
