#pragma once

#include "pgsr/expression.hpp"
#include "pgsr/library.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pgsr {

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

struct SoftLengthConfig {
    int target = 10;       // lambda
    double variance = 5.0; // sigma^2

    void validate() const;
    bool operator==(const SoftLengthConfig&) const = default;
};

struct LengthBounds {
    int min_length = 4;
    int max_length = 30;

    void validate() const;
    bool operator==(const LengthBounds&) const = default;
};

// Logits whose softmax gives every nonempty arity class the same total mass,
// split uniformly within the class. Constant offset c = 0.
std::vector<double> equal_type_prior(const Library& lib);

// Position-dependent Gaussian penalty: terminals before the target length,
// binary tokens after it. `position` is 1-based.
std::vector<double> soft_length_prior(int position, const SoftLengthConfig& cfg, const Library& lib);

// 0 / -inf mask keeping every completion within the length bounds.
std::vector<double> length_mask(std::span<const TokenId> partial, const LengthBounds& bounds, const Library& lib);

struct PriorSettings {
    bool equal_type = true;
    std::optional<SoftLengthConfig> soft_length;
    std::optional<LengthBounds> length = LengthBounds{};
    // No sin/cos below sin/cos; no exp directly under log or log under exp.
    bool domain_constraints = false;

    void validate() const;
    bool operator==(const PriorSettings&) const = default;
};

// Precomputed prior/mask state for one library; cheap per-step composition.
class PriorSet {
public:
    PriorSet(const Library& lib, PriorSettings settings);

    const Library& library() const { return *lib_; }
    const PriorSettings& settings() const { return settings_; }

    // Writes prior (sum of enabled additive priors) and mask (0 / -inf) for the
    // next token given the cursor state. Throws InfeasibleMask if nothing is left.
    void compose(const TreeCursor& cursor, std::span<double> prior, std::span<double> mask) const;

private:
    const Library* lib_;
    PriorSettings settings_;
    std::vector<double> base_;             // equal-type prior or zeros
    std::vector<std::vector<double>> slp_; // slp_[i - 1] for positions up to the table size
};

struct ComposedPrior {
    std::vector<double> prior;
    std::vector<double> mask;
};

// Standalone composition for a 1-based position and the prefix placed so far.
ComposedPrior compose(std::span<const TokenId> partial, const Library& lib, const PriorSettings& settings);

} // namespace pgsr
