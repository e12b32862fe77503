#include "pgsr/priors.hpp"

#include "pgsr/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pgsr {

void SoftLengthConfig::validate() const
{
    if (target < 1) {
        throw InvalidConfig("soft length target must be >= 1");
    }
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw InvalidConfig("soft length variance must be positive");
    }
}

void LengthBounds::validate() const
{
    if (min_length < 1 || max_length < min_length) {
        throw InvalidConfig("length bounds need 1 <= min_length <= max_length");
    }
}

void PriorSettings::validate() const
{
    if (soft_length) {
        soft_length->validate();
    }
    if (length) {
        length->validate();
    }
}

std::vector<double> equal_type_prior(const Library& lib)
{
    std::vector<double> prior(lib.size(), 0.0);
    for (std::size_t i = 0; i < lib.size(); ++i) {
        const int a = lib.arity(static_cast<TokenId>(i));
        const int n = a == 2 ? lib.n_binary() : a == 1 ? lib.n_unary() : lib.n_terminal();
        prior[i] = -std::log(static_cast<double>(n));
    }
    return prior;
}

std::vector<double> soft_length_prior(int position, const SoftLengthConfig& cfg, const Library& lib)
{
    std::vector<double> prior(lib.size(), 0.0);
    const double d = static_cast<double>(position - cfg.target);
    const double penalty = -(d * d) / (2.0 * cfg.variance);
    for (std::size_t i = 0; i < lib.size(); ++i) {
        const int a = lib.arity(static_cast<TokenId>(i));
        if ((a == 2 && position > cfg.target) || (a == 0 && position < cfg.target)) {
            prior[i] = penalty;
        }
    }
    return prior;
}

namespace {

// Arity a is allowed under max_length iff len + 1 + (required - 1 + a) <= max.
bool fits_max(int length, int required, int arity, const LengthBounds& b)
{
    return length + 1 + (required - 1 + arity) <= b.max_length;
}

// Terminals are withheld while choosing one would finish the tree short of
// min_length, unless no operator can be placed at all.
bool withhold_terminals(int length, int required, const Library& lib, const LengthBounds& b)
{
    if (required != 1 || length + 1 >= b.min_length) {
        return false;
    }
    const bool unary_ok = lib.n_unary() > 0 && fits_max(length, required, 1, b);
    const bool binary_ok = lib.n_binary() > 0 && fits_max(length, required, 2, b);
    return unary_ok || binary_ok;
}

void apply_length_mask(int length, int required, const Library& lib, const LengthBounds& b, std::span<double> mask)
{
    const bool no_terminals = withhold_terminals(length, required, lib, b);
    for (std::size_t i = 0; i < lib.size(); ++i) {
        const int a = lib.arity(static_cast<TokenId>(i));
        if (!fits_max(length, required, a, b) || (a == 0 && no_terminals)) {
            mask[i] = kMasked;
        }
    }
}

} // namespace

std::vector<double> length_mask(std::span<const TokenId> partial, const LengthBounds& bounds, const Library& lib)
{
    std::vector<double> mask(lib.size(), 0.0);
    apply_length_mask(static_cast<int>(partial.size()), required_count(partial, lib), lib, bounds, mask);
    return mask;
}

PriorSet::PriorSet(const Library& lib, PriorSettings settings) : lib_(&lib), settings_(std::move(settings))
{
    settings_.validate();
    base_ = settings_.equal_type ? equal_type_prior(lib) : std::vector<double>(lib.size(), 0.0);
    if (settings_.soft_length) {
        const int horizon = std::max(settings_.length ? settings_.length->max_length : 0, 2 * settings_.soft_length->target) + 1;
        for (int i = 1; i <= horizon; ++i) {
            slp_.push_back(soft_length_prior(i, *settings_.soft_length, lib));
        }
    }
}

void PriorSet::compose(const TreeCursor& cursor, std::span<double> prior, std::span<double> mask) const
{
    const Library& lib = *lib_;
    const std::size_t n = lib.size();
    const int position = cursor.length() + 1;

    std::copy(base_.begin(), base_.end(), prior.begin());
    if (settings_.soft_length) {
        if (static_cast<std::size_t>(position) <= slp_.size()) {
            const auto& s = slp_[static_cast<std::size_t>(position - 1)];
            for (std::size_t i = 0; i < n; ++i) {
                prior[i] += s[i];
            }
        } else {
            const auto s = soft_length_prior(position, *settings_.soft_length, lib);
            for (std::size_t i = 0; i < n; ++i) {
                prior[i] += s[i];
            }
        }
    }

    std::fill(mask.begin(), mask.end(), 0.0);
    if (settings_.length) {
        apply_length_mask(cursor.length(), cursor.required(), lib, *settings_.length, mask);
    }
    if (settings_.domain_constraints) {
        const TokenId parent = cursor.parent();
        const Op parent_op = parent >= 0 ? lib[parent].op : Op::Var;
        for (std::size_t i = 0; i < n; ++i) {
            const Op op = lib[static_cast<TokenId>(i)].op;
            const bool nested_trig = cursor.trig_ancestors() > 0 && (op == Op::Sin || op == Op::Cos);
            const bool inverse = (parent_op == Op::Exp && op == Op::Log) || (parent_op == Op::Log && op == Op::Exp);
            if (nested_trig || inverse) {
                mask[i] = kMasked;
            }
        }
    }

    const auto open = [&] { return std::any_of(mask.begin(), mask.end(), [](double m) { return m == 0.0; }); };
    if (!open() && settings_.length) {
        // Only the min-length rule can leave nothing open here; terminals always fit max_length.
        for (std::size_t i = 0; i < n; ++i) {
            if (lib.arity(static_cast<TokenId>(i)) == 0) {
                mask[i] = 0.0;
            }
        }
    }
    if (!open()) {
        throw InfeasibleMask("every token is masked at position " + std::to_string(position));
    }
}

ComposedPrior compose(std::span<const TokenId> partial, const Library& lib, const PriorSettings& settings)
{
    TreeCursor cursor(lib);
    for (TokenId t : partial) {
        cursor.push(t);
    }
    PriorSet set(lib, settings);
    ComposedPrior out{std::vector<double>(lib.size()), std::vector<double>(lib.size())};
    set.compose(cursor, out.prior, out.mask);
    return out;
}

} // namespace pgsr
