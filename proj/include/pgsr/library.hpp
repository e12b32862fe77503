#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pgsr {

enum class Op { Add, Sub, Mul, Div, Sin, Cos, Exp, Log, Sqrt, Var };

struct Token {
    std::string name;
    int arity = 0;
    Op op = Op::Var;
    int var_index = -1; // only for Op::Var
};

Token make_token(Op op, int var_index = -1);
int arity_of(Op op);
// "+", "sin", ... ; for variables the token name.
std::string_view symbol_of(const Token& t);

// Index into a Library.
using TokenId = int;
// A prefix (pre-order) traversal of an expression tree.
using TokenSequence = std::vector<TokenId>;

// Ordered token set: all binary tokens, then unary, then terminals.
class Library {
public:
    explicit Library(std::vector<Token> tokens);

    // {add, sub, mul, div, sin, cos, exp, log[, sqrt], x1..xn}
    static Library standard(int n_vars, bool with_sqrt = false);

    std::size_t size() const { return tokens_.size(); }
    const Token& operator[](TokenId id) const { return tokens_[static_cast<std::size_t>(id)]; }
    const std::vector<Token>& tokens() const { return tokens_; }
    int arity(TokenId id) const { return tokens_[static_cast<std::size_t>(id)].arity; }

    int n_binary() const { return n_binary_; }
    int n_unary() const { return n_unary_; }
    int n_terminal() const { return n_terminal_; }
    int n_inputs() const { return n_inputs_; }

    std::optional<TokenId> find(std::string_view name) const;
    TokenId id(std::string_view name) const;

    // Whitespace separated token names in prefix order, e.g. "add x1 x1".
    TokenSequence parse(std::string_view prefix) const;
    std::string names(const TokenSequence& seq) const;

private:
    std::vector<Token> tokens_;
    int n_binary_ = 0;
    int n_unary_ = 0;
    int n_terminal_ = 0;
    int n_inputs_ = 0;
};

} // namespace pgsr
