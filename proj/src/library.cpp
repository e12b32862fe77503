#include "pgsr/library.hpp"

#include "pgsr/errors.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace pgsr {

int arity_of(Op op)
{
    switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
        return 1;
    case Op::Var:
        return 0;
    }
    return 0;
}

Token make_token(Op op, int var_index)
{
    static constexpr const char* names[] = {"add", "sub", "mul", "div", "sin", "cos", "exp", "log", "sqrt"};
    Token t;
    t.op = op;
    t.arity = arity_of(op);
    if (op == Op::Var) {
        if (var_index < 0) {
            throw InvalidLibrary("variable token needs a non-negative index");
        }
        t.var_index = var_index;
        t.name = "x" + std::to_string(var_index + 1);
    } else {
        t.name = names[static_cast<int>(op)];
    }
    return t;
}

std::string_view symbol_of(const Token& t)
{
    switch (t.op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    default: return t.name;
    }
}

Library::Library(std::vector<Token> tokens) : tokens_(std::move(tokens))
{
    std::set<std::string> seen;
    int last_arity = 2;
    for (const auto& t : tokens_) {
        if (t.arity < 0 || t.arity > 2 || t.arity != arity_of(t.op)) {
            throw InvalidLibrary("token '" + t.name + "' has an inconsistent arity");
        }
        if (t.arity > last_arity) {
            throw InvalidLibrary("tokens must be ordered binary, unary, terminal");
        }
        last_arity = t.arity;
        if (!seen.insert(t.name).second) {
            throw InvalidLibrary("duplicate token name '" + t.name + "'");
        }
        switch (t.arity) {
        case 2: ++n_binary_; break;
        case 1: ++n_unary_; break;
        default:
            ++n_terminal_;
            n_inputs_ = std::max(n_inputs_, t.var_index + 1);
        }
    }
    if (n_terminal_ == 0) {
        throw InvalidLibrary("library needs at least one terminal token");
    }
}

Library Library::standard(int n_vars, bool with_sqrt)
{
    std::vector<Token> t;
    for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sin, Op::Cos, Op::Exp, Op::Log}) {
        t.push_back(make_token(op));
    }
    if (with_sqrt) {
        t.push_back(make_token(Op::Sqrt));
    }
    for (int v = 0; v < n_vars; ++v) {
        t.push_back(make_token(Op::Var, v));
    }
    return Library(std::move(t));
}

std::optional<TokenId> Library::find(std::string_view name) const
{
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].name == name) {
            return static_cast<TokenId>(i);
        }
    }
    return std::nullopt;
}

TokenId Library::id(std::string_view name) const
{
    if (auto i = find(name)) {
        return *i;
    }
    throw InvalidLibrary("unknown token '" + std::string(name) + "'");
}

TokenSequence Library::parse(std::string_view prefix) const
{
    TokenSequence seq;
    std::istringstream in{std::string(prefix)};
    std::string word;
    while (in >> word) {
        seq.push_back(id(word));
    }
    return seq;
}

std::string Library::names(const TokenSequence& seq) const
{
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) {
            out += ' ';
        }
        out += (*this)[seq[i]].name;
    }
    return out;
}

} // namespace pgsr
