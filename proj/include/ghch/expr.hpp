#pragma once

// Coefficient expression language.
//
// Grammar (precedence from loosest to tightest):
//   expr    := expr ('+'|'-') expr
//            | expr ('*'|'/') expr
//            | '-' expr
//            | expr '^' expr            (right-associative)
//            | number | identifier | function '(' expr ')' | '(' expr ')'
//   function := sin | cos | exp | tanh | sech | sqrt | abs
// The identifier `pi` is a constant. Any other identifier must belong to the
// allowed-variable list given to parse(). Unary minus binds looser than '^',
// so "-x^2" is -(x^2), while "2^-x" is accepted as 2^(-x).

#include "ghch/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ghch {

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class UnknownVariableError : public ParseError {
public:
    UnknownVariableError(std::string name, std::size_t position)
        : ParseError("unknown variable '" + name + "'", position), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class EvalError : public Error {
public:
    using Error::Error;
};

enum class NodeKind { constant, variable, negate, binary, call };
enum class BinaryOp : char { add = '+', sub = '-', mul = '*', div = '/', pow = '^' };
enum class Function { sin, cos, exp, tanh, sech, sqrt, abs };

struct SourceSpan {
    std::size_t offset = 0;
    std::size_t length = 0;
};

struct Node {
    NodeKind kind = NodeKind::constant;
    double value = 0.0;
    std::string name;
    std::size_t slot = 0;
    BinaryOp op = BinaryOp::add;
    Function fn = Function::sin;
    std::vector<std::shared_ptr<const Node>> children;
    SourceSpan span;
};

using NodePtr = std::shared_ptr<const Node>;

namespace detail {

struct FunctionEntry {
    std::string_view name;
    Function fn;
};

inline constexpr FunctionEntry kFunctions[] = {
    {"sin", Function::sin},   {"cos", Function::cos},   {"exp", Function::exp},
    {"tanh", Function::tanh}, {"sech", Function::sech}, {"sqrt", Function::sqrt},
    {"abs", Function::abs},
};

inline std::string_view function_name(Function fn) {
    for (const auto& e : kFunctions)
        if (e.fn == fn) return e.name;
    return "?";
}

// Overflow-free for large |x|.
inline double sech(double x) {
    const double e = std::exp(-std::abs(x));
    return 2.0 * e / (1.0 + e * e);
}

inline double apply_function(Function fn, double a) {
    switch (fn) {
    case Function::sin: return std::sin(a);
    case Function::cos: return std::cos(a);
    case Function::exp: return std::exp(a);
    case Function::tanh: return std::tanh(a);
    case Function::sech: return sech(a);
    case Function::sqrt:
        if (a < 0.0) throw EvalError("sqrt of negative value " + std::to_string(a));
        return std::sqrt(a);
    case Function::abs: return std::abs(a);
    }
    return 0.0;
}

inline double apply_binary(BinaryOp op, double a, double b) {
    switch (op) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
    case BinaryOp::div:
        if (b == 0.0) throw EvalError("division by zero");
        return a / b;
    case BinaryOp::pow: {
        if (a == 0.0 && b < 0.0) throw EvalError("division by zero (0 raised to a negative power)");
        const double r = std::pow(a, b);
        if (std::isnan(r) && !std::isnan(a) && !std::isnan(b))
            throw EvalError("negative base " + std::to_string(a) + " raised to non-integer power");
        return r;
    }
    }
    return 0.0;
}

inline double evaluate(const Node& n, std::span<const double> slots) {
    switch (n.kind) {
    case NodeKind::constant: return n.value;
    case NodeKind::variable: return slots[n.slot];
    case NodeKind::negate: return -evaluate(*n.children[0], slots);
    case NodeKind::binary:
        return apply_binary(n.op, evaluate(*n.children[0], slots), evaluate(*n.children[1], slots));
    case NodeKind::call: return apply_function(n.fn, evaluate(*n.children[0], slots));
    }
    return 0.0;
}

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> vars) : src_(src), vars_(vars) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
        NodePtr root = parse_expr(0);
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return root;
    }

private:
    // Binding powers: + - (10,11); * / (20,21); prefix - (30); ^ (41,40).
    static constexpr int kPrefixMinus = 30;

    NodePtr parse_expr(int min_bp) {
        NodePtr lhs = parse_prefix();
        for (;;) {
            skip_ws();
            if (pos_ >= src_.size()) break;
            const char c = src_[pos_];
            int lbp = 0, rbp = 0;
            switch (c) {
            case '+': case '-': lbp = 10; rbp = 11; break;
            case '*': case '/': lbp = 20; rbp = 21; break;
            case '^': lbp = 41; rbp = 40; break;
            default: return lhs;
            }
            if (lbp < min_bp) break;
            ++pos_;
            NodePtr rhs = parse_expr(rbp);
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::binary;
            n->op = static_cast<BinaryOp>(c);
            n->span = {lhs->span.offset, rhs->span.offset + rhs->span.length - lhs->span.offset};
            n->children = {std::move(lhs), std::move(rhs)};
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr parse_prefix() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        const std::size_t start = pos_;
        const char c = src_[pos_];
        if (c == '-') {
            ++pos_;
            NodePtr operand = parse_expr(kPrefixMinus);
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::negate;
            n->span = {start, operand->span.offset + operand->span.length - start};
            n->children = {std::move(operand)};
            return n;
        }
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_expr(0);
            expect(')');
            return inner;
        }
        if (is_digit(c) || c == '.') return parse_number();
        if (is_ident_start(c)) return parse_identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && is_digit(src_[p])) {
                pos_ = p;
                while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            }
        }
        double v = 0.0;
        const char* first = src_.data() + start;
        const char* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::constant;
        n->value = v;
        n->span = {start, pos_ - start};
        return n;
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            const auto it = std::find_if(std::begin(kFunctions), std::end(kFunctions),
                                         [&](const FunctionEntry& e) { return e.name == name; });
            if (it == std::end(kFunctions)) throw ParseError("unknown function '" + name + "'", start);
            ++pos_;
            NodePtr arg = parse_expr(0);
            expect(')');
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::call;
            n->fn = it->fn;
            n->span = {start, pos_ - start};
            n->children = {std::move(arg)};
            return n;
        }
        auto n = std::make_shared<Node>();
        n->span = {start, name.size()};
        if (name == "pi") {
            n->kind = NodeKind::constant;
            n->value = std::numbers::pi;
            return n;
        }
        const auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it == vars_.end()) throw UnknownVariableError(name, start);
        n->kind = NodeKind::variable;
        n->name = name;
        n->slot = static_cast<std::size_t>(it - vars_.begin());
        return n;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != c)
            throw ParseError(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

    std::string_view src_;
    std::span<const std::string> vars_;
    std::size_t pos_ = 0;
};

inline void print(const Node& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::constant: {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, n.value);
        out.append(buf, ptr);
        return;
    }
    case NodeKind::variable: out += n.name; return;
    case NodeKind::negate:
        out += "(-";
        print(*n.children[0], out);
        out += ')';
        return;
    case NodeKind::binary:
        out += '(';
        print(*n.children[0], out);
        out += ' ';
        out += static_cast<char>(n.op);
        out += ' ';
        print(*n.children[1], out);
        out += ')';
        return;
    case NodeKind::call:
        out += function_name(n.fn);
        out += '(';
        print(*n.children[0], out);
        out += ')';
        return;
    }
}

inline bool uses_variable(const Node& n, std::string_view name) {
    if (n.kind == NodeKind::variable && n.name == name) return true;
    return std::any_of(n.children.begin(), n.children.end(),
                       [&](const NodePtr& c) { return uses_variable(*c, name); });
}

}  // namespace detail

/// Structural equality of two trees, ignoring source spans.
inline bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.children.size() != b.children.size()) return false;
    switch (a.kind) {
    case NodeKind::constant:
        if (!(a.value == b.value)) return false;
        break;
    case NodeKind::variable:
        if (a.name != b.name || a.slot != b.slot) return false;
        break;
    case NodeKind::binary:
        if (a.op != b.op) return false;
        break;
    case NodeKind::call:
        if (a.fn != b.fn) return false;
        break;
    case NodeKind::negate: break;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!structurally_equal(*a.children[i], *b.children[i])) return false;
    return true;
}

/// A parsed expression together with the variable list it was parsed against.
/// Immutable; copies share the tree.
class Expr {
public:
    Expr() = default;
    Expr(NodePtr root, std::vector<std::string> variables, std::string source)
        : root_(std::move(root)), variables_(std::move(variables)), source_(std::move(source)) {}

    const Node& root() const { return *root_; }
    bool empty() const { return !root_; }
    const std::vector<std::string>& variables() const { return variables_; }
    const std::string& source() const { return source_; }

    /// Evaluate with values given in the order of variables().
    double eval(std::span<const double> slots) const {
        if (slots.size() < variables_.size())
            throw ContractViolation("expression '" + source_ + "' needs " +
                                    std::to_string(variables_.size()) + " bindings");
        return detail::evaluate(*root_, slots);
    }

    double eval(const std::map<std::string, double>& bindings) const {
        std::vector<double> slots(variables_.size(), 0.0);
        for (std::size_t i = 0; i < variables_.size(); ++i) {
            const auto it = bindings.find(variables_[i]);
            if (it != bindings.end()) {
                slots[i] = it->second;
            } else if (depends_on(variables_[i])) {
                throw ContractViolation("missing binding for '" + variables_[i] + "'");
            }
        }
        return detail::evaluate(*root_, slots);
    }

    bool depends_on(std::string_view name) const { return detail::uses_variable(*root_, name); }

    /// Fully parenthesized rendering; parses back to a structurally identical tree.
    std::string to_string() const {
        std::string out;
        detail::print(*root_, out);
        return out;
    }

private:
    NodePtr root_;
    std::vector<std::string> variables_;
    std::string source_;
};

inline Expr parse(std::string_view src, std::vector<std::string> allowed_vars) {
    detail::Parser p(src, allowed_vars);
    NodePtr root = p.parse();
    return Expr(std::move(root), std::move(allowed_vars), std::string(src));
}

}  // namespace ghch
