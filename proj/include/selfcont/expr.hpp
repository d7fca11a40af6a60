#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace selfcont {

/// Scalar expression language shared by field files, germ curves, reference
/// paths and verification families.
///
/// Grammar:
///   expr  := term (("+"|"-") term)*
///   term  := unary (("*"|"/") unary)*
///   unary := "-" unary | atom
///   atom  := NUMBER | "x" INT | SCALAR | FUNC "(" expr ("," expr)* ")" | "(" expr ")"
///   FUNC  := abs | sign | sqrt | sin | cos | min | max | norm | if
/// with norm(...) the Euclidean norm of its arguments and if(c,a,b) taking a
/// predicate c of the form `expr relop expr`.
///
/// SCALAR is a context-dependent name: "eps" in field/germ files, "t" for
/// reference paths, "t"/"j" for verification families.

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                             std::to_string(col)),
          line_(line),
          col_(col) {}
    int line() const { return line_; }
    int col() const { return col_; }

  private:
    int line_;
    int col_;
};

enum class EvalErrorKind { OutsideDomain, Undefined, NonFinite, Unbound };

class EvalError : public std::runtime_error {
  public:
    EvalError(EvalErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    EvalErrorKind kind() const { return kind_; }

  private:
    EvalErrorKind kind_;
};

struct EvalEnv {
    const double* x = nullptr;
    int n = 0;
    double s0 = 0.0;  // "eps" or "t"
    double s1 = 0.0;  // "j"
};

enum class Op : std::uint8_t {
    Num,
    Var,       // a = 0-based variable index
    Scalar0,   // eps / t
    Scalar1,   // j
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Abs,
    Sign,
    Sqrt,
    Sin,
    Cos,
    Min,   // var-args
    Max,   // var-args
    Norm,  // var-args
    If,    // a = cmp node, b = then, c = else
    CmpLt,
    CmpLe,
    CmpGt,
    CmpGe,
    CmpEq,
    CmpNe,
};

inline bool is_cmp(Op op) { return op >= Op::CmpLt && op <= Op::CmpNe; }

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct Expr {
    struct Node {
        Op op = Op::Num;
        double value = 0.0;
        int a = -1, b = -1, c = -1;
        int arg_begin = 0, arg_count = 0;
    };

    std::vector<Node> nodes;
    std::vector<int> args;
    int root = -1;

    bool empty() const { return root < 0; }

    double eval(const EvalEnv& env) const { return eval_node(root, env); }

    double eval_node(int idx, const EvalEnv& env) const {
        const Node& n = nodes[idx];
        switch (n.op) {
            case Op::Num: return n.value;
            case Op::Var: return env.x[n.a];
            case Op::Scalar0: return env.s0;
            case Op::Scalar1: return env.s1;
            case Op::Neg: return -eval_node(n.a, env);
            case Op::Add: return eval_node(n.a, env) + eval_node(n.b, env);
            case Op::Sub: return eval_node(n.a, env) - eval_node(n.b, env);
            case Op::Mul: return eval_node(n.a, env) * eval_node(n.b, env);
            case Op::Div: return eval_node(n.a, env) / eval_node(n.b, env);
            case Op::Abs: return std::fabs(eval_node(n.a, env));
            case Op::Sign: return sign_of(eval_node(n.a, env));
            case Op::Sqrt: return std::sqrt(eval_node(n.a, env));
            case Op::Sin: return std::sin(eval_node(n.a, env));
            case Op::Cos: return std::cos(eval_node(n.a, env));
            case Op::Min: {
                double v = eval_node(args[n.arg_begin], env);
                for (int i = 1; i < n.arg_count; ++i)
                    v = std::fmin(v, eval_node(args[n.arg_begin + i], env));
                return v;
            }
            case Op::Max: {
                double v = eval_node(args[n.arg_begin], env);
                for (int i = 1; i < n.arg_count; ++i)
                    v = std::fmax(v, eval_node(args[n.arg_begin + i], env));
                return v;
            }
            case Op::Norm: {
                double s = 0.0;
                for (int i = 0; i < n.arg_count; ++i) {
                    const double c = eval_node(args[n.arg_begin + i], env);
                    s += c * c;
                }
                return std::sqrt(s);
            }
            case Op::If:
                return cmp_node(n.a, env) ? eval_node(n.b, env) : eval_node(n.c, env);
            default: throw EvalError(EvalErrorKind::Unbound, "comparison outside if()");
        }
    }

    bool cmp_node(int idx, const EvalEnv& env) const {
        const Node& n = nodes[idx];
        const double l = eval_node(n.a, env);
        const double r = eval_node(n.b, env);
        switch (n.op) {
            case Op::CmpLt: return l < r;
            case Op::CmpLe: return l <= r;
            case Op::CmpGt: return l > r;
            case Op::CmpGe: return l >= r;
            case Op::CmpEq: return l == r;
            case Op::CmpNe: return l != r;
            default: throw EvalError(EvalErrorKind::Unbound, "not a comparison node");
        }
    }

    /// Canonical text form: single spaces around binary operators, comma-space
    /// argument separators, parentheses only where the tree requires them.
    std::string print() const { return print_node(root, /*parent_level=*/0, false); }

    std::string print_node(int idx, int parent_level, bool right_operand) const;

    int add_node(Node n) {
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }
};

inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline int op_level(Op op) {
    switch (op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        default: return 4;
    }
}

inline std::string Expr::print_node(int idx, int parent_level, bool right_operand) const {
    const Node& n = nodes[idx];
    const int level = op_level(n.op);
    std::string out;
    switch (n.op) {
        case Op::Num: out = format_double(n.value); break;
        case Op::Var: out = "x" + std::to_string(n.a + 1); break;
        case Op::Scalar0: out = "eps"; break;
        case Op::Scalar1: out = "j"; break;
        case Op::Neg: out = "-" + print_node(n.a, level, false); break;
        case Op::Add:
            out = print_node(n.a, level, false) + " + " + print_node(n.b, level, true);
            break;
        case Op::Sub:
            out = print_node(n.a, level, false) + " - " + print_node(n.b, level, true);
            break;
        case Op::Mul:
            out = print_node(n.a, level, false) + " * " + print_node(n.b, level, true);
            break;
        case Op::Div:
            out = print_node(n.a, level, false) + " / " + print_node(n.b, level, true);
            break;
        case Op::Abs:
        case Op::Sign:
        case Op::Sqrt:
        case Op::Sin:
        case Op::Cos: {
            const char* name = n.op == Op::Abs    ? "abs"
                               : n.op == Op::Sign ? "sign"
                               : n.op == Op::Sqrt ? "sqrt"
                               : n.op == Op::Sin  ? "sin"
                                                  : "cos";
            out = std::string(name) + "(" + print_node(n.a, 0, false) + ")";
            break;
        }
        case Op::Min:
        case Op::Max:
        case Op::Norm: {
            const char* name = n.op == Op::Min ? "min" : n.op == Op::Max ? "max" : "norm";
            out = std::string(name) + "(";
            for (int i = 0; i < n.arg_count; ++i) {
                if (i) out += ", ";
                out += print_node(args[n.arg_begin + i], 0, false);
            }
            out += ")";
            break;
        }
        case Op::If:
            out = "if(" + print_node(n.a, 0, false) + ", " + print_node(n.b, 0, false) +
                  ", " + print_node(n.c, 0, false) + ")";
            break;
        case Op::CmpLt:
        case Op::CmpLe:
        case Op::CmpGt:
        case Op::CmpGe:
        case Op::CmpEq:
        case Op::CmpNe: {
            const char* rel = n.op == Op::CmpLt   ? "<"
                              : n.op == Op::CmpLe ? "<="
                              : n.op == Op::CmpGt ? ">"
                              : n.op == Op::CmpGe ? ">="
                              : n.op == Op::CmpEq ? "=="
                                                  : "!=";
            out = print_node(n.a, 0, false) + " " + rel + " " + print_node(n.b, 0, false);
            break;
        }
    }
    // Parenthesize when precedence drops, when a same-level node sits in a
    // right operand (preserves the parsed tree bitwise), and under unary minus
    // applied to any binary operation.
    bool need_paren = false;
    if (level < 4) {
        if (level < parent_level) need_paren = true;
        if (level == parent_level && right_operand) need_paren = true;
        if (parent_level == 3 && level <= 2) need_paren = true;
    }
    return need_paren ? "(" + out + ")" : out;
}

// ---------------------------------------------------------------------------
// Lexer / parser
// ---------------------------------------------------------------------------

struct ParseOptions {
    int dim = 0;                        // number of x variables; 0 = none allowed
    const char* scalar0 = nullptr;      // e.g. "eps" or "t"
    const char* scalar1 = nullptr;      // e.g. "j"
};

namespace detail {

struct Token {
    enum Kind { Number, Ident, Punct, End } kind = End;
    std::string text;
    double value = 0.0;
    int line = 1, col = 1;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) { tokenize(); }
    const std::vector<Token>& tokens() const { return toks_; }

  private:
    void tokenize() {
        std::size_t i = 0;
        int line = 1, col = 1;
        auto advance = [&](std::size_t k) {
            for (std::size_t j = 0; j < k; ++j, ++i) {
                if (src_[i] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
            }
        };
        while (i < src_.size()) {
            const char c = src_[i];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance(1);
                continue;
            }
            Token t;
            t.line = line;
            t.col = col;
            if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
                if (j < src_.size() && src_[j] == '.') {
                    ++j;
                    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
                }
                if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
                    std::size_t k = j + 1;
                    if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
                    if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                        ++k;
                        while (k < src_.size() &&
                               std::isdigit(static_cast<unsigned char>(src_[k])))
                            ++k;
                        j = k;
                    }
                }
                t.kind = Token::Number;
                t.text = std::string(src_.substr(i, j - i));
                auto res = std::from_chars(src_.data() + i, src_.data() + j, t.value);
                if (res.ec != std::errc()) throw ParseError("bad number literal", line, col);
                advance(j - i);
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) ||
                                           src_[j] == '_'))
                    ++j;
                t.kind = Token::Ident;
                t.text = std::string(src_.substr(i, j - i));
                advance(j - i);
            } else {
                static const char* two[] = {"==", "!=", "<=", ">=", "=>"};
                t.kind = Token::Punct;
                bool matched = false;
                if (i + 1 < src_.size()) {
                    const std::string pair = std::string(src_.substr(i, 2));
                    for (const char* p : two)
                        if (pair == p) {
                            t.text = pair;
                            advance(2);
                            matched = true;
                            break;
                        }
                }
                if (!matched) {
                    static const std::string singles = "+-*/(),;<>=";
                    if (singles.find(c) == std::string::npos)
                        throw ParseError(std::string("unexpected character '") + c + "'", line,
                                         col);
                    t.text = std::string(1, c);
                    advance(1);
                }
            }
            toks_.push_back(std::move(t));
        }
        Token end;
        end.kind = Token::End;
        end.line = line;
        end.col = col;
        toks_.push_back(end);
    }

    std::string_view src_;
    std::vector<Token> toks_;
};

class Parser {
  public:
    Parser(std::string_view src, ParseOptions opts) : lexer_(src), opts_(opts) {}

    const Token& peek() const { return lexer_.tokens()[pos_]; }
    const Token& get() { return lexer_.tokens()[pos_++]; }

    bool accept_punct(const char* p) {
        if (peek().kind == Token::Punct && peek().text == p) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_punct(const char* p) {
        if (!accept_punct(p)) fail(std::string("expected '") + p + "'");
    }

    bool accept_ident(const char* name) {
        if (peek().kind == Token::Ident && peek().text == name) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_ident(const char* name) {
        if (!accept_ident(name)) fail(std::string("expected '") + name + "'");
    }

    int expect_int() {
        const Token& t = peek();
        if (t.kind != Token::Number || t.value != std::floor(t.value) ||
            t.text.find('.') != std::string::npos || t.text.find('e') != std::string::npos ||
            t.text.find('E') != std::string::npos)
            fail("expected integer");
        ++pos_;
        return static_cast<int>(t.value);
    }

    double expect_number() {
        const Token& t = peek();
        if (t.kind != Token::Number) fail("expected number");
        ++pos_;
        return t.value;
    }

    void expect_end() {
        if (peek().kind != Token::End) fail("unexpected trailing input");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        std::string ctx = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(msg + " (found " + ctx + ")", t.line, t.col);
    }

    // expr := term (("+"|"-") term)*
    int parse_expr(Expr& e) {
        int lhs = parse_term(e);
        for (;;) {
            if (accept_punct("+"))
                lhs = e.add_node({Op::Add, 0.0, lhs, parse_term(e)});
            else if (accept_punct("-"))
                lhs = e.add_node({Op::Sub, 0.0, lhs, parse_term(e)});
            else
                return lhs;
        }
    }

    int parse_term(Expr& e) {
        int lhs = parse_unary(e);
        for (;;) {
            if (accept_punct("*"))
                lhs = e.add_node({Op::Mul, 0.0, lhs, parse_unary(e)});
            else if (accept_punct("/"))
                lhs = e.add_node({Op::Div, 0.0, lhs, parse_unary(e)});
            else
                return lhs;
        }
    }

    int parse_unary(Expr& e) {
        if (accept_punct("-")) return e.add_node({Op::Neg, 0.0, parse_unary(e)});
        return parse_atom(e);
    }

    int parse_atom(Expr& e) {
        const Token& t = peek();
        if (t.kind == Token::Number) {
            ++pos_;
            Expr::Node n;
            n.op = Op::Num;
            n.value = t.value;
            return e.add_node(n);
        }
        if (accept_punct("(")) {
            const int inner = parse_expr(e);
            expect_punct(")");
            return inner;
        }
        if (t.kind == Token::Ident) {
            const std::string& name = t.text;
            if (opts_.scalar0 && name == opts_.scalar0) {
                ++pos_;
                return e.add_node({Op::Scalar0});
            }
            if (opts_.scalar1 && name == opts_.scalar1) {
                ++pos_;
                return e.add_node({Op::Scalar1});
            }
            if (name.size() >= 2 && name[0] == 'x' &&
                std::isdigit(static_cast<unsigned char>(name[1]))) {
                int idx = 0;
                auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
                if (res.ec == std::errc() && res.ptr == name.data() + name.size()) {
                    if (idx < 1 || idx > opts_.dim)
                        fail("variable " + name + " out of range for dimension " +
                             std::to_string(opts_.dim));
                    ++pos_;
                    Expr::Node n;
                    n.op = Op::Var;
                    n.a = idx - 1;
                    return e.add_node(n);
                }
            }
            static const struct {
                const char* name;
                Op op;
                int min_args, max_args;
            } funcs[] = {
                {"abs", Op::Abs, 1, 1},    {"sign", Op::Sign, 1, 1}, {"sqrt", Op::Sqrt, 1, 1},
                {"sin", Op::Sin, 1, 1},    {"cos", Op::Cos, 1, 1},   {"min", Op::Min, 2, 64},
                {"max", Op::Max, 2, 64},   {"norm", Op::Norm, 1, 64},
            };
            for (const auto& f : funcs) {
                if (name == f.name) {
                    ++pos_;
                    expect_punct("(");
                    std::vector<int> children;
                    children.push_back(parse_expr(e));
                    while (accept_punct(",")) children.push_back(parse_expr(e));
                    expect_punct(")");
                    if (static_cast<int>(children.size()) < f.min_args ||
                        static_cast<int>(children.size()) > f.max_args)
                        fail(std::string("arity mismatch for ") + f.name);
                    if (f.max_args == 1) {
                        Expr::Node n;
                        n.op = f.op;
                        n.a = children[0];
                        return e.add_node(n);
                    }
                    Expr::Node n;
                    n.op = f.op;
                    n.arg_begin = static_cast<int>(e.args.size());
                    n.arg_count = static_cast<int>(children.size());
                    for (int c : children) e.args.push_back(c);
                    return e.add_node(n);
                }
            }
            if (name == "if") {
                ++pos_;
                expect_punct("(");
                const int cond = parse_comparison(e);
                expect_punct(",");
                const int then_e = parse_expr(e);
                expect_punct(",");
                const int else_e = parse_expr(e);
                expect_punct(")");
                Expr::Node n;
                n.op = Op::If;
                n.a = cond;
                n.b = then_e;
                n.c = else_e;
                return e.add_node(n);
            }
            fail("unknown identifier '" + name + "'");
        }
        fail("expected expression");
    }

    // predicate := expr relop expr
    int parse_comparison(Expr& e) {
        const int lhs = parse_expr(e);
        Op rel;
        if (accept_punct("<="))
            rel = Op::CmpLe;
        else if (accept_punct(">="))
            rel = Op::CmpGe;
        else if (accept_punct("=="))
            rel = Op::CmpEq;
        else if (accept_punct("!="))
            rel = Op::CmpNe;
        else if (accept_punct("<"))
            rel = Op::CmpLt;
        else if (accept_punct(">"))
            rel = Op::CmpGt;
        else {
            fail("expected comparison operator");
        }
        return e.add_node({rel, 0.0, lhs, parse_expr(e)});
    }

  private:
    Lexer lexer_;
    ParseOptions opts_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse a single scalar expression; the whole input must be consumed.
inline Expr parse_expression(std::string_view text, const ParseOptions& opts) {
    detail::Parser p(text, opts);
    Expr e;
    e.root = p.parse_expr(e);
    p.expect_end();
    return e;
}

/// Parse a predicate `expr relop expr`; the root node is a comparison.
inline Expr parse_predicate(std::string_view text, const ParseOptions& opts) {
    detail::Parser p(text, opts);
    Expr e;
    e.root = p.parse_comparison(e);
    p.expect_end();
    return e;
}

/// Truth of a predicate expression (root must be a comparison node).
inline bool predicate_holds(const Expr& pred, const EvalEnv& env) {
    return pred.cmp_node(pred.root, env);
}

/// Signed residual lhs - rhs of a predicate; zero on the manifold.
inline double predicate_residual(const Expr& pred, const EvalEnv& env) {
    const Expr::Node& n = pred.nodes[pred.root];
    return pred.eval_node(n.a, env) - pred.eval_node(n.b, env);
}

}  // namespace selfcont
