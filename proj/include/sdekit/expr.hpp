#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace sdekit {

enum class Func { Sqrt, Log, Exp, Sin, Cos, Tanh, Arctan, Abs, Neg };
enum class BinOp { Add, Sub, Mul, Div, Pow };

inline std::string_view func_name(Func f) {
    switch (f) {
        case Func::Sqrt: return "sqrt";
        case Func::Log: return "log";
        case Func::Exp: return "exp";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tanh: return "tanh";
        case Func::Arctan: return "arctan";
        case Func::Abs: return "abs";
        case Func::Neg: return "neg";
    }
    return "?";
}

inline std::string_view binop_name(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Pow: return "^";
    }
    return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Const, Param, State, Time, Unary, Binary };
    Kind kind;
    double value = 0.0;  // Const
    char param = 0;      // Param
    Func func = Func::Neg;
    BinOp op = BinOp::Add;
    ExprPtr lhs, rhs;  // Unary uses lhs only
};

inline ExprPtr make_const(double v) {
    return std::make_shared<Expr>(Expr{Expr::Kind::Const, v, 0, Func::Neg, BinOp::Add, nullptr, nullptr});
}
inline ExprPtr make_param(char c) {
    return std::make_shared<Expr>(Expr{Expr::Kind::Param, 0.0, c, Func::Neg, BinOp::Add, nullptr, nullptr});
}
inline ExprPtr make_state() {
    return std::make_shared<Expr>(Expr{Expr::Kind::State, 0.0, 0, Func::Neg, BinOp::Add, nullptr, nullptr});
}
inline ExprPtr make_time() {
    return std::make_shared<Expr>(Expr{Expr::Kind::Time, 0.0, 0, Func::Neg, BinOp::Add, nullptr, nullptr});
}
inline ExprPtr make_unary(Func f, ExprPtr x) {
    return std::make_shared<Expr>(Expr{Expr::Kind::Unary, 0.0, 0, f, BinOp::Add, std::move(x), nullptr});
}
inline ExprPtr make_binary(BinOp op, ExprPtr l, ExprPtr r) {
    return std::make_shared<Expr>(Expr{Expr::Kind::Binary, 0.0, 0, Func::Neg, op, std::move(l), std::move(r)});
}

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t column)
        : std::runtime_error(what + " at column " + std::to_string(column)), column_(column) {}
    [[nodiscard]] std::size_t column() const { return column_; }

  private:
    std::size_t column_;
};

inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Expr::Kind::Const: return a->value == b->value;
        case Expr::Kind::Param: return a->param == b->param;
        case Expr::Kind::State:
        case Expr::Kind::Time: return true;
        case Expr::Kind::Unary:
            return a->func == b->func && structurally_equal(a->lhs, b->lhs);
        case Expr::Kind::Binary:
            return a->op == b->op && structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    }
    return false;
}

inline void collect_params(const ExprPtr& e, std::set<char>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Param) out.insert(e->param);
    collect_params(e->lhs, out);
    collect_params(e->rhs, out);
}

// ---------------------------------------------------------------------------
// Tokenizer shared by the strict grammar parser.
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
    enum class Kind { DS, Eq, Dt, DW, DJ, Plus, Minus, Star, Slash, Caret, LParen, RParen, Number, Param, State, Time, Fn, End };
    Kind kind;
    double number = 0.0;
    char param = 0;
    Func fn = Func::Neg;
    std::size_t col = 0;  // 1-based start column
    std::size_t end = 0;  // 1-based column one past the token
};

inline const std::pair<std::string_view, Func> kFuncTable[] = {
    {"arctan", Func::Arctan}, {"sqrt", Func::Sqrt}, {"tanh", Func::Tanh}, {"log", Func::Log},
    {"exp", Func::Exp},       {"sin", Func::Sin},   {"cos", Func::Cos},   {"abs", Func::Abs},
};

inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto col = [&](std::size_t pos) { return pos + 1; };
    while (i < n) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++i;
            continue;
        }
        Token t;
        t.col = col(i);
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i;
            while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
            if (j < n && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    ++k;
                    while (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
                    j = k;
                }
            }
            double v = 0.0;
            auto res = std::from_chars(text.data() + i, text.data() + j, v);
            if (res.ec != std::errc() || res.ptr != text.data() + j)
                throw ParseError("malformed number", col(i));
            t.kind = Token::Kind::Number;
            t.number = v;
            t.end = col(j);
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < n && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
            std::string_view word = text.substr(i, j - i);
            t.end = col(j);
            if (word == "dS") {
                t.kind = Token::Kind::DS;
            } else if (word == "dt") {
                t.kind = Token::Kind::Dt;
            } else if (word == "dW") {
                t.kind = Token::Kind::DW;
            } else if (word == "dJ") {
                t.kind = Token::Kind::DJ;
            } else if (word == "S") {
                t.kind = Token::Kind::State;
            } else if (word == "t") {
                t.kind = Token::Kind::Time;
            } else {
                bool matched = false;
                for (auto [name, fn] : kFuncTable) {
                    if (word == name) {
                        t.kind = Token::Kind::Fn;
                        t.fn = fn;
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    if (word.size() == 1 && std::islower(static_cast<unsigned char>(word[0]))) {
                        if (word[0] == 's')
                            throw ParseError("'s' is reserved (state is 'S')", col(i));
                        t.kind = Token::Kind::Param;
                        t.param = word[0];
                    } else {
                        throw ParseError("unknown identifier '" + std::string(word) + "'", col(i));
                    }
                }
            }
            i = j;
        } else {
            t.end = col(i + 1);
            switch (c) {
                case '=': t.kind = Token::Kind::Eq; break;
                case '+': t.kind = Token::Kind::Plus; break;
                case '-': t.kind = Token::Kind::Minus; break;
                case '*': t.kind = Token::Kind::Star; break;
                case '/': t.kind = Token::Kind::Slash; break;
                case '^': t.kind = Token::Kind::Caret; break;
                case '(': t.kind = Token::Kind::LParen; break;
                case ')': t.kind = Token::Kind::RParen; break;
                default: throw ParseError(std::string("unexpected character '") + c + "'", col(i));
            }
            ++i;
        }
        out.push_back(t);
    }
    Token end;
    end.kind = Token::Kind::End;
    end.col = col(n);
    end.end = col(n);
    out.push_back(end);
    return out;
}

// Recursive-descent parser over the token stream. Reports missing-operand
// errors at the position immediately after the previous token.
class ExprParser {
  public:
    explicit ExprParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek() const { return toks_[pos_]; }
    const Token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }
    Token next() { return toks_[pos_++]; }
    [[nodiscard]] std::size_t after_prev() const { return pos_ == 0 ? toks_[0].col : toks_[pos_ - 1].end; }

    bool at_term_boundary() const {
        auto k = peek().kind;
        return k == Token::Kind::Dt || k == Token::Kind::DW || k == Token::Kind::DJ ||
               k == Token::Kind::End;
    }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        while (true) {
            auto k = peek().kind;
            if (k == Token::Kind::Plus || k == Token::Kind::Minus) {
                // '+' may introduce the next SDE term (dW/dJ); the model parser
                // handles that by splitting on term keywords before expr parse.
                next();
                ExprPtr rhs = parse_term();
                lhs = make_binary(k == Token::Kind::Plus ? BinOp::Add : BinOp::Sub, lhs, rhs);
            } else {
                break;
            }
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_factor();
        while (true) {
            auto k = peek().kind;
            if (k == Token::Kind::Star || k == Token::Kind::Slash) {
                next();
                ExprPtr rhs = parse_factor();
                lhs = make_binary(k == Token::Kind::Star ? BinOp::Mul : BinOp::Div, lhs, rhs);
            } else {
                break;
            }
        }
        return lhs;
    }

    ExprPtr parse_factor() {
        ExprPtr base = parse_base();
        if (peek().kind == Token::Kind::Caret) {
            next();
            const Token& t = peek();
            if (t.kind == Token::Kind::Number) {
                next();
                return make_binary(BinOp::Pow, base, make_const(t.number));
            }
            if (t.kind == Token::Kind::Param) {
                next();
                return make_binary(BinOp::Pow, base, make_param(t.param));
            }
            if (t.kind == Token::Kind::Minus) {
                // allow negative numeric exponent: S^-2
                next();
                const Token& u = peek();
                if (u.kind == Token::Kind::Number) {
                    next();
                    return make_binary(BinOp::Pow, base, make_const(-u.number));
                }
                throw ParseError("exponent must be a number or a parameter", after_prev());
            }
            throw ParseError("exponent must be a number or a parameter", after_prev());
        }
        return base;
    }

    ExprPtr parse_base() {
        const Token& t = peek();
        switch (t.kind) {
            case Token::Kind::Number: next(); return make_const(t.number);
            case Token::Kind::Param: next(); return make_param(t.param);
            case Token::Kind::State: next(); return make_state();
            case Token::Kind::Time: next(); return make_time();
            case Token::Kind::Minus: {
                next();
                return make_unary(Func::Neg, parse_base_or_factor());
            }
            case Token::Kind::Fn: {
                Func f = t.fn;
                next();
                expect(Token::Kind::LParen, "expected '(' after function name");
                ExprPtr arg = parse_expr();
                expect(Token::Kind::RParen, "expected ')'");
                return make_unary(f, arg);
            }
            case Token::Kind::LParen: {
                next();
                ExprPtr inner = parse_expr();
                expect(Token::Kind::RParen, "expected ')'");
                return inner;
            }
            default:
                throw ParseError("expected operand", after_prev());
        }
    }

    // unary minus binds tighter than * but the negated operand may carry '^'
    ExprPtr parse_base_or_factor() {
        ExprPtr base = parse_base();
        if (peek().kind == Token::Kind::Caret) {
            next();
            const Token& t = peek();
            if (t.kind == Token::Kind::Number) {
                next();
                return make_binary(BinOp::Pow, base, make_const(t.number));
            }
            if (t.kind == Token::Kind::Param) {
                next();
                return make_binary(BinOp::Pow, base, make_param(t.param));
            }
            throw ParseError("exponent must be a number or a parameter", after_prev());
        }
        return base;
    }

    void expect(Token::Kind k, const char* msg) {
        if (peek().kind != k) throw ParseError(msg, after_prev());
        next();
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Canonical rendering: explicit '*', minimal parentheses.
// ---------------------------------------------------------------------------

namespace detail {

inline int precedence(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Binary:
            switch (e->op) {
                case BinOp::Add:
                case BinOp::Sub: return 1;
                case BinOp::Mul:
                case BinOp::Div: return 2;
                case BinOp::Pow: return 4;
            }
            return 1;
        case Expr::Kind::Unary:
            return e->func == Func::Neg ? 3 : 5;
        case Expr::Kind::Const:
            return e->value < 0 ? 3 : 5;
        default:
            return 5;
    }
}

inline std::string render_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void render_rec(const ExprPtr& e, std::string& out) {
    auto child = [&](const ExprPtr& c, bool needs_parens) {
        if (needs_parens) {
            out += '(';
            render_rec(c, out);
            out += ')';
        } else {
            render_rec(c, out);
        }
    };
    switch (e->kind) {
        case Expr::Kind::Const: out += render_number(e->value); return;
        case Expr::Kind::Param: out += e->param; return;
        case Expr::Kind::State: out += 'S'; return;
        case Expr::Kind::Time: out += 't'; return;
        case Expr::Kind::Unary:
            if (e->func == Func::Neg) {
                out += '-';
                child(e->lhs, precedence(e->lhs) < 3);
            } else {
                out += func_name(e->func);
                out += '(';
                render_rec(e->lhs, out);
                out += ')';
            }
            return;
        case Expr::Kind::Binary: {
            int p = precedence(e);
            if (e->op == BinOp::Pow) {
                child(e->lhs, precedence(e->lhs) < 5);  // base must be atomic
                out += '^';
                render_rec(e->rhs, out);  // grammar: exponent is a number or parameter
                return;
            }
            child(e->lhs, precedence(e->lhs) < p);
            out += binop_name(e->op);
            bool right_parens = precedence(e->rhs) < p ||
                                (precedence(e->rhs) == p && (e->op == BinOp::Sub || e->op == BinOp::Div)) ||
                                ((e->op == BinOp::Add || e->op == BinOp::Sub) &&
                                 (e->rhs->kind == Expr::Kind::Unary && e->rhs->func == Func::Neg));
            child(e->rhs, right_parens);
            return;
        }
    }
}

}  // namespace detail

inline std::string render_expr(const ExprPtr& e) {
    std::string out;
    detail::render_rec(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Compiled evaluation: flat postfix program with a value stack. Roughly an
// order of magnitude faster than pointer-chasing recursion in the Monte Carlo
// hot loop; a direct recursive interpreter serves as the test oracle.
// ---------------------------------------------------------------------------

class EvalError : public std::runtime_error {
  public:
    EvalError(const std::string& what, std::string subterm)
        : std::runtime_error(what + " in subterm '" + subterm + "'"), subterm_(std::move(subterm)) {}
    [[nodiscard]] const std::string& subterm() const { return subterm_; }

  private:
    std::string subterm_;
};

class CompiledExpr {
  public:
    CompiledExpr() = default;

    // param_index maps parameter letters to slots in the parameter vector.
    CompiledExpr(const ExprPtr& root, std::span<const char> param_letters) {
        compile(root, param_letters);
        stack_.resize(max_depth_);
    }

    double eval(double s, double t, std::span<const double> params) const {
        double* sp = stack_.data();
        for (const Op& op : ops_) {
            switch (op.code) {
                case Code::Const: *sp++ = op.imm; break;
                case Code::Param: *sp++ = params[op.slot]; break;
                case Code::State: *sp++ = s; break;
                case Code::Time: *sp++ = t; break;
                case Code::Add: sp[-2] += sp[-1]; --sp; break;
                case Code::Sub: sp[-2] -= sp[-1]; --sp; break;
                case Code::Mul: sp[-2] *= sp[-1]; --sp; break;
                case Code::Div:
                    if (sp[-1] == 0.0) fail("division by zero", op);
                    sp[-2] /= sp[-1];
                    --sp;
                    break;
                case Code::Pow: {
                    double v = std::pow(sp[-2], sp[-1]);
                    if (!std::isfinite(v)) fail("power out of domain", op);
                    sp[-2] = v;
                    --sp;
                    break;
                }
                case Code::Sqrt:
                    if (sp[-1] < 0.0) fail("square root of a negative value", op);
                    sp[-1] = std::sqrt(sp[-1]);
                    break;
                case Code::Log:
                    if (sp[-1] <= 0.0) fail("log of a non-positive value", op);
                    sp[-1] = std::log(sp[-1]);
                    break;
                case Code::Exp: {
                    double v = std::exp(sp[-1]);
                    if (!std::isfinite(v)) fail("exp overflow", op);
                    sp[-1] = v;
                    break;
                }
                case Code::Sin: sp[-1] = std::sin(sp[-1]); break;
                case Code::Cos: sp[-1] = std::cos(sp[-1]); break;
                case Code::Tanh: sp[-1] = std::tanh(sp[-1]); break;
                case Code::Arctan: sp[-1] = std::atan(sp[-1]); break;
                case Code::Abs: sp[-1] = std::fabs(sp[-1]); break;
                case Code::Neg: sp[-1] = -sp[-1]; break;
            }
        }
        return stack_[0];
    }

    [[nodiscard]] bool valid() const { return !ops_.empty(); }

  private:
    enum class Code : std::uint8_t {
        Const, Param, State, Time, Add, Sub, Mul, Div, Pow,
        Sqrt, Log, Exp, Sin, Cos, Tanh, Arctan, Abs, Neg,
    };
    struct Op {
        Code code;
        std::uint16_t slot = 0;
        double imm = 0.0;
        const Expr* node = nullptr;
    };

    [[noreturn]] static void fail(const char* what, const Op& op) {
        std::string sub = op.node ? render_expr(ExprPtr(op.node, [](const Expr*) {})) : "?";
        throw EvalError(what, sub);
    }

    void compile(const ExprPtr& e, std::span<const char> letters) {
        int depth = emit(e, letters);
        max_depth_ = std::max(max_depth_, depth);
    }

    int emit(const ExprPtr& e, std::span<const char> letters) {
        switch (e->kind) {
            case Expr::Kind::Const:
                ops_.push_back({Code::Const, 0, e->value, e.get()});
                return bump(1);
            case Expr::Kind::Param: {
                std::uint16_t slot = 0;
                for (std::size_t i = 0; i < letters.size(); ++i) {
                    if (letters[i] == e->param) {
                        slot = static_cast<std::uint16_t>(i);
                        break;
                    }
                }
                ops_.push_back({Code::Param, slot, 0.0, e.get()});
                return bump(1);
            }
            case Expr::Kind::State:
                ops_.push_back({Code::State, 0, 0.0, e.get()});
                return bump(1);
            case Expr::Kind::Time:
                ops_.push_back({Code::Time, 0, 0.0, e.get()});
                return bump(1);
            case Expr::Kind::Unary: {
                emit(e->lhs, letters);
                Code c{};
                switch (e->func) {
                    case Func::Sqrt: c = Code::Sqrt; break;
                    case Func::Log: c = Code::Log; break;
                    case Func::Exp: c = Code::Exp; break;
                    case Func::Sin: c = Code::Sin; break;
                    case Func::Cos: c = Code::Cos; break;
                    case Func::Tanh: c = Code::Tanh; break;
                    case Func::Arctan: c = Code::Arctan; break;
                    case Func::Abs: c = Code::Abs; break;
                    case Func::Neg: c = Code::Neg; break;
                }
                ops_.push_back({c, 0, 0.0, e.get()});
                return cur_;
            }
            case Expr::Kind::Binary: {
                emit(e->lhs, letters);
                emit(e->rhs, letters);
                Code c{};
                switch (e->op) {
                    case BinOp::Add: c = Code::Add; break;
                    case BinOp::Sub: c = Code::Sub; break;
                    case BinOp::Mul: c = Code::Mul; break;
                    case BinOp::Div: c = Code::Div; break;
                    case BinOp::Pow: c = Code::Pow; break;
                }
                ops_.push_back({c, 0, 0.0, e.get()});
                return drop(1);
            }
        }
        return cur_;
    }

    int bump(int n) {
        cur_ += n;
        max_depth_ = std::max(max_depth_, cur_);
        return cur_;
    }
    int drop(int n) {
        cur_ -= n;
        return cur_;
    }

    std::vector<Op> ops_;
    int cur_ = 0;
    int max_depth_ = 0;
    mutable std::vector<double> stack_;
};

}  // namespace sdekit
