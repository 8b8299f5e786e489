#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdekit/expr.hpp"

namespace sdekit {

// dS = f(S,t) dt [+ g(S,t) dW] [+ S dJ]
struct SdeModel {
    ExprPtr drift;
    ExprPtr diffusion;  // null when the model is deterministic
    bool has_jump = false;
    std::string source;  // text the model was parsed from; canonical render if built directly

    std::vector<char> letters;               // structural parameters, ascending
    std::vector<std::string> param_names;    // letters, then lambda/mu_j/sigma_j
    CompiledExpr drift_fn;
    CompiledExpr diffusion_fn;

    [[nodiscard]] std::size_t n_params() const { return param_names.size(); }
    [[nodiscard]] std::size_t n_letters() const { return letters.size(); }
};

struct JumpParams {
    double lambda = 0.0;
    double mean = 0.0;
    double sigma = 0.0;
};

inline JumpParams jump_params(const SdeModel& m, std::span<const double> params) {
    if (!m.has_jump) return {};
    std::size_t base = m.letters.size();
    return {params[base], params[base + 1], params[base + 2]};
}

inline double eval_drift(const SdeModel& m, double s, double t, std::span<const double> params) {
    return m.drift_fn.eval(s, t, params);
}

inline double eval_diffusion(const SdeModel& m, double s, double t, std::span<const double> params) {
    if (!m.diffusion) return 0.0;
    return m.diffusion_fn.eval(s, t, params);
}

namespace detail {

inline void finalize_model(SdeModel& m) {
    std::set<char> ps;
    collect_params(m.drift, ps);
    collect_params(m.diffusion, ps);
    m.letters.assign(ps.begin(), ps.end());
    m.param_names.clear();
    for (char c : m.letters) m.param_names.emplace_back(1, c);
    if (m.has_jump) {
        m.param_names.emplace_back("lambda");
        m.param_names.emplace_back("mu_j");
        m.param_names.emplace_back("sigma_j");
    }
    m.drift_fn = CompiledExpr(m.drift, m.letters);
    if (m.diffusion) m.diffusion_fn = CompiledExpr(m.diffusion, m.letters);
}

}  // namespace detail

inline SdeModel parse_model(std::string_view text) {
    using detail::Token;
    detail::ExprParser p(detail::tokenize(text));
    p.expect(Token::Kind::DS, "model must start with 'dS'");
    p.expect(Token::Kind::Eq, "expected '='");

    SdeModel m;
    m.drift = p.parse_expr();
    p.expect(Token::Kind::Dt, "expected 'dt' after the drift term");

    if (p.peek().kind == Token::Kind::Plus) {
        p.next();
        if (p.peek().kind == Token::Kind::DJ) {
            p.next();
            m.has_jump = true;
        } else {
            std::size_t col = p.peek().col;
            ExprPtr coeff = p.parse_expr();
            if (p.peek().kind == Token::Kind::DW) {
                p.next();
                m.diffusion = coeff;
                if (p.peek().kind == Token::Kind::Plus) {
                    p.next();
                    if (p.peek().kind == Token::Kind::DJ) {
                        p.next();
                        m.has_jump = true;
                    } else {
                        std::size_t jcol = p.peek().col;
                        ExprPtr jc = p.parse_expr();
                        if (p.peek().kind != Token::Kind::DJ)
                            throw ParseError("expected 'dJ'", p.after_prev());
                        p.next();
                        if (!structurally_equal(jc, make_state()))
                            throw ParseError("jump coefficient must be S", jcol);
                        m.has_jump = true;
                    }
                }
            } else if (p.peek().kind == Token::Kind::DJ) {
                p.next();
                if (!structurally_equal(coeff, make_state()))
                    throw ParseError("jump coefficient must be S", col);
                m.has_jump = true;
            } else {
                throw ParseError("expected 'dW' or 'dJ'", p.after_prev());
            }
        }
    }
    if (p.peek().kind != Token::Kind::End)
        throw ParseError("unexpected input after model", p.peek().col);

    detail::finalize_model(m);
    m.source = text;
    return m;
}

inline std::string render_model(const SdeModel& m) {
    std::string out = "dS = ";
    out += render_expr(m.drift);
    out += " dt";
    if (m.diffusion) {
        out += " + ";
        out += render_expr(m.diffusion);
        out += " dW";
    }
    if (m.has_jump) out += " + S dJ";
    return out;
}

namespace detail {

// Parameters that sit in a direct subtraction against the state, as in
// a*(b - S), act as level anchors; starting them near the data level keeps
// the first calibration steps inside the optimizer's trust region.
inline void collect_level_params(const ExprPtr& e, std::set<char>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Binary && e->op == BinOp::Sub) {
        const ExprPtr& l = e->lhs;
        const ExprPtr& r = e->rhs;
        if (l->kind == Expr::Kind::Param && r->kind == Expr::Kind::State) out.insert(l->param);
        if (r->kind == Expr::Kind::Param && l->kind == Expr::Kind::State) out.insert(r->param);
    }
    collect_level_params(e->lhs, out);
    collect_level_params(e->rhs, out);
}

}  // namespace detail

inline std::string format_params(const SdeModel& m, std::span<const double> theta) {
    std::string out;
    for (std::size_t i = 0; i < m.param_names.size() && i < theta.size(); ++i) {
        if (i) out += ", ";
        out += m.param_names[i];
        out += '=';
        out += detail::render_number(theta[i]);
    }
    return out;
}

inline std::vector<double> default_init(const SdeModel& m, double mean_price) {
    std::set<char> level;
    detail::collect_level_params(m.drift, level);
    std::vector<double> theta(m.n_params(), 0.1);
    for (std::size_t i = 0; i < m.letters.size(); ++i)
        if (level.count(m.letters[i])) theta[i] = mean_price;
    return theta;
}

}  // namespace sdekit
