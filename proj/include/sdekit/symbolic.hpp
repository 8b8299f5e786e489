#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdekit/hash.hpp"
#include "sdekit/model.hpp"

namespace sdekit {

enum class TermTag { Drift, Diffusion, Jump };

inline std::string_view term_tag_name(TermTag t) {
    switch (t) {
        case TermTag::Drift: return "drift";
        case TermTag::Diffusion: return "diffusion";
        case TermTag::Jump: return "jump";
    }
    return "?";
}

struct SymbolicNode {
    std::string label;
    TermTag term;
    std::vector<std::size_t> children;
};

// Forest of rooted term trees: one root per present term (drift always,
// diffusion and jump when the model has them). Roots carry the term name as
// their label; expression nodes carry the operator name, "S", "t", "const"
// (parameter values are deliberately invisible to structure), or the
// parameter letter.
struct SymbolicGraph {
    std::vector<SymbolicNode> nodes;
    std::vector<std::size_t> roots;
};

namespace detail {

inline std::string expr_node_label(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Const: return "const";
        case Expr::Kind::Param: return std::string(1, e.param);
        case Expr::Kind::State: return "S";
        case Expr::Kind::Time: return "t";
        case Expr::Kind::Unary: return std::string(func_name(e.func));
        case Expr::Kind::Binary: return std::string(binop_name(e.op));
    }
    return "?";
}

inline std::size_t add_expr_nodes(SymbolicGraph& g, const Expr& e, TermTag term) {
    std::size_t id = g.nodes.size();
    g.nodes.push_back({expr_node_label(e), term, {}});
    if (e.kind == Expr::Kind::Unary) {
        std::size_t c = add_expr_nodes(g, *e.lhs, term);
        g.nodes[id].children.push_back(c);
    } else if (e.kind == Expr::Kind::Binary) {
        std::size_t l = add_expr_nodes(g, *e.lhs, term);
        std::size_t r = add_expr_nodes(g, *e.rhs, term);
        g.nodes[id].children.push_back(l);
        g.nodes[id].children.push_back(r);
    }
    return id;
}

inline void add_term_tree(SymbolicGraph& g, const Expr* expr, TermTag term) {
    std::size_t root = g.nodes.size();
    g.nodes.push_back({std::string(term_tag_name(term)), term, {}});
    g.roots.push_back(root);
    if (expr != nullptr) {
        std::size_t c = add_expr_nodes(g, *expr, term);
        g.nodes[root].children.push_back(c);
    } else {
        // jump terms are always S·dJ, so the subtree is the single state leaf
        std::size_t c = g.nodes.size();
        g.nodes.push_back({"S", term, {}});
        g.nodes[root].children.push_back(c);
    }
}

}  // namespace detail

inline SymbolicGraph to_symbolic_graph(const SdeModel& m) {
    SymbolicGraph g;
    detail::add_term_tree(g, m.drift.get(), TermTag::Drift);
    if (m.diffusion) detail::add_term_tree(g, m.diffusion.get(), TermTag::Diffusion);
    if (m.has_jump) detail::add_term_tree(g, nullptr, TermTag::Jump);
    return g;
}

// Per-round label-count histograms of Weisfeiler-Lehman refinement.
// histograms[0] counts the initial labels; histograms[r] counts labels after
// r refinement rounds, so size() == rounds + 1.
struct WlFeatures {
    int rounds = 0;
    std::vector<std::map<std::uint64_t, std::uint64_t>> histograms;

    friend bool operator==(const WlFeatures&, const WlFeatures&) = default;
};

inline constexpr int kDefaultWlRounds = 3;

inline WlFeatures wl_features(const SymbolicGraph& g, int rounds = kDefaultWlRounds) {
    if (g.nodes.empty()) throw std::invalid_argument("wl_features: empty graph");
    if (rounds < 1) throw std::invalid_argument("wl_features: rounds must be >= 1");

    WlFeatures out;
    out.rounds = rounds;
    out.histograms.resize(static_cast<std::size_t>(rounds) + 1);

    std::vector<std::uint64_t> labels(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) labels[i] = fnv1a64(g.nodes[i].label);
    for (std::uint64_t l : labels) ++out.histograms[0][l];

    std::vector<std::uint64_t> next(labels.size());
    std::vector<std::uint64_t> child_labels;
    for (int r = 1; r <= rounds; ++r) {
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            child_labels.clear();
            for (std::size_t c : g.nodes[i].children) child_labels.push_back(labels[c]);
            std::sort(child_labels.begin(), child_labels.end());
            std::uint64_t h = fnv1a64(labels[i]);
            for (std::uint64_t c : child_labels) h = fnv1a64(c, h);
            next[i] = h;
        }
        labels = next;
        for (std::uint64_t l : labels) ++out.histograms[static_cast<std::size_t>(r)][l];
    }
    return out;
}

// Cosine similarity of concatenated per-round WL histograms, in [0, 1].
// Identical feature vectors score exactly 1.
inline double similarity(const SymbolicGraph& a, const SymbolicGraph& b,
                         int rounds = kDefaultWlRounds) {
    WlFeatures fa = wl_features(a, rounds);
    WlFeatures fb = wl_features(b, rounds);
    if (fa == fb) return 1.0;

    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t r = 0; r < fa.histograms.size(); ++r) {
        const auto& ha = fa.histograms[r];
        const auto& hb = fb.histograms[r];
        for (const auto& [label, count] : ha) {
            double ca = static_cast<double>(count);
            na += ca * ca;
            auto it = hb.find(label);
            if (it != hb.end()) dot += ca * static_cast<double>(it->second);
        }
        for (const auto& [label, count] : hb) {
            double cb = static_cast<double>(count);
            nb += cb * cb;
        }
    }
    double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom <= 0.0) return 0.0;
    return std::clamp(dot / denom, 0.0, 1.0);
}

inline double similarity(const SdeModel& a, const SdeModel& b, int rounds = kDefaultWlRounds) {
    return similarity(to_symbolic_graph(a), to_symbolic_graph(b), rounds);
}

// 1 minus the average pairwise similarity over all C(N,2) pairs.
inline double diversity(const std::vector<SymbolicGraph>& graphs,
                        int rounds = kDefaultWlRounds) {
    if (graphs.size() < 2)
        throw std::invalid_argument("diversity: need at least 2 graphs");
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i)
        for (std::size_t j = i + 1; j < graphs.size(); ++j) {
            total += similarity(graphs[i], graphs[j], rounds);
            ++pairs;
        }
    return std::clamp(1.0 - total / static_cast<double>(pairs), 0.0, 1.0);
}

namespace detail {

inline void collect_path_lengths(const SymbolicGraph& g, std::size_t node, std::size_t depth,
                                 std::size_t& total, std::size_t& count) {
    const auto& n = g.nodes[node];
    if (n.children.empty()) {
        total += depth + 1;
        ++count;
        return;
    }
    for (std::size_t c : n.children) collect_path_lengths(g, c, depth + 1, total, count);
}

}  // namespace detail

// Mean node count along root-to-leaf paths, pooled over all term trees.
inline double complexity(const SymbolicGraph& g) {
    if (g.nodes.empty() || g.roots.empty())
        throw std::invalid_argument("complexity: empty graph");
    std::size_t total = 0, count = 0;
    for (std::size_t r : g.roots) detail::collect_path_lengths(g, r, 0, total, count);
    return static_cast<double>(total) / static_cast<double>(count);
}

inline double complexity(const SdeModel& m) { return complexity(to_symbolic_graph(m)); }

}  // namespace sdekit
