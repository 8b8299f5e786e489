#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sdekit/model.hpp"
#include "sdekit/symbolic.hpp"

namespace {

using namespace sdekit;

SdeModel cev() { return parse_model("dS = a*S dt + b*S^c dW"); }
SdeModel cir() { return parse_model("dS = a*(b - S) dt + c*sqrt(S) dW"); }
SdeModel gbm() { return parse_model("dS = a*S dt + b*S dW"); }
SdeModel jd() { return parse_model("dS = a*S dt + b*S dW + S dJ"); }

std::vector<std::string> term_labels(const SymbolicGraph& g, TermTag tag) {
    std::vector<std::string> out;
    for (const auto& n : g.nodes)
        if (n.term == tag) out.push_back(n.label);
    std::sort(out.begin(), out.end());
    return out;
}

TEST(SymbolicGraph, CevTermTreesHaveExpectedLabels) {
    SymbolicGraph g = to_symbolic_graph(cev());
    EXPECT_EQ(g.roots.size(), 2u);
    EXPECT_EQ(term_labels(g, TermTag::Drift),
              (std::vector<std::string>{"*", "S", "a", "drift"}));
    EXPECT_EQ(term_labels(g, TermTag::Diffusion),
              (std::vector<std::string>{"*", "S", "^", "b", "c", "diffusion"}));
}

TEST(SymbolicGraph, DriftOnlyModelIsRootPlusLeaf) {
    SymbolicGraph g = to_symbolic_graph(parse_model("dS = a dt"));
    ASSERT_EQ(g.nodes.size(), 2u);
    EXPECT_EQ(g.roots.size(), 1u);
    EXPECT_EQ(g.nodes[g.roots[0]].label, "drift");
    EXPECT_EQ(g.nodes[g.nodes[g.roots[0]].children[0]].label, "a");
}

TEST(SymbolicGraph, JumpModelHasThreeTermTrees) {
    SymbolicGraph g = to_symbolic_graph(jd());
    EXPECT_EQ(g.roots.size(), 3u);
    EXPECT_EQ(term_labels(g, TermTag::Jump), (std::vector<std::string>{"S", "jump"}));
}

TEST(SymbolicGraph, ConstantsAreValueBlind) {
    SymbolicGraph g1 = to_symbolic_graph(parse_model("dS = 0.5*S dt"));
    SymbolicGraph g2 = to_symbolic_graph(parse_model("dS = 3*S dt"));
    EXPECT_EQ(wl_features(g1), wl_features(g2));
    EXPECT_DOUBLE_EQ(similarity(g1, g2), 1.0);
}

TEST(WlFeatures, RoundZeroTotalEqualsNodeCount) {
    for (const SdeModel& m : {cev(), cir(), gbm(), jd()}) {
        SymbolicGraph g = to_symbolic_graph(m);
        WlFeatures f = wl_features(g, 3);
        ASSERT_EQ(f.histograms.size(), 4u);
        for (const auto& hist : f.histograms) {
            std::uint64_t total = 0;
            for (const auto& [label, count] : hist) total += count;
            EXPECT_EQ(total, g.nodes.size()) << render_model(m);
        }
    }
}

TEST(WlFeatures, SingleNodeGraphHasOneLabelEveryRound) {
    SymbolicGraph g;
    g.nodes.push_back({"S", TermTag::Drift, {}});
    g.roots.push_back(0);
    WlFeatures f = wl_features(g, 3);
    ASSERT_EQ(f.histograms.size(), 4u);
    for (const auto& hist : f.histograms) {
        ASSERT_EQ(hist.size(), 1u);
        EXPECT_EQ(hist.begin()->second, 1u);
    }
}

TEST(WlFeatures, InvariantUnderNodeRenumbering) {
    // same tree *(a, S), stored in two different node orders
    SymbolicGraph g1;
    g1.nodes.push_back({"*", TermTag::Drift, {1, 2}});
    g1.nodes.push_back({"a", TermTag::Drift, {}});
    g1.nodes.push_back({"S", TermTag::Drift, {}});
    g1.roots.push_back(0);

    SymbolicGraph g2;
    g2.nodes.push_back({"S", TermTag::Drift, {}});
    g2.nodes.push_back({"a", TermTag::Drift, {}});
    g2.nodes.push_back({"*", TermTag::Drift, {1, 0}});
    g2.roots.push_back(2);

    EXPECT_EQ(wl_features(g1, 3), wl_features(g2, 3));
    EXPECT_DOUBLE_EQ(similarity(g1, g2), 1.0);
}

TEST(WlFeatures, DistinguishesCevFromCir) {
    EXPECT_NE(wl_features(to_symbolic_graph(cev())), wl_features(to_symbolic_graph(cir())));
}

TEST(WlFeatures, RejectsBadInput) {
    SymbolicGraph empty;
    EXPECT_THROW(wl_features(empty, 3), std::invalid_argument);
    SymbolicGraph g = to_symbolic_graph(gbm());
    EXPECT_THROW(wl_features(g, 0), std::invalid_argument);
}

TEST(Similarity, SelfSimilarityIsExactlyOne) {
    for (const SdeModel& m : {cev(), cir(), gbm(), jd()}) {
        EXPECT_DOUBLE_EQ(similarity(m, m), 1.0) << render_model(m);
    }
}

TEST(Similarity, SymmetricAndBounded) {
    std::vector<SdeModel> pool = {cev(), cir(), gbm(), jd(),
                                  parse_model("dS = a*(b - S) dt + c*S dW"),
                                  parse_model("dS = a dt + b*sqrt(S) dW")};
    for (std::size_t i = 0; i < pool.size(); ++i)
        for (std::size_t j = 0; j < pool.size(); ++j) {
            double s = similarity(pool[i], pool[j]);
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, 1.0);
            EXPECT_DOUBLE_EQ(s, similarity(pool[j], pool[i]));
        }
}

TEST(Similarity, CevVersusCirMatchesHandComputedCosine) {
    // Hand-run WL at 3 rounds: the graphs share both term roots, the
    // parameter/state leaves, and the multiplication label at round 0; all
    // internal labels diverge from round 2 on. Dot products per round are
    // 13, 9, 7, 7 and squared norms are 14+12+12+12 = 50 (CEV) and
    // 15+13+13+13 = 54 (CIR), so cosine = 36 / sqrt(2700) = 2*sqrt(3)/5.
    double s = similarity(cev(), cir());
    EXPECT_NEAR(s, 2.0 * std::sqrt(3.0) / 5.0, 1e-12);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
}

TEST(Diversity, IdenticalGraphsScoreZero) {
    SymbolicGraph g = to_symbolic_graph(gbm());
    EXPECT_DOUBLE_EQ(diversity({g, g, g}), 0.0);
}

TEST(Diversity, PairIsOneMinusSimilarity) {
    SymbolicGraph a = to_symbolic_graph(cev());
    SymbolicGraph b = to_symbolic_graph(cir());
    EXPECT_DOUBLE_EQ(diversity({a, b}), 1.0 - similarity(a, b));
}

TEST(Diversity, TripleAveragesPairwiseSimilarities) {
    SymbolicGraph a = to_symbolic_graph(cev());
    SymbolicGraph b = to_symbolic_graph(cir());
    SymbolicGraph c = to_symbolic_graph(jd());
    double expected =
        1.0 - (similarity(a, b) + similarity(a, c) + similarity(b, c)) / 3.0;
    EXPECT_NEAR(diversity({a, b, c}), expected, 1e-15);
}

TEST(Diversity, RejectsFewerThanTwoGraphs) {
    SymbolicGraph g = to_symbolic_graph(gbm());
    EXPECT_THROW(diversity({g}), std::invalid_argument);
    EXPECT_THROW(diversity({}), std::invalid_argument);
}

TEST(Complexity, HandCountedPathAverages) {
    EXPECT_DOUBLE_EQ(complexity(parse_model("dS = a dt")), 2.0);
    // CEV paths: drift 3,3; diffusion 3,4,4 -> 17/5
    EXPECT_DOUBLE_EQ(complexity(cev()), 17.0 / 5.0);
    // CIR paths: drift 3,4,4; diffusion 3,4 -> 18/5
    EXPECT_DOUBLE_EQ(complexity(cir()), 18.0 / 5.0);
    // JD paths: drift 3,3; diffusion 3,3; jump 2 -> 14/5
    EXPECT_DOUBLE_EQ(complexity(jd()), 14.0 / 5.0);
    EXPECT_DOUBLE_EQ(complexity(gbm()), 3.0);
}

TEST(Complexity, AtLeastOneForAnyModel) {
    for (const SdeModel& m :
         {cev(), cir(), gbm(), jd(), parse_model("dS = a dt"),
          parse_model("dS = a*S + b*S^2 - c*log(S) dt + d*S^e dW")}) {
        EXPECT_GE(complexity(m), 1.0) << render_model(m);
    }
}

}  // namespace
