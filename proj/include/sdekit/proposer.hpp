#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sdekit/agents.hpp"
#include "sdekit/model.hpp"

namespace sdekit {

// One family in the offline candidate library: equation text plus starting
// parameters chosen so a first simulation at a price level near 100 neither
// collapses nor blows up.  An empty init defers to default_init at use time.
struct PoolEntry {
  const char* source;
  std::vector<double> init;
};

// Ordered offline library.  The four benchmark families lead; the rest spans
// saturating, oscillatory, logistic, and ratio-shaped drift/diffusion pairs.
inline const std::vector<PoolEntry>& model_pool() {
  static const std::vector<PoolEntry> pool = {
      {"dS = a*S dt + b*S dW", {0.05, 0.2}},
      {"dS = a*(b - S) dt + c*sqrt(S) dW", {}},
      {"dS = a*S dt + b*S^c dW", {0.05, 0.2, 1.0}},
      {"dS = a*S dt + b*S dW + S dJ", {0.05, 0.2, 10.0, 0.0, 0.1}},
      {"dS = a*S*(b - log(S)) dt + c*S dW", {0.5, 4.6, 0.2}},
      {"dS = a*S^b dt + c dW", {0.05, 1.0, 5.0}},
      {"dS = k*S*(1 - S) dt + m*S^0.5 dW", {0.01, 1.0}},
      {"dS = k*(S/(1 + S^2)) dt + m*S dW", {0.5, 0.2}},
      {"dS = a*tanh(b*S) dt + c*S dW", {0.5, 0.1, 0.2}},
      {"dS = k*(1 - exp(-m*S)) dt + p*sqrt(S) dW", {0.5, 0.1, 1.0}},
      {"dS = a/(1 + exp(-b*S)) dt + c*(1 + S) dW", {0.5, 0.1, 0.2}},
      {"dS = k*sin(m*S) dt + p*cos(S) dW", {0.5, 0.1, 5.0}},
      {"dS = a*S*(1 - log(S/b)) dt + c*S^0.3333333333333333 dW",
       {0.1, 40.0, 4.0}},
      {"dS = k*S/(1 + S^3) dt + m*exp(-p*S) dW", {0.5, 5.0, 0.01}},
      {"dS = a*sin(S/b) dt + c*S dW", {0.5, 30.0, 0.2}},
      {"dS = k*S/(1 + S^2) dt + m*S/(1 + S) dW", {0.5, 5.0}},
      {"dS = k*(1 - S^0.3333333333333333) dt + m*S^0.3333333333333333 dW",
       {0.5, 1.0}},
      {"dS = a*S*log(1 + b*S) dt + c/(1 + S) dW", {0.01, 0.1, 5.0}},
      {"dS = k*arctan(m*S) dt + p*S dW", {0.5, 0.1, 0.2}},
      {"dS = a*exp(-b*S) dt + c*S/(1 + S^2) dW", {0.5, 0.01, 5.0}},
      {"dS = a*sin(b*S)/(1 + S^2) dt + c*S dW", {0.5, 0.1, 0.2}},
      {"dS = k*S*log(1 + m*S) dt + p*S*log(1/(1 + S)) dW", {0.01, 0.1, 0.05}},
      {"dS = k*log(1 + S)/(1 + S^2) dt + m*S/(1 + log(S)) dW", {0.5, 1.0}},
      {"dS = a*S^0.5*(1 - exp(-b*S)) dt + c*(1 + S^0.3333333333333333) dW",
       {0.05, 0.1, 3.0}},
  };
  return pool;
}

// Deterministic proposer over the fixed library: entries come back in pool
// order, already-tested structures are skipped, and an empty result means the
// library is exhausted.
class PoolProposer final : public ModelProposer {
 public:
  std::vector<Proposal> suggest(const ProposerContext& ctx) override {
    std::vector<Proposal> out;
    for (const PoolEntry& entry : model_pool()) {
      if (static_cast<int>(out.size()) >= ctx.budget) break;
      SdeModel m = parse_model(entry.source);
      const std::string rendered = render_model(m);
      const bool tested =
          std::find(ctx.tested_sources.begin(), ctx.tested_sources.end(),
                    rendered) != ctx.tested_sources.end();
      if (tested) continue;
      out.push_back(Proposal{std::move(m), entry.init});
    }
    return out;
  }
};

}  // namespace sdekit
