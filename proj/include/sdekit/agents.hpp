#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdekit/date.hpp"
#include "sdekit/llm.hpp"
#include "sdekit/model.hpp"
#include "sdekit/news.hpp"
#include "sdekit/trading.hpp"

namespace sdekit {

// ---------------------------------------------------------------------------
// Math-text normalization: model replies arrive as LaTeX-ish or unicode-laden
// prose; this turns one candidate line into parser-ready equation text.
// ---------------------------------------------------------------------------

namespace detail {

inline void replace_all(std::string& s, std::string_view from,
                        std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// \frac{A}{B} -> ((A)/(B)), innermost-first via repeated scanning.
inline void expand_frac(std::string& s) {
  for (std::size_t guard = 0; guard < 64; ++guard) {
    const std::size_t at = s.find("\\frac");
    if (at == std::string::npos) return;
    std::size_t i = at + 5;
    auto brace_group = [&](std::size_t from,
                           std::string& out) -> std::size_t {
      while (from < s.size() && s[from] == ' ') ++from;
      if (from >= s.size() || s[from] != '{') return std::string::npos;
      int depth = 0;
      std::size_t j = from;
      for (; j < s.size(); ++j) {
        if (s[j] == '{') ++depth;
        if (s[j] == '}' && --depth == 0) break;
      }
      if (j >= s.size()) return std::string::npos;
      out = s.substr(from + 1, j - from - 1);
      return j + 1;
    };
    std::string num, den;
    const std::size_t after_num = brace_group(i, num);
    if (after_num == std::string::npos) {
      s.erase(at, 5);
      continue;
    }
    const std::size_t after_den = brace_group(after_num, den);
    if (after_den == std::string::npos) {
      s.erase(at, 5);
      continue;
    }
    s.replace(at, after_den - at, "((" + num + ")/(" + den + "))");
  }
}

// Known LaTeX command spellings and what they become in equation text.
inline const std::pair<std::string_view, std::string_view> kLatexCommands[] = {
    {"arctan", "arctan"}, {"atan", "arctan"}, {"tanh", "tanh"},
    {"sqrt", "sqrt"},     {"cdot", "*"},      {"times", "*"},
    {"exp", "exp"},       {"log", "log"},     {"ln", "log"},
    {"sin", "sin"},       {"cos", "cos"},     {"abs", "abs"},
    {"left", ""},         {"right", ""},      {"quad", " "},
    {"qquad", " "},       {"item", " "},      {"textbf", ""},
    {"textit", ""},       {"mathrm", ""},     {"text", ""},
    {"Big", ""},          {"big", ""},
};

// Replaces backslash commands.  \diff glues onto the next letter so that
// "\diff S" becomes the differential keyword "dS"; unknown commands lose the
// backslash and keep their name.
inline std::string strip_latex_commands(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '\\') {
      out.push_back(in[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < in.size() &&
           std::isalpha(static_cast<unsigned char>(in[j]))) {
      ++j;
    }
    if (j == i + 1) {  // lone backslash or "\\" line break
      if (j < in.size() && in[j] == '\\') ++j;
      out.push_back(' ');
      i = j;
      continue;
    }
    const std::string_view cmd(in.data() + i + 1, j - i - 1);
    if (cmd == "diff") {
      out.push_back('d');
      while (j < in.size() && in[j] == ' ') ++j;
    } else {
      bool known = false;
      for (const auto& [name, repl] : kLatexCommands) {
        if (cmd == name) {
          out += repl;
          known = true;
          break;
        }
      }
      if (!known) out += cmd;
    }
    i = j;
  }
  return out;
}

// Byte-level UTF-8 glyph mapping for the math symbols models like to emit.
inline void map_unicode_math(std::string& s) {
  replace_all(s, "\xE2\x88\x9A", " sqrt ");  // square-root glyph
  replace_all(s, "\xC2\xB2", "^2");
  replace_all(s, "\xC2\xB3", "^3");
  replace_all(s, "\xE2\x88\x92", "-");  // minus sign
  replace_all(s, "\xE2\x80\x93", "-");  // en dash
  replace_all(s, "\xE2\x80\x94", "-");  // em dash
  replace_all(s, "\xC2\xB7", "*");      // middle dot
  replace_all(s, "\xE2\x8B\x85", "*");  // dot operator
  replace_all(s, "\xC3\x97", "*");      // multiplication sign
  replace_all(s, "\xE2\x80\xA2", " ");  // bullet
}

// "^(p/q)" and "^(x)" collapse to a plain numeric or single-letter exponent,
// since the grammar only accepts those after '^'.
inline void simplify_exponents(std::string& s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '^') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size() && s[j] == ' ') ++j;
    if (j >= s.size() || s[j] != '(') {
      out.push_back(s[i++]);
      continue;
    }
    int depth = 0;
    std::size_t close = j;
    for (; close < s.size(); ++close) {
      if (s[close] == '(') ++depth;
      if (s[close] == ')' && --depth == 0) break;
    }
    if (close >= s.size()) {
      out.push_back(s[i++]);
      continue;
    }
    std::string inner = s.substr(j + 1, close - j - 1);
    std::erase(inner, ' ');
    const auto slash = inner.find('/');
    auto is_int = [](std::string_view v) {
      return !v.empty() &&
             std::all_of(v.begin(), v.end(), [](unsigned char c) {
               return std::isdigit(c);
             });
    };
    auto is_number = [](std::string_view v) {
      if (!v.empty() && v.front() == '-') v.remove_prefix(1);
      if (v.empty()) return false;
      bool dot = false;
      for (unsigned char c : v) {
        if (c == '.') {
          if (dot) return false;
          dot = true;
        } else if (!std::isdigit(c)) {
          return false;
        }
      }
      return true;
    };
    std::string flat;
    if (slash != std::string::npos && is_int(inner.substr(0, slash)) &&
        is_int(inner.substr(slash + 1))) {
      const double p = std::stod(inner.substr(0, slash));
      const double q = std::stod(inner.substr(slash + 1));
      if (q != 0.0) flat = render_number(p / q);
    } else if (is_number(inner) ||
               (inner.size() == 1 &&
                std::islower(static_cast<unsigned char>(inner[0])))) {
      flat = inner;
    }
    if (flat.empty()) {
      out.append(s, i, close - i + 1);
    } else {
      out.push_back('^');
      out += flat;
    }
    i = close + 1;
  }
  s = std::move(out);
}

// Gives a bare "sqrt X" (unicode-sourced) its parentheses.
inline void wrap_bare_sqrt(std::string& s) {
  std::size_t pos = 0;
  while ((pos = s.find("sqrt", pos)) != std::string::npos) {
    const bool word_start =
        pos == 0 || !std::isalpha(static_cast<unsigned char>(s[pos - 1]));
    std::size_t j = pos + 4;
    if (!word_start) {
      pos = j;
      continue;
    }
    while (j < s.size() && s[j] == ' ') ++j;
    if (j < s.size() && s[j] != '(' &&
        std::isalnum(static_cast<unsigned char>(s[j]))) {
      s.insert(j + 1, ")");
      s.insert(j, "(");
    }
    pos += 4;
  }
}

inline bool is_known_function(std::string_view word) {
  for (const auto& [name, fn] : kFuncTable) {
    (void)fn;
    if (word == name) return true;
  }
  return word == "ln" || word == "atan";
}

inline std::string_view canonical_function(std::string_view word) {
  if (word == "ln") return "log";
  if (word == "atan") return "arctan";
  return word;
}

}  // namespace detail

// Normalizes one line of model output into equation text the DSL parser can
// read: unicode glyphs and LaTeX commands are mapped, brace exponents are
// flattened, glued-together symbols gain explicit '*'.
inline std::string normalize_math_text(std::string_view raw) {
  std::string s(raw);
  detail::map_unicode_math(s);
  detail::expand_frac(s);
  s = detail::strip_latex_commands(s);
  std::erase(s, '$');
  detail::replace_all(s, "{", "(");
  detail::replace_all(s, "}", ")");
  detail::simplify_exponents(s);
  detail::wrap_bare_sqrt(s);

  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) ||
                        s.back() == '.' || s.back() == ',' ||
                        s.back() == ';' || s.back() == ':' ||
                        s.back() == '!' || s.back() == '?')) {
    s.pop_back();
  }

  // Token pass: split glued letter runs, keep differential keywords atomic,
  // and insert the multiplications mathematical shorthand leaves implicit.
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) ||
                              s[j] == '.')) {
        ++j;
      }
      tokens.push_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() &&
             std::isalpha(static_cast<unsigned char>(s[j]))) {
        ++j;
      }
      const std::string run = s.substr(i, j - i);
      std::size_t k = j;
      while (k < s.size() && s[k] == ' ') ++k;
      const bool before_paren = k < s.size() && s[k] == '(';
      if (run == "dS" || run == "dt" || run == "dW" || run == "dJ") {
        tokens.push_back(run);
      } else if (before_paren) {
        // The longest known function name spelled at the end of the run is
        // the callee; any letters in front of it are glued-on coefficients.
        std::size_t split = run.size();
        for (std::size_t len = std::min<std::size_t>(run.size(), 6); len >= 2;
             --len) {
          const std::string_view tail(run.data() + run.size() - len, len);
          if (detail::is_known_function(tail)) {
            split = run.size() - len;
            break;
          }
        }
        for (std::size_t p = 0; p < split; ++p) tokens.push_back(std::string(1, run[p]));
        if (split < run.size()) {
          tokens.emplace_back(detail::canonical_function(
              std::string_view(run).substr(split)));
        }
      } else {
        for (char letter : run) tokens.push_back(std::string(1, letter));
      }
      i = j;
      continue;
    }
    tokens.push_back(std::string(1, c));
    ++i;
  }

  auto is_value_end = [](const std::string& t) {
    if (t == ")") return true;
    if (t == "dS" || t == "dt" || t == "dW" || t == "dJ") return false;
    const unsigned char c = static_cast<unsigned char>(t[0]);
    return std::isalnum(c) && !detail::is_known_function(t) &&
           (t.size() == 1 || std::isdigit(c) || t[0] == '.');
  };
  auto is_value_start = [](const std::string& t) {
    if (t == "(") return true;
    if (t == "dS" || t == "dt" || t == "dW" || t == "dJ") return false;
    const unsigned char c = static_cast<unsigned char>(t[0]);
    return std::isalnum(c) || c == '.';
  };

  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k > 0) {
      const bool caret_adjacent = tokens[k - 1] == "^" || tokens[k] == "^";
      if (!caret_adjacent && is_value_end(tokens[k - 1]) &&
          is_value_start(tokens[k])) {
        out += " *";
      }
      out.push_back(' ');
    }
    out += tokens[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reply parsers.
// ---------------------------------------------------------------------------

// Pulls every parseable "dS = ..." candidate out of a free-form reply.  Lines
// that look like equations but do not parse are reported through `warnings`;
// a reply with zero parseable models is an error.
inline std::vector<SdeModel> parse_suggestions(
    const std::string& raw, std::vector<std::string>* warnings = nullptr) {
  std::vector<SdeModel> out;
  std::istringstream lines(raw);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::string normalized = normalize_math_text(line);
    const std::size_t at = normalized.find("dS ");
    if (at == std::string::npos) continue;
    const std::string candidate = normalized.substr(at);
    try {
      out.push_back(parse_model(candidate));
    } catch (const ParseError& e) {
      if (warnings != nullptr) {
        warnings->push_back("line " + std::to_string(line_no) + ": " +
                            e.what() + " in \"" + candidate + "\"");
      }
    }
  }
  if (out.empty()) {
    throw AgentError("reply contained no parseable model suggestions");
  }
  return out;
}

namespace detail {

inline std::string lowercase(std::string_view in) {
  std::string out(in);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline bool word_at(const std::string& hay, std::size_t pos,
                    std::string_view word) {
  if (hay.compare(pos, word.size(), word) != 0) return false;
  const bool left_ok =
      pos == 0 || !std::isalpha(static_cast<unsigned char>(hay[pos - 1]));
  const std::size_t end = pos + word.size();
  const bool right_ok =
      end >= hay.size() || !std::isalpha(static_cast<unsigned char>(hay[end]));
  return left_ok && right_ok;
}

inline std::optional<TradeSignal> first_signal_word(const std::string& lower,
                                                    std::size_t from) {
  std::optional<TradeSignal> found;
  std::size_t best = std::string::npos;
  const std::pair<std::string_view, TradeSignal> words[] = {
      {"buy", TradeSignal::Buy},
      {"sell", TradeSignal::Sell},
      {"hold", TradeSignal::Hold},
  };
  for (const auto& [word, sig] : words) {
    std::size_t pos = from;
    while ((pos = lower.find(word, pos)) != std::string::npos) {
      if (word_at(lower, pos, word)) {
        if (pos < best) {
          best = pos;
          found = sig;
        }
        break;
      }
      ++pos;
    }
  }
  return found;
}

}  // namespace detail

// Reads the trader's verdict: the last line carrying "Decision:" and one of
// BUY/SELL/HOLD wins.  A reply with no such line is undecidable and throws;
// callers that must act anyway map that to a logged hold.
inline TradeSignal parse_trade_decision(const std::string& raw) {
  std::optional<TradeSignal> verdict;
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    const std::string lower = detail::lowercase(line);
    const std::size_t at = lower.find("decision");
    if (at == std::string::npos) continue;
    if (const auto sig = detail::first_signal_word(lower, at + 8)) {
      verdict = *sig;
    }
  }
  if (!verdict) {
    throw AgentError(
        "trade decision is undecidable: no \"Decision:\" line with "
        "BUY/SELL/HOLD");
  }
  return *verdict;
}

namespace detail {

struct IntegerHit {
  long long value = 0;
  std::size_t pos = 0;
  bool over_100 = false;  // written as "<n>/100"
};

inline std::vector<IntegerHit> find_integers(const std::string& text) {
  std::vector<IntegerHit> hits;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    if (i > 0 && (std::isalpha(static_cast<unsigned char>(text[i - 1])) ||
                  text[i - 1] == '.')) {
      while (i < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i]))) {
        ++i;
      }
      continue;
    }
    std::size_t j = i;
    long long v = 0;
    while (j < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[j]))) {
      if (v < 1000000) v = v * 10 + (text[j] - '0');
      ++j;
    }
    if (j < text.size() && text[j] == '.' && j + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
      i = j + 1;  // decimal, not an integer score
      continue;
    }
    IntegerHit hit{v, i, false};
    std::size_t k = j;
    while (k < text.size() && text[k] == ' ') ++k;
    if (k < text.size() && text[k] == '/') {
      ++k;
      while (k < text.size() && text[k] == ' ') ++k;
      if (text.compare(k, 3, "100") == 0 &&
          (k + 3 >= text.size() ||
           !std::isdigit(static_cast<unsigned char>(text[k + 3])))) {
        hit.over_100 = true;
      }
    }
    hits.push_back(hit);
    i = j;
  }
  return hits;
}

}  // namespace detail

// Recovers a 0-100 novelty score from scorer prose.  Preference order: the
// last "<n>/100" total anywhere, then the last integer on the last line that
// mentions "score" (taking a fraction's numerator), then the last integer in
// the reply.  Values clamp into [0, 100]; a reply without digits throws.
inline int parse_novelty(const std::string& raw) {
  auto clamp_score = [](long long v) {
    return static_cast<int>(std::clamp<long long>(v, 0, 100));
  };
  const auto all = detail::find_integers(raw);
  if (all.empty()) {
    throw AgentError("no novelty score found in reply");
  }
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    if (it->over_100) return clamp_score(it->value);
  }
  std::istringstream lines(raw);
  std::string line;
  std::string last_score_line;
  while (std::getline(lines, line)) {
    if (detail::lowercase(line).find("score") != std::string::npos &&
        !detail::find_integers(line).empty()) {
      last_score_line = line;
    }
  }
  if (!last_score_line.empty()) {
    const auto hits = detail::find_integers(last_score_line);
    // "35/50" style awards mean the numerator; find the last fraction.
    for (std::size_t k = hits.size(); k-- > 1;) {
      const auto& denom = hits[k];
      const auto& numer = hits[k - 1];
      const std::string_view between(
          last_score_line.data() + numer.pos,
          denom.pos - numer.pos);
      if (between.find('/') != std::string_view::npos) {
        return clamp_score(numer.value);
      }
    }
    return clamp_score(hits.back().value);
  }
  return clamp_score(all.back().value);
}

// ---------------------------------------------------------------------------
// News analysis.
// ---------------------------------------------------------------------------

struct NewsAnalysis {
  std::vector<std::string> pros;
  std::vector<std::string> cons;
  Stance stance = Stance::Mixed;

  bool operator==(const NewsAnalysis&) const = default;
};

namespace detail {

inline const std::string_view kBullishCues[] = {
    "surge",  "rally",     "record profit", "beat",   "beats",
    "upgrade", "soar",     "growth",        "strong", "exceed",
    "breakthrough", "outperform", "profit jump", "all-time high",
};

inline const std::string_view kBearishCues[] = {
    "plunge", "drop",   "miss",    "downgrade", "lawsuit", "recall",
    "crash",  "bubble", "probe",   "decline",   "weak",    "fall",
    "slump",  "fraud",  "layoff",  "warning",   "selloff", "default",
};

inline int cue_hits(const std::string& lower,
                    std::span<const std::string_view> cues) {
  int n = 0;
  for (std::string_view cue : cues) {
    if (lower.find(cue) != std::string::npos) ++n;
  }
  return n;
}

}  // namespace detail

// Deterministic keyword-lexicon analyst: no model call, same items always
// produce the same verdict.
inline NewsAnalysis analyze_news_mock(std::span<const NewsItem> items) {
  NewsAnalysis out;
  int bull = 0;
  int bear = 0;
  for (const NewsItem& item : items) {
    const std::string lower =
        detail::lowercase(item.headline + " " + item.summary);
    const int b = detail::cue_hits(lower, detail::kBullishCues);
    const int r = detail::cue_hits(lower, detail::kBearishCues);
    bull += b;
    bear += r;
    if (b > 0) out.pros.push_back(item.headline);
    if (r > 0) out.cons.push_back(item.headline);
  }
  out.stance = bull > bear   ? Stance::Bullish
               : bear > bull ? Stance::Bearish
                             : Stance::Mixed;
  return out;
}

// Interprets an analyst reply.  Labeled "Stance:"/"Pros:"/"Cons:" sections are
// honored when present; free-paragraph replies fall back to the cue lexicon so
// unlabeled prose is still accepted.
inline NewsAnalysis parse_news_analysis(const std::string& raw) {
  NewsAnalysis out;
  std::optional<Stance> labeled_stance;
  bool labeled_sections = false;
  enum class Section { None, Pros, Cons } section = Section::None;
  std::istringstream lines(raw);
  std::string line;
  std::vector<std::string> paragraphs{std::string()};
  while (std::getline(lines, line)) {
    const std::string lower = detail::lowercase(line);
    if (line.empty()) {
      if (!paragraphs.back().empty()) paragraphs.emplace_back();
      continue;
    }
    if (lower.starts_with("stance")) {
      if (lower.find("bullish") != std::string::npos) {
        labeled_stance = Stance::Bullish;
      } else if (lower.find("bearish") != std::string::npos) {
        labeled_stance = Stance::Bearish;
      } else if (lower.find("mixed") != std::string::npos) {
        labeled_stance = Stance::Mixed;
      }
      section = Section::None;
      continue;
    }
    if (lower.starts_with("pros")) {
      section = Section::Pros;
      labeled_sections = true;
      continue;
    }
    if (lower.starts_with("cons")) {
      section = Section::Cons;
      labeled_sections = true;
      continue;
    }
    std::string body = line;
    while (!body.empty() && (body.front() == '-' || body.front() == '*' ||
                             body.front() == ' ')) {
      body.erase(body.begin());
    }
    if (section == Section::Pros && !body.empty()) {
      out.pros.push_back(body);
    } else if (section == Section::Cons && !body.empty()) {
      out.cons.push_back(body);
    } else {
      if (!paragraphs.back().empty()) paragraphs.back().push_back(' ');
      paragraphs.back() += line;
    }
  }

  if (!labeled_sections) {
    for (const std::string& para : paragraphs) {
      if (para.empty()) continue;
      const std::string lower = detail::lowercase(para);
      const int b = detail::cue_hits(lower, detail::kBullishCues);
      const int r = detail::cue_hits(lower, detail::kBearishCues);
      if (b > r) out.pros.push_back(para);
      if (r > b) out.cons.push_back(para);
    }
  }
  if (labeled_stance) {
    out.stance = *labeled_stance;
  } else {
    const std::string lower = detail::lowercase(raw);
    const int bull = detail::cue_hits(lower, detail::kBullishCues);
    const int bear = detail::cue_hits(lower, detail::kBearishCues);
    out.stance = bull > bear   ? Stance::Bullish
                 : bear > bull ? Stance::Bearish
                               : Stance::Mixed;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompt templates: data, not code.  Files under a prompt directory override
// the embedded defaults; placeholders use {{name}}.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSuggestorPrompt = R"(You are a quantitative researcher proposing stochastic differential equation models for an asset price S.

Already-tested models:
{{memory_digest}}

Recent market statistics:
{{stats_digest}}

Propose {{budget}} new one-dimensional SDE models that are structurally different from every already-tested model. Use single lowercase letters for free parameters, S for the state, and t for time. Write each model on its own line in exactly this form:

dS = <drift expression> dt + <diffusion expression> dW

Allowed functions: sqrt, log, exp, sin, cos, tanh, arctan, abs. No prose between the lines.
)";

inline constexpr std::string_view kSummarizerPrompt = R"(You are documenting a calibrated stochastic model of an asset price.

Model: {{model}}
Fitted parameters: {{params}}
Fit metrics versus history: {{metrics_digest}}

In at most five bullet points, describe in plain English how this model behaves: the shape of its drift, how its volatility scales with the price level, any mean reversion or saturation, and where it fits the data well or poorly.
)";

inline constexpr std::string_view kScorerPrompt = R"(You are scoring a candidate stochastic model of an asset price.

Candidate: {{model}}
Previously tested models:
{{memory_digest}}
Fit metrics versus history: {{metrics_digest}}

Award an integer novelty sub-score out of 50 (structural difference from the tested models) and an integer metrics sub-score out of 50 (quality of fit). Explain each briefly, then finish with a single line in exactly this form:

Total: <novelty + metrics>/100
)";

inline constexpr std::string_view kNewsAnalystPrompt = R"(You are a financial news analyst. Review the following items about {{symbol}}:

{{news_block}}

List the bullish arguments under "Pros:", the bearish arguments under "Cons:", and finish with a single line "Stance: bullish", "Stance: bearish", or "Stance: mixed".
)";

inline constexpr std::string_view kTraderPrompt = R"(You are a cautious portfolio manager holding {{position}} units and {{cash}} in cash.

Market model: {{model}}
Risk metrics: VaR {{var}}, CVaR {{cvar}}, EVT VaR {{evt_var}}, EVT CVaR {{evt_cvar}}, max drawdown {{mdd}}
Trend: RSI {{rsi}}, drift {{drift}}
News stance: {{stance}}
News summary:
{{news_digest}}

Weigh the trend against tail risk and the news. Explain your reasoning in a short paragraph, then finish with a single line in exactly this form:

Decision: BUY or SELL or HOLD
)";

inline std::string_view default_prompt(std::string_view name) {
  if (name == "suggestor") return kSuggestorPrompt;
  if (name == "summarizer") return kSummarizerPrompt;
  if (name == "scorer") return kScorerPrompt;
  if (name == "news_analyst") return kNewsAnalystPrompt;
  if (name == "trader") return kTraderPrompt;
  throw AgentError("unknown prompt role: " + std::string(name));
}

// Loads "<dir>/<name>.txt" when present, else the embedded default.
inline std::string load_prompt(std::string_view name,
                               const std::filesystem::path& dir = {}) {
  if (!dir.empty()) {
    const std::filesystem::path path = dir / (std::string(name) + ".txt");
    std::ifstream in(path);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    }
  }
  return std::string(default_prompt(name));
}

// Substitutes {{key}} placeholders; an unresolved placeholder is an error so
// template/code drift is caught immediately.
inline std::string render_prompt(
    std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out(tmpl);
  for (const auto& [key, value] : values) {
    detail::replace_all(out, "{{" + key + "}}", value);
  }
  const auto open = out.find("{{");
  if (open != std::string::npos) {
    const auto close = out.find("}}", open);
    const std::string name = close == std::string::npos
                                 ? out.substr(open)
                                 : out.substr(open + 2, close - open - 2);
    throw AgentError("unresolved prompt placeholder: " + name);
  }
  return out;
}

// Renders news items into the block shape the analyst/trader prompts expect.
inline std::string render_news_block(std::span<const NewsItem> items) {
  std::string out;
  for (const NewsItem& item : items) {
    const Date d = Date::from_serial(item.timestamp / 86400);
    out += "- " + d.to_string() + " [" + item.source + "] " + item.headline;
    if (!item.summary.empty()) {
      out += " -- " + item.summary;
    }
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Proposer interface + the LLM-backed implementation.
// ---------------------------------------------------------------------------

struct ProposerContext {
  std::vector<std::string> tested_sources;  // canonical render of past models
  std::string stats_digest;
  int budget = 3;
};

// One candidate model plus its suggested starting parameters; an empty init
// means "derive a default from the data".
struct Proposal {
  SdeModel model;
  std::vector<double> init;
};

class ModelProposer {
 public:
  virtual ~ModelProposer() = default;
  // Returns up to ctx.budget fresh candidates; empty means exhausted (or, for
  // model-backed proposers, nothing parseable this round).
  virtual std::vector<Proposal> suggest(const ProposerContext& ctx) = 0;
};

// Shared knobs for every model-backed agent: transport settings plus an
// optional prompt-override directory.
struct AgentConfig {
  LlmRequest request;
  std::filesystem::path prompt_dir;
};

inline LlmResponse run_agent(Transport& transport, const AgentConfig& cfg,
                             std::string_view role,
                             const std::map<std::string, std::string>& values) {
  LlmRequest req = cfg.request;
  req.system_text.clear();
  req.user_text = render_prompt(load_prompt(role, cfg.prompt_dir), values);
  return llm_complete(req, transport);
}

class LlmProposer final : public ModelProposer {
 public:
  LlmProposer(Transport& transport, AgentConfig cfg)
      : transport_(&transport), cfg_(std::move(cfg)) {}

  std::vector<Proposal> suggest(const ProposerContext& ctx) override {
    std::string memory;
    for (const std::string& src : ctx.tested_sources) {
      memory += "- " + src + "\n";
    }
    if (memory.empty()) memory = "(none yet)\n";
    const LlmResponse reply = run_agent(
        *transport_, cfg_, "suggestor",
        {{"memory_digest", memory},
         {"stats_digest", ctx.stats_digest},
         {"budget", std::to_string(ctx.budget)}});
    warnings_.clear();
    std::vector<SdeModel> models = parse_suggestions(reply.text, &warnings_);
    if (static_cast<int>(models.size()) > ctx.budget) {
      models.resize(static_cast<std::size_t>(ctx.budget));
    }
    std::vector<Proposal> out;
    out.reserve(models.size());
    for (SdeModel& m : models) {
      out.push_back(Proposal{std::move(m), {}});
    }
    return out;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Transport* transport_;
  AgentConfig cfg_;
  std::vector<std::string> warnings_;
};

}  // namespace sdekit
