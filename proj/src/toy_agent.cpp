#include "refineloop/toy_agent.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "refineloop/synthkb.hpp"
#include "refineloop/text.hpp"
#include "refineloop/trajectory.hpp"

namespace refineloop {

using nlohmann::json;

namespace {

const std::vector<std::string> kGlueWords = {
    "the", "of",  "is",     "in",     "what",   "a",       "no",     "found",
    "and", "for", "volume", "chapter", "section", "records", "about", "fact"};

constexpr int kMaxSegmentSymbols = 256;

}  // namespace

int ToyAgentVocab::question_marker(int hops) const {
  int h = std::clamp(hops, 1, kMaxHops);
  return ids.at("#q" + std::to_string(h));
}

int ToyAgentVocab::state_marker(int hops, int searches) const {
  int h = std::clamp(hops, 1, kMaxHops);
  int k = std::clamp(searches, 0, kMaxSearchMarker);
  return ids.at("#h" + std::to_string(h) + "k" + std::to_string(k));
}

bool ToyAgentVocab::is_close_tag(int id) const {
  return id == think_close || id == search_close || id == documents_close ||
         id == refine_close || id == answer_close;
}

bool ToyAgentVocab::is_open_tag(int id) const {
  return id == think_open || id == search_open || id == documents_open || id == refine_open ||
         id == answer_open;
}

int ToyAgentVocab::close_of(int open_id) const {
  if (open_id == think_open) return think_close;
  if (open_id == search_open) return search_close;
  if (open_id == documents_open) return documents_close;
  if (open_id == refine_open) return refine_close;
  if (open_id == answer_open) return answer_close;
  return -1;
}

ToyAgentVocab build_toy_vocab(const std::vector<std::string>& entities,
                              const std::vector<std::string>& relations) {
  ToyAgentVocab v;
  auto add = [&](const std::string& s, ToyAgentVocab::SymClass c) {
    auto it = v.ids.find(s);
    if (it != v.ids.end()) return it->second;
    int id = static_cast<int>(v.symbols.size());
    v.symbols.push_back(s);
    v.classes.push_back(c);
    v.ids[s] = id;
    return id;
  };

  using C = ToyAgentVocab::SymClass;
  v.think_open = add("<think>", C::tag);
  v.think_close = add("</think>", C::tag);
  v.search_open = add("<search>", C::tag);
  v.search_close = add("</search>", C::tag);
  v.documents_open = add("<documents>", C::tag);
  v.documents_close = add("</documents>", C::tag);
  v.refine_open = add("<refine>", C::tag);
  v.refine_close = add("</refine>", C::tag);
  v.answer_open = add("<answer>", C::tag);
  v.answer_close = add("</answer>", C::tag);

  v.p_plan = add("@plan", C::pointer);
  v.p_topic = add("@topic", C::pointer);
  v.p_naive = add("@naive", C::pointer);
  v.p_query = add("@query", C::pointer);
  v.p_fact = add("@fact", C::pointer);
  v.p_first = add("@first", C::pointer);
  v.p_result = add("@result", C::pointer);

  for (int h = 1; h <= ToyAgentVocab::kMaxHops; ++h) {
    add("#q" + std::to_string(h), C::marker);
    for (int k = 0; k <= ToyAgentVocab::kMaxSearchMarker; ++k) {
      add("#h" + std::to_string(h) + "k" + std::to_string(k), C::marker);
    }
  }
  v.unk = add("<unk>", C::unk);

  std::set<std::string> words;
  for (const std::string& name : entities) {
    for (const std::string& w : tokenize_ws(name)) words.insert(w);
  }
  for (const std::string& name : relations) {
    for (const std::string& w : tokenize_ws(name)) words.insert(w);
  }
  words.insert(kGlueWords.begin(), kGlueWords.end());
  for (const std::string& w : words) add(w, C::word);
  return v;
}

AgentPrior::AgentPrior(std::shared_ptr<const ToyAgentVocab> vocab, TemplateMode mode)
    : vocab_(std::move(vocab)), mode_(mode) {}

std::string AgentPrior::kind() const {
  return mode_ == TemplateMode::refine ? "agent-v1" : "agent-v1-norefine";
}

std::vector<double> AgentPrior::row(int prev2, int prev1) const {
  const ToyAgentVocab& v = *vocab_;
  std::vector<double> z(v.size(), 0.0);
  using C = ToyAgentVocab::SymClass;

  auto cls = [&](int id) {
    if (id < 0 || id >= static_cast<int>(v.size())) return C::unk;
    return v.classes[static_cast<std::size_t>(id)];
  };

  // Symbols the policy itself must never emit.
  z[static_cast<std::size_t>(v.documents_open)] = kBanned;
  z[static_cast<std::size_t>(v.documents_close)] = kBanned;
  if (mode_ == TemplateMode::no_refine) {
    z[static_cast<std::size_t>(v.refine_open)] = kBanned;
    z[static_cast<std::size_t>(v.refine_close)] = kBanned;
  }

  auto boost = [&](int id, double amount) {
    double& cell = z[static_cast<std::size_t>(id)];
    if (cell > kBanned / 2) cell += amount;
  };

  if (prev1 == ToySoftmaxPolicy::kBos || cls(prev1) == C::marker) {
    // Decision point: open the next block or answer.
    boost(v.think_open, kDecisionBoost);
    boost(v.search_open, kDecisionBoost);
    boost(v.answer_open, kDecisionBoost);
    if (mode_ == TemplateMode::refine) boost(v.refine_open, kDecisionBoost - 2.0);
    return z;
  }
  if (prev1 == v.think_open) {
    boost(v.p_plan, kChoiceBoost);
    boost(v.p_topic, kChoiceBoost - 1.0);
    return z;
  }
  if (prev1 == v.search_open) {
    boost(v.p_query, kChoiceBoost);
    boost(v.p_naive, kChoiceBoost);
    boost(v.p_topic, kChoiceBoost);
    return z;
  }
  if (prev1 == v.refine_open) {
    boost(v.p_fact, kChoiceBoost);
    boost(v.p_first, kChoiceBoost);
    boost(v.p_topic, kChoiceBoost);
    return z;
  }
  if (prev1 == v.answer_open) {
    boost(v.p_result, kChoiceBoost);
    boost(v.p_topic, kChoiceBoost);
    boost(v.p_first, kChoiceBoost);
    return z;
  }
  if (v.is_open_tag(prev2)) {
    // One content symbol emitted so far: close the block.
    int close = v.close_of(prev2);
    if (close >= 0) boost(close, kCloseBoost);
    return z;
  }
  // Deeper inside a block (or lost): nudge toward closing something.
  boost(v.think_close, kLooseCloseBoost);
  boost(v.search_close, kLooseCloseBoost);
  boost(v.refine_close, kLooseCloseBoost);
  boost(v.answer_close, kLooseCloseBoost);
  return z;
}

namespace {

/// Per-rollout generation state: parses the question, tracks the entity chase
/// across documents blocks, renders pointer symbols, and records the symbol
/// stream with origins and context keys.
class ToyAgentSession : public PolicySession {
 public:
  ToyAgentSession(const ToyAgentPolicy& agent, const std::string& prompt, std::uint64_t seed)
      : agent_(agent), vocab_(agent.vocab()), rng_(seed) {
    question_ = question_from_prompt(prompt).value_or(prompt);
    if (auto shape = parse_question(question_)) {
      head_entity_ = shape->head_entity;
      relations_inner_first_.assign(shape->relations_outer_first.rbegin(),
                                    shape->relations_outer_first.rend());
    } else {
      head_entity_ = question_;
    }
    chase_entity_ = head_entity_;
    hops_ = std::max<std::size_t>(relations_inner_first_.size(), 1);
    push(vocab_.question_marker(static_cast<int>(hops_)), /*engine=*/true);
  }

  PolicySample generate(const GenerationRequest& req) override {
    PolicySample sample;
    int stop_search = -1;
    int stop_answer = -1;
    for (const std::string& stop : req.stop_sequences) {
      if (stop == "</search>") stop_search = vocab_.search_close;
      if (stop == "</answer>") stop_answer = vocab_.answer_close;
    }

    std::size_t ws_emitted = 0;
    for (int n = 0; n < kMaxSegmentSymbols; ++n) {
      if (ws_emitted >= static_cast<std::size_t>(req.max_new_tokens)) break;
      auto key = ToySoftmaxPolicy::context_key(prev2_, prev1_);
      int sym = agent_.table().sample(key, req.temperature, rng_);
      double lp = push(sym, /*engine=*/false);
      sample.tokens.push_back(sym);
      sample.logprobs.push_back(lp);

      std::string rendered = render(sym);
      append_text(sample.text, rendered);
      ws_emitted += count_ws_tokens(rendered);

      if (sym == stop_search || sym == stop_answer) {
        sample.stop_hit = vocab_.symbols[static_cast<std::size_t>(sym)];
        break;
      }
      if (vocab_.is_close_tag(sym)) {
        push(vocab_.state_marker(static_cast<int>(hops_), searches_), /*engine=*/true);
      }
    }
    return sample;
  }

  void observe(std::string_view engine_text) override {
    push(vocab_.documents_open, /*engine=*/true);
    std::string content(engine_text);
    const std::string open = "<documents>";
    const std::string close = "</documents>";
    std::size_t a = content.find(open);
    std::size_t b = content.rfind(close);
    if (a != std::string::npos && b != std::string::npos && b >= a + open.size()) {
      content = content.substr(a + open.size(), b - a - open.size());
    }
    for (const std::string& w : tokenize_ws(content)) {
      auto it = vocab_.ids.find(w);
      push(it != vocab_.ids.end() ? it->second : vocab_.unk, /*engine=*/true);
    }
    push(vocab_.documents_close, /*engine=*/true);
    ++searches_;
    last_docs_ = content;
    first_snippet_ = truncate_ws_tokens(content, 12);
    scan_for_fact(content);
    push(vocab_.state_marker(static_cast<int>(hops_), searches_), /*engine=*/true);
  }

  std::optional<ToyStream> stream() const override { return stream_; }

 private:
  double push(int sym, bool engine) {
    auto key = ToySoftmaxPolicy::context_key(prev2_, prev1_);
    double lp = agent_.table().logprob_key(key, sym);
    stream_.push_back(StreamToken{sym, key, engine, lp});
    prev2_ = prev1_;
    prev1_ = sym;
    return lp;
  }

  std::string render(int sym) const {
    const ToyAgentVocab& v = vocab_;
    using C = ToyAgentVocab::SymClass;
    C c = v.classes[static_cast<std::size_t>(sym)];
    if (c == C::marker || c == C::unk) return {};
    if (c == C::tag || c == C::word) return v.symbols[static_cast<std::size_t>(sym)];
    if (sym == v.p_plan) return "I will look for the missing fact step by step";
    if (sym == v.p_topic) return head_entity_;
    if (sym == v.p_naive) {
      if (relations_inner_first_.empty()) return head_entity_;
      return relations_inner_first_.back() + " of " + head_entity_;
    }
    if (sym == v.p_query) {
      if (relations_inner_first_.empty()) return head_entity_;
      std::size_t idx = std::min(hop_idx_, relations_inner_first_.size() - 1);
      return relations_inner_first_[idx] + " of " + chase_entity_;
    }
    if (sym == v.p_fact) {
      return last_matched_fact_.empty() ? "no relevant fact found" : last_matched_fact_;
    }
    if (sym == v.p_first) {
      return first_snippet_.empty() ? "no documents yet" : first_snippet_;
    }
    if (sym == v.p_result) return chase_entity_;
    return {};
  }

  static void append_text(std::string& text, const std::string& rendered) {
    if (rendered.empty()) return;
    bool glue = text.empty() || rendered.front() == '<' || text.back() == '>' ||
                std::isspace(static_cast<unsigned char>(text.back()));
    if (!glue) text.push_back(' ');
    text += rendered;
  }

  void scan_for_fact(const std::string& docs) {
    if (hop_idx_ >= relations_inner_first_.size()) return;
    const std::string pattern =
        "The " + relations_inner_first_[hop_idx_] + " of " + chase_entity_ + " is ";
    std::size_t at = docs.find(pattern);
    while (at != std::string::npos) {
      std::size_t start = at + pattern.size();
      std::size_t dot = docs.find('.', start);
      if (dot == std::string::npos) return;
      std::string candidate = docs.substr(start, dot - start);
      if (starts_with(candidate, "entity ")) {
        last_matched_fact_ = pattern + candidate + ".";
        chase_entity_ = candidate;
        ++hop_idx_;
        return;
      }
      at = docs.find(pattern, at + 1);
    }
  }

  const ToyAgentPolicy& agent_;
  const ToyAgentVocab& vocab_;
  std::mt19937_64 rng_;
  ToyStream stream_;
  int prev2_ = ToySoftmaxPolicy::kBos;
  int prev1_ = ToySoftmaxPolicy::kBos;

  std::string question_;
  std::string head_entity_;
  std::vector<std::string> relations_inner_first_;
  std::size_t hops_ = 1;
  std::string chase_entity_;
  std::size_t hop_idx_ = 0;
  int searches_ = 0;
  std::string last_docs_;
  std::string first_snippet_;
  std::string last_matched_fact_;
};

}  // namespace

ToyAgentPolicy::ToyAgentPolicy(std::shared_ptr<const ToyAgentVocab> vocab, TemplateMode mode)
    : vocab_(std::move(vocab)),
      mode_(mode),
      table_(vocab_->symbols, std::make_shared<AgentPrior>(vocab_, mode)) {}

ToyAgentPolicy::ToyAgentPolicy(std::shared_ptr<const ToyAgentVocab> vocab, TemplateMode mode,
                               ToySoftmaxPolicy table)
    : vocab_(std::move(vocab)), mode_(mode), table_(std::move(table)) {}

std::unique_ptr<PolicySession> ToyAgentPolicy::start(const std::string& prompt,
                                                     std::uint64_t seed) const {
  return std::make_unique<ToyAgentSession>(*this, prompt, seed);
}

void ToyAgentPolicy::save(const std::string& path) const {
  json rows = json::object();
  for (ToySoftmaxPolicy::CtxKey key : table_.row_keys()) {
    const std::vector<double> row = table_.logits_row(key);
    rows[std::to_string(key)] = row;
  }
  json j{{"format", "refineloop-toy-policy"},
         {"version", 1},
         {"mode", mode_ == TemplateMode::refine ? "refine" : "no_refine"},
         {"symbols", vocab_->symbols},
         {"rows", rows}};
  std::ofstream out(path);
  if (!out) throw CliError(CliErrorKind::IoError, "cannot write " + path);
  out << j.dump() << "\n";
}

ToyAgentPolicy ToyAgentPolicy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(CliErrorKind::IoError, "cannot open " + path);
  json j = json::parse(in);
  if (j.value("format", std::string{}) != "refineloop-toy-policy") {
    throw CliError(CliErrorKind::IoError, "unrecognized policy file");
  }
  TemplateMode mode =
      j.at("mode").get<std::string>() == "no_refine" ? TemplateMode::no_refine
                                                     : TemplateMode::refine;
  std::vector<std::string> symbols = j.at("symbols").get<std::vector<std::string>>();

  // Rebuild the vocabulary structurally from the symbol list: entity and
  // relation words are exactly the stored word-class symbols.
  std::vector<std::string> words;
  auto vocab_words = build_toy_vocab({}, {});
  for (const std::string& s : symbols) {
    if (vocab_words.ids.count(s)) continue;
    words.push_back(s);
  }
  auto vocab = std::make_shared<ToyAgentVocab>(build_toy_vocab({join(words, " ")}, {}));
  if (vocab->symbols != symbols) {
    throw CliError(CliErrorKind::IoError, "policy file vocabulary mismatch");
  }
  ToyAgentPolicy policy(vocab, mode);
  for (const auto& [key_str, row] : j.at("rows").items()) {
    policy.table_.set_row(std::stoull(key_str), row.get<std::vector<double>>());
  }
  return policy;
}

ToyAgentPolicy make_world_policy(const std::vector<std::string>& entities,
                                 const std::vector<std::string>& relations, TemplateMode mode) {
  auto vocab = std::make_shared<ToyAgentVocab>(build_toy_vocab(entities, relations));
  return ToyAgentPolicy(vocab, mode);
}

}  // namespace refineloop
